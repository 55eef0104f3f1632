import json
import os
import subprocess
import sys
import threading
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

from brickforge import BrickBitmask
from brickforge.service import create_app
from brickforge.vision import synth_render

REPO_SRC = str(Path(__file__).resolve().parents[1] / "src")


@pytest.fixture
def client():
    return TestClient(create_app())


@pytest.fixture
def session(client):
    return client.post("/sessions").json()["id"]


def upload_mask_render(client, sid, mask, seed=1, px=13, side="front"):
    img, _ = synth_render(mask, palette_seed=seed, px_per_cell=(px, px))
    return client.post(
        f"/sessions/{sid}/scan",
        files={"image": ("m.png", img.png_bytes(), "image/png")},
        data={"side": side},
    )


class TestSessions:
    def test_lifecycle(self, client):
        sid = client.post("/sessions").json()["id"]
        assert client.get(f"/sessions/{sid}").status_code == 200
        assert client.delete(f"/sessions/{sid}").status_code == 204
        assert client.get(f"/sessions/{sid}").status_code == 404

    def test_unknown_session_404_body(self, client):
        r = client.get("/sessions/nope")
        assert r.status_code == 404
        body = r.json()
        assert set(body) == {"stage", "code", "message"}

    def test_sessions_are_isolated(self, client):
        a = client.post("/sessions").json()["id"]
        b = client.post("/sessions").json()["id"]
        mask = BrickBitmask.from_text("2 2\n##\n##\n")
        upload_mask_render(client, a, mask)
        assert client.get(f"/sessions/{a}").json()["profiles"]
        assert not client.get(f"/sessions/{b}").json()["profiles"]


class TestScanEndpoint:
    def test_multipart_scan(self, client, session):
        mask = BrickBitmask.from_text("3 2\n###\n#.#\n")
        r = upload_mask_render(client, session, mask)
        assert r.status_code == 200, r.text
        body = r.json()
        assert (body["cols"], body["rows"]) == (3, 2)
        assert body["cells"] == mask.to_text()

    def test_raw_body_scan_with_query_side(self, client, session):
        mask = BrickBitmask.from_text("2 2\n##\n.#\n")
        img, _ = synth_render(mask, palette_seed=3, px_per_cell=(12, 12))
        r = client.post(
            f"/sessions/{session}/scan?side=top",
            content=img.png_bytes(),
            headers={"Content-Type": "image/png"},
        )
        assert r.status_code == 200
        assert r.json()["side"] == "top"

    def test_black_image_surfaces_stage(self, client, session):
        from brickforge.vision import RawImage

        img = RawImage(np.zeros((255, 300, 3), dtype=np.uint8))
        r = client.post(
            f"/sessions/{session}/scan?side=front",
            content=img.png_bytes(),
            headers={"Content-Type": "image/png"},
        )
        assert r.status_code == 422
        body = r.json()
        assert body["stage"] == "foreground"
        assert body["code"] == "no-model-found"

    def test_missing_side_422(self, client, session):
        r = client.post(f"/sessions/{session}/scan", content=b"xxxx")
        assert r.status_code == 422

    def test_undecodable_image_422(self, client, session):
        r = client.post(f"/sessions/{session}/scan?side=front", content=b"not a png")
        assert r.status_code == 422
        assert r.json()["stage"] == "preprocess"


class TestProfilesAndReconstruct:
    def test_hand_edited_profile_roundtrip(self, client, session):
        text = "3 2\n#.#\n###\n"
        r = client.put(f"/sessions/{session}/profiles/front", content=text)
        assert r.status_code == 200
        assert r.json()["cells"] == text
        state = client.get(f"/sessions/{session}").json()
        assert state["profiles"]["front"]["mask"] == ["#.#", "###"]

    def test_reconstruct_and_fetch_mesh(self, client, session):
        client.put(f"/sessions/{session}/profiles/front", content="2 2\n##\n##\n")
        r = client.post(
            f"/sessions/{session}/reconstruct",
            json={"method": "extrude", "params": {"depth_cells": 2}},
        )
        assert r.status_code == 200
        stage = r.json()["stage"]
        obj = client.get(f"/sessions/{session}/mesh/{stage}?format=obj")
        assert obj.status_code == 200
        assert obj.content.startswith(b"# brickforge")
        as_json = client.get(f"/sessions/{session}/mesh/{stage}?format=json").json()
        assert len(as_json["vertices"]) % 3 == 0
        assert len(as_json["triangles"]) % 3 == 0

    def test_triplanar_mismatch_409_names_axes(self, client, session):
        client.put(f"/sessions/{session}/profiles/front", content="2 2\n##\n##\n")
        client.put(
            f"/sessions/{session}/profiles/right", content="2 5\n##\n##\n##\n##\n##\n"
        )
        r = client.post(
            f"/sessions/{session}/reconstruct",
            json={"method": "triplanar", "params": {"sides": ["front", "right"]}},
        )
        assert r.status_code == 409
        body = r.json()
        assert body["code"] == "profile-mismatch"
        assert "front.rows=2" in body["message"] and "right.rows=5" in body["message"]

    def test_reconstruct_without_profiles_409(self, client, session):
        r = client.post(
            f"/sessions/{session}/reconstruct",
            json={"method": "extrude", "params": {"depth_cells": 1}},
        )
        assert r.status_code == 409

    def test_bad_params_422(self, client, session):
        client.put(f"/sessions/{session}/profiles/front", content="1 1\n#\n")
        r = client.post(
            f"/sessions/{session}/reconstruct",
            json={"method": "extrude", "params": {"depth_cells": 0}},
        )
        assert r.status_code == 422

    def test_malformed_json_400(self, client, session):
        r = client.post(
            f"/sessions/{session}/reconstruct",
            content=b"{nope",
            headers={"Content-Type": "application/json"},
        )
        assert r.status_code == 400


class TestPostAndAnalyze:
    def test_post_chain_and_analyze(self, client, session):
        client.put(f"/sessions/{session}/profiles/front", content="3 3\n###\n#.#\n###\n")
        client.post(
            f"/sessions/{session}/reconstruct",
            json={"method": "extrude", "params": {"depth_cells": 1}},
        )
        r = client.post(
            f"/sessions/{session}/post",
            json={"operation": "smooth", "params": {"iterations": 5}},
        )
        assert r.status_code == 200
        stage = r.json()["stage"]
        assert stage == 2
        report = client.get(f"/sessions/{session}/analyze/{stage}").json()
        assert report["analyze"]["watertight"]
        assert report["analyze"]["euler_characteristic"] == 0
        assert report["balance"] is not None

    def test_lattice_after_smooth_conflicts(self, client, session):
        client.put(f"/sessions/{session}/profiles/front", content="2 2\n##\n##\n")
        client.post(
            f"/sessions/{session}/reconstruct",
            json={"method": "extrude", "params": {"depth_cells": 2}},
        )
        client.post(
            f"/sessions/{session}/post", json={"operation": "smooth", "params": {}}
        )
        r = client.post(
            f"/sessions/{session}/post", json={"operation": "lattice", "params": {}}
        )
        assert r.status_code == 409

    def test_lattice_after_reconstruct(self, client, session):
        client.put(f"/sessions/{session}/profiles/front", content="2 2\n##\n##\n")
        client.post(
            f"/sessions/{session}/reconstruct",
            json={"method": "triplanar", "params": {"sides": ["front"], "default_depth_cells": 2}},
        )
        r = client.post(
            f"/sessions/{session}/post",
            json={"operation": "lattice", "params": {"thickness_mm": 2.0}},
        )
        assert r.status_code == 200, r.text

    def test_unknown_stage_404(self, client, session):
        assert client.get(f"/sessions/{session}/mesh/7").status_code == 404


class TestCliParity:
    def test_obj_bytes_identical_to_cli(self, client, session, tmp_path):
        mask_text = "2 2\n##\n#.\n"
        client.put(f"/sessions/{session}/profiles/front", content=mask_text)
        client.post(
            f"/sessions/{session}/reconstruct",
            json={"method": "extrude", "params": {"depth_cells": 3}},
        )
        client.post(
            f"/sessions/{session}/post",
            json={"operation": "smooth", "params": {"iterations": 10}},
        )
        service_obj = client.get(f"/sessions/{session}/mesh/2?format=obj").content

        (tmp_path / "mask.txt").write_text(mask_text)
        env = dict(os.environ, PYTHONPATH=REPO_SRC)
        subprocess.run(
            [sys.executable, "-m", "brickforge.cli", "reconstruct", "extrude",
             "--profile", str(tmp_path / "mask.txt"), "--depth", "3",
             "-o", str(tmp_path / "m.obj")],
            check=True, env=env, capture_output=True,
        )
        subprocess.run(
            [sys.executable, "-m", "brickforge.cli", "post", "smooth",
             "-i", str(tmp_path / "m.obj"), "--iterations", "10",
             "-o", str(tmp_path / "s.obj")],
            check=True, env=env, capture_output=True,
        )
        assert (tmp_path / "s.obj").read_bytes() == service_obj


class TestConcurrency:
    def test_parallel_sessions_do_not_interfere(self, client):
        sids = [client.post("/sessions").json()["id"] for _ in range(4)]
        masks = [f"{n} 1\n" + "#" * n + "\n" for n in (1, 2, 3, 4)]
        errors = []

        def work(sid, text, depth):
            try:
                client.put(f"/sessions/{sid}/profiles/front", content=text)
                r = client.post(
                    f"/sessions/{sid}/reconstruct",
                    json={"method": "extrude", "params": {"depth_cells": depth}},
                )
                assert r.status_code == 200
                report = client.get(f"/sessions/{sid}/analyze/1").json()
                expected = depth * text.split()[0].strip()
            except Exception as e:  # surface in main thread
                errors.append(e)

        threads = [
            threading.Thread(target=work, args=(sid, masks[i], i + 1))
            for i, sid in enumerate(sids)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        assert not errors
        # each session holds its own distinct geometry
        volumes = set()
        for i, sid in enumerate(sids):
            report = client.get(f"/sessions/{sid}/analyze/1").json()
            volumes.add(round(report["analyze"]["volume_mm3"], 3))
        assert len(volumes) == 4
