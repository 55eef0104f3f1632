import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pytest

from brickforge import BrickBitmask, Side
from brickforge.vision import PipelineConfig, RawImage, scan_profile, synth_render

REPO_SRC = str(Path(__file__).resolve().parents[1] / "src")


def run_cli(*args, env_extra=None, cwd=None):
    env = dict(os.environ, PYTHONPATH=REPO_SRC)
    env.pop("BRICKFORGE_KERNELS", None)
    if env_extra:
        env.update(env_extra)
    return subprocess.run(
        [sys.executable, "-m", "brickforge.cli", *args],
        capture_output=True,
        text=True,
        env=env,
        cwd=cwd,
    )


@pytest.fixture
def workdir(tmp_path):
    (tmp_path / "mask.txt").write_text("2 2\n##\n#.\n")
    return tmp_path


def stderr_json(result):
    lines = [l for l in result.stderr.strip().splitlines() if l.startswith("{")]
    return [json.loads(l) for l in lines]


class TestSynthScan:
    def test_synth_then_scan_recovers_mask_file(self, workdir):
        r = run_cli("synth", str(workdir / "mask.txt"), "--seed", "3",
                    "--px-per-cell", "12,12", "-o", str(workdir / "img.png"))
        assert r.returncode == 0, r.stderr
        assert (workdir / "img.png.truth.json").exists()
        r = run_cli("scan", str(workdir / "img.png"), "--side", "front",
                    "-o", str(workdir / "back.txt"))
        assert r.returncode == 0, r.stderr
        assert (workdir / "back.txt").read_text() == (workdir / "mask.txt").read_text()

    def test_scan_matches_library(self, workdir):
        run_cli("synth", str(workdir / "mask.txt"), "--seed", "4",
                "--px-per-cell", "11,11", "-o", str(workdir / "img.png"))
        run_cli("scan", str(workdir / "img.png"), "--side", "front",
                "-o", str(workdir / "cli.txt"))
        direct = scan_profile(RawImage.open(workdir / "img.png"), Side.FRONT, PipelineConfig())
        assert (workdir / "cli.txt").read_text() == direct.mask.to_text()

    def test_scan_black_image_exit_2(self, workdir):
        RawImage(np.zeros((255, 300, 3), dtype=np.uint8)).save(workdir / "black.png")
        r = run_cli("scan", str(workdir / "black.png"), "--side", "front",
                    "-o", str(workdir / "x.txt"))
        assert r.returncode == 2
        err = stderr_json(r)[-1]
        assert err["code"] == "no-model-found"
        assert err["stage"] == "foreground"

    def test_scan_without_white_brick_exit_3(self, workdir):
        pixels = np.zeros((255, 300, 3), dtype=np.uint8)
        pixels[100:150, 100:160] = (200, 70, 70)
        RawImage(pixels).save(workdir / "nowhite.png")
        r = run_cli("scan", str(workdir / "nowhite.png"), "--side", "front",
                    "-o", str(workdir / "x.txt"))
        assert r.returncode == 3
        assert stderr_json(r)[-1]["code"] == "reference-not-found"

    def test_debug_bundle(self, workdir):
        run_cli("synth", str(workdir / "mask.txt"), "-o", str(workdir / "img.png"))
        r = run_cli("scan", str(workdir / "img.png"), "--side", "front",
                    "-o", str(workdir / "p.txt"), "--debug-dir", str(workdir / "debug"))
        assert r.returncode == 0
        names = sorted(p.name for p in (workdir / "debug").iterdir())
        assert names == [
            "00-preprocessed.png",
            "01-quantized.png",
            "02-edges.png",
            "03-foreground.png",
        ]

    def test_config_file_overrides(self, workdir):
        (workdir / "cfg.txt").write_text(
            "# tuning\nocc_bogus = 1\n"
        )
        run_cli("synth", str(workdir / "mask.txt"), "-o", str(workdir / "img.png"))
        r = run_cli("scan", str(workdir / "img.png"), "--side", "front",
                    "--config", str(workdir / "cfg.txt"), "-o", str(workdir / "p.txt"))
        assert r.returncode == 5  # unknown config key -> invalid parameter
        (workdir / "cfg.txt").write_text("occupancy_threshold = 0.4\nblur_sigma = 1.0\n")
        r = run_cli("scan", str(workdir / "img.png"), "--side", "front",
                    "--config", str(workdir / "cfg.txt"), "-o", str(workdir / "p.txt"))
        assert r.returncode == 0


class TestReconstructAndPost:
    def test_extrude_volume_two_cells(self, tmp_path):
        (tmp_path / "one.txt").write_text("1 1\n#\n")
        r = run_cli("reconstruct", "extrude", "--profile", str(tmp_path / "one.txt"),
                    "--depth", "2", "-o", str(tmp_path / "m.obj"))
        assert r.returncode == 0, r.stderr
        r = run_cli("analyze", str(tmp_path / "m.obj"))
        report = json.loads(r.stdout)
        assert report["volume_mm3"] == pytest.approx(15.8 * 11.4 * 2 * 15.8, rel=1e-9)
        assert report["watertight"]

    def test_lathe_and_triplanar(self, tmp_path):
        (tmp_path / "p.txt").write_text("2 2\n##\n##\n")
        r = run_cli("reconstruct", "lathe", "--profile", str(tmp_path / "p.txt"),
                    "--axis", "left", "--segments", "32", "-o", str(tmp_path / "l.obj"))
        assert r.returncode == 0, r.stderr
        r = run_cli("reconstruct", "triplanar", "--front", str(tmp_path / "p.txt"),
                    "--right", str(tmp_path / "p.txt"), "-o", str(tmp_path / "t.obj"))
        assert r.returncode == 0, r.stderr

    def test_triplanar_mismatch_exit_6(self, tmp_path):
        (tmp_path / "a.txt").write_text("2 2\n##\n##\n")
        (tmp_path / "b.txt").write_text("2 5\n##\n##\n##\n##\n##\n")
        r = run_cli("reconstruct", "triplanar", "--front", str(tmp_path / "a.txt"),
                    "--right", str(tmp_path / "b.txt"), "-o", str(tmp_path / "t.obj"))
        assert r.returncode == 6
        assert stderr_json(r)[-1]["code"] == "profile-mismatch"

    def test_post_file_mode(self, tmp_path):
        (tmp_path / "p.txt").write_text("2 2\n##\n##\n")
        run_cli("reconstruct", "extrude", "--profile", str(tmp_path / "p.txt"),
                "--depth", "2", "-o", str(tmp_path / "m.obj"))
        r = run_cli("post", "smooth", "-i", str(tmp_path / "m.obj"),
                    "--iterations", "5", "-o", str(tmp_path / "s.obj"))
        assert r.returncode == 0, r.stderr
        r = run_cli("post", "scale", "-i", str(tmp_path / "m.obj"),
                    "--factor", "2", "-o", str(tmp_path / "x2.obj"))
        assert r.returncode == 0
        v1 = json.loads(run_cli("analyze", str(tmp_path / "m.obj")).stdout)["volume_mm3"]
        v2 = json.loads(run_cli("analyze", str(tmp_path / "x2.obj")).stdout)["volume_mm3"]
        assert v2 == pytest.approx(8 * v1, rel=1e-9)

    def test_post_merge(self, tmp_path):
        (tmp_path / "p.txt").write_text("1 1\n#\n")
        run_cli("reconstruct", "extrude", "--profile", str(tmp_path / "p.txt"),
                "--depth", "1", "-o", str(tmp_path / "m.obj"))
        r = run_cli("post", "merge", "-i", str(tmp_path / "m.obj"), "--kind", "sphere",
                    "--center", "8,6,8", "--size", "12", "-o", str(tmp_path / "u.obj"))
        assert r.returncode == 0, r.stderr

    def test_disconnected_warning_in_output(self, tmp_path):
        (tmp_path / "p.txt").write_text("3 1\n#.#\n")
        r = run_cli("reconstruct", "extrude", "--profile", str(tmp_path / "p.txt"),
                    "--depth", "1", "-o", str(tmp_path / "m.obj"))
        assert r.returncode == 0
        warnings = [j["warning"] for j in stderr_json(r) if "warning" in j]
        assert any("disconnected-profile" in w for w in warnings)

    def test_invalid_factor_exit_5(self, tmp_path):
        (tmp_path / "p.txt").write_text("1 1\n#\n")
        run_cli("reconstruct", "extrude", "--profile", str(tmp_path / "p.txt"),
                "--depth", "1", "-o", str(tmp_path / "m.obj"))
        r = run_cli("post", "scale", "-i", str(tmp_path / "m.obj"),
                    "--factor", "-3", "-o", str(tmp_path / "bad.obj"))
        assert r.returncode == 5


class TestProjectPipeline:
    def build_project(self, d: Path, epoch="1700000000"):
        env = {"SOURCE_DATE_EPOCH": epoch}
        (d / "mask.txt").write_text("2 2\n##\n#.\n")
        run_cli("synth", str(d / "mask.txt"), "--seed", "5", "-o", str(d / "img.png"),
                env_extra=env)
        run_cli("scan", str(d / "img.png"), "--side", "front", "-o", str(d / "p.txt"),
                "--project", str(d / "proj.bsp.json"), env_extra=env)
        run_cli("reconstruct", "extrude", "--profile", str(d / "p.txt"), "--depth", "3",
                "-o", str(d / "m.obj"), "--project", str(d / "proj.bsp.json"), env_extra=env)
        run_cli("post", "smooth", "--project", str(d / "proj.bsp.json"),
                "--iterations", "10", "-o", str(d / "s.obj"), env_extra=env)
        r = run_cli("pipeline", str(d / "proj.bsp.json"), "--out-dir", str(d / "out"),
                    env_extra=env)
        assert r.returncode == 0, r.stderr
        return r

    def test_pipeline_idempotent_and_deterministic(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        a.mkdir()
        b.mkdir()
        self.build_project(a)
        self.build_project(b)
        for name in ("proj.bsp.json", "m.obj", "s.obj"):
            assert (a / name).read_bytes() == (b / name).read_bytes()
        outs_a = sorted(p.name for p in (a / "out").iterdir())
        outs_b = sorted(p.name for p in (b / "out").iterdir())
        assert outs_a == outs_b
        for name in outs_a:
            assert (a / "out" / name).read_bytes() == (b / "out" / name).read_bytes()
        # second run changes nothing
        before = {p.name: p.read_bytes() for p in (a / "out").iterdir()}
        proj_before = (a / "proj.bsp.json").read_bytes()
        run_cli("pipeline", str(a / "proj.bsp.json"), "--out-dir", str(a / "out"),
                env_extra={"SOURCE_DATE_EPOCH": "1700000000"})
        assert (a / "proj.bsp.json").read_bytes() == proj_before
        for p in (a / "out").iterdir():
            assert p.read_bytes() == before[p.name]

    def test_export_from_project(self, tmp_path):
        self.build_project(tmp_path)
        r = run_cli("export", str(tmp_path / "proj.bsp.json"), "-o", str(tmp_path / "final.obj"))
        assert r.returncode == 0, r.stderr
        # export of the recorded chain equals the last staged mesh
        assert (tmp_path / "final.obj").read_bytes() == (
            tmp_path / "out" / "proj.stage02-smooth.obj"
        ).read_bytes()

    def test_pipeline_on_corrupt_project_exit_7(self, tmp_path):
        (tmp_path / "bad.bsp.json").write_text("{ nope")
        r = run_cli("pipeline", str(tmp_path / "bad.bsp.json"))
        assert r.returncode == 7

    def test_version_mismatch_exit_8(self, tmp_path):
        (tmp_path / "v9.bsp.json").write_text(json.dumps({"version": 9, "id": "x"}))
        r = run_cli("pipeline", str(tmp_path / "v9.bsp.json"))
        assert r.returncode == 8


class TestUsage:
    def test_unknown_flag_exit_64(self):
        r = run_cli("analyze", "--definitely-not-a-flag")
        assert r.returncode == 64
        assert "usage" in r.stderr.lower()

    def test_missing_file_exit_10(self, tmp_path):
        r = run_cli("analyze", str(tmp_path / "missing.obj"))
        assert r.returncode == 10

    def test_version_flag(self):
        r = run_cli("--version")
        assert r.returncode == 0
        assert "brickforge" in r.stdout
