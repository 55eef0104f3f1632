import io
import json

import pytest

from brickforge import BrickBitmask, CellDimensions, ParseError, Profile, Side, VersionError
from brickforge import project as prj


def sample_state() -> prj.ProjectState:
    state = prj.ProjectState(id="abc123", created="2026-08-10T00:00:00Z", modified="2026-08-10T00:00:00Z")
    cell = CellDimensions(10.0, 10.0, 10.0)
    state.profiles[Side.FRONT] = Profile(
        BrickBitmask.from_text("3 2\n###\n#.#\n"), Side.FRONT, cell, ("disconnected-profile: x",)
    )
    state.profiles[Side.RIGHT] = Profile(BrickBitmask.from_text("2 2\n##\n##\n"), Side.RIGHT, cell)
    state.profiles[Side.TOP] = Profile(BrickBitmask.from_text("3 2\n###\n###\n"), Side.TOP, cell)
    state.method = ("extrude", {"depth_cells": 2, "side": "front"})
    state.mesh_stages = [
        prj.StageRecord("extrude", {"depth_cells": 2}, "sha256:aa", "sha256:bb"),
        prj.StageRecord("smooth", {"iterations": 10}, "sha256:bb", "sha256:cc"),
    ]
    return state


class TestRoundTrip:
    def test_empty_project(self):
        state = prj.ProjectState(id="x")
        assert prj.load_str(prj.save_bytes(state).decode()) == state

    def test_full_project_field_exact(self):
        state = sample_state()
        back = prj.load_str(prj.save_bytes(state).decode())
        # structural equality oracle: compare the full JSON trees
        assert back.to_json_dict() == state.to_json_dict()
        assert back == state
        assert back.profiles[Side.FRONT].warnings == ("disconnected-profile: x",)

    def test_deterministic_stable_key_order(self):
        state = sample_state()
        assert prj.save_bytes(state) == prj.save_bytes(state)
        doc = json.loads(prj.save_bytes(state))
        assert list(doc) == sorted(doc)

    def test_masks_embedded_as_text_rows(self):
        doc = json.loads(prj.save_bytes(sample_state()))
        assert doc["profiles"]["front"]["mask"] == ["###", "#.#"]


class TestLoadErrors:
    def test_truncated_document_names_offset(self):
        data = prj.save_bytes(sample_state())[:40].decode()
        with pytest.raises(ParseError) as exc:
            prj.load_str(data)
        assert "offset" in str(exc.value)

    def test_unknown_future_field_rejected(self):
        doc = json.loads(prj.save_bytes(sample_state()))
        doc["holograms"] = []
        with pytest.raises(VersionError) as exc:
            prj.load_str(json.dumps(doc))
        assert "holograms" in str(exc.value)

    def test_version_mismatch(self):
        doc = json.loads(prj.save_bytes(sample_state()))
        doc["version"] = 2
        with pytest.raises(VersionError):
            prj.load_str(json.dumps(doc))

    def test_bad_profile_named_by_path(self):
        doc = json.loads(prj.save_bytes(sample_state()))
        doc["profiles"]["front"]["mask"] = []
        with pytest.raises(ParseError) as exc:
            prj.load_str(json.dumps(doc))
        assert "$.profiles.front.mask" in str(exc.value)

    def test_unknown_side_rejected(self):
        doc = json.loads(prj.save_bytes(sample_state()))
        doc["profiles"]["back"] = doc["profiles"].pop("front")
        with pytest.raises(ParseError):
            prj.load_str(json.dumps(doc))

    def test_bad_method_rejected(self):
        doc = json.loads(prj.save_bytes(sample_state()))
        doc["method"] = {"name": "carve", "params": {}}
        with pytest.raises(ParseError):
            prj.load_str(json.dumps(doc))


class TestStateInvariants:
    def test_one_profile_per_side_replaces(self):
        state = prj.ProjectState(id="x")
        cell = CellDimensions()
        a = Profile(BrickBitmask([[True]]), Side.FRONT, cell)
        b = Profile(BrickBitmask([[True, True]]), Side.FRONT, cell)
        state.set_profile(a)
        state.set_profile(b)
        assert len(state.profiles) == 1
        assert state.profiles[Side.FRONT].mask.cols == 2

    def test_stage_chain_records_inputs(self):
        state = prj.ProjectState(id="x")
        state.set_method("extrude", {"depth_cells": 1})
        state.append_stage("extrude", {"depth_cells": 1}, "sha256:profiles", "sha256:m1")
        state.append_stage("smooth", {"iterations": 10}, "sha256:m1", "sha256:m2")
        assert state.mesh_stages[1].input_digest == state.mesh_stages[0].digest

    def test_source_date_epoch_controls_timestamps(self, monkeypatch):
        monkeypatch.setenv("SOURCE_DATE_EPOCH", "1000000000")
        assert prj.now_iso() == "2001-09-09T01:46:40Z"

    def test_save_to_stream(self):
        buf = io.BytesIO()
        prj.save(sample_state(), buf)
        assert prj.load(io.BytesIO(buf.getvalue())) == sample_state()

    def test_profiles_digest_is_order_independent(self):
        a = sample_state()
        b = sample_state()
        b.profiles = dict(reversed(list(b.profiles.items())))
        assert prj.profiles_digest(a.profiles) == prj.profiles_digest(b.profiles)
