"""Persistent project files: the session state from scan to export.

Documents are UTF-8 JSON with a schema version, stable key order and
bitmasks embedded as text rows, so project files diff cleanly and
round-trip exactly.
"""

from __future__ import annotations

import hashlib
import json
import os
import time
from dataclasses import dataclass, field

from .errors import ParseError, ValidationError, VersionError
from .grid import BrickBitmask, CellDimensions, Profile, Side

SCHEMA_VERSION = 1
FILE_EXTENSION = ".bsp.json"

_TOP_LEVEL_KEYS = {"version", "id", "created", "modified", "profiles", "method", "mesh_stages"}


def now_iso() -> str:
    """Current UTC time; honors SOURCE_DATE_EPOCH for reproducible runs."""
    epoch = os.environ.get("SOURCE_DATE_EPOCH")
    t = int(epoch) if epoch else int(time.time())
    return time.strftime("%Y-%m-%dT%H:%M:%SZ", time.gmtime(t))


def mesh_digest(obj_bytes: bytes) -> str:
    return "sha256:" + hashlib.sha256(obj_bytes).hexdigest()


@dataclass(frozen=True)
class StageRecord:
    op: str
    params: dict
    input_digest: str
    digest: str

    def to_dict(self) -> dict:
        return {
            "op": self.op,
            "params": self.params,
            "input_digest": self.input_digest,
            "digest": self.digest,
        }


@dataclass
class ProjectState:
    id: str
    created: str = field(default_factory=now_iso)
    modified: str = field(default_factory=now_iso)
    profiles: dict[Side, Profile] = field(default_factory=dict)
    method: tuple[str, dict] | None = None
    mesh_stages: list[StageRecord] = field(default_factory=list)

    def touch(self) -> None:
        self.modified = now_iso()

    def set_profile(self, profile: Profile) -> None:
        """Add or replace the profile for its side."""
        self.profiles[profile.side] = profile
        self.touch()

    def set_method(self, name: str, params: dict) -> None:
        if name not in ("extrude", "lathe", "triplanar"):
            raise ValidationError(f"unknown reconstruction method {name!r}")
        self.method = (name, dict(params))
        self.touch()

    def append_stage(self, op: str, params: dict, input_digest: str, digest: str) -> StageRecord:
        """Record a mesh stage; the stage list is append-only and each stage
        carries the digest of its input so the chain is verifiable."""
        rec = StageRecord(op=op, params=dict(params), input_digest=input_digest, digest=digest)
        self.mesh_stages.append(rec)
        self.touch()
        return rec

    # -- serialization -------------------------------------------------------

    def to_json_dict(self) -> dict:
        profiles = {}
        for side, p in sorted(self.profiles.items(), key=lambda kv: kv[0].value):
            profiles[side.value] = {
                "cell": {
                    "width_mm": p.cell.width_mm,
                    "depth_mm": p.cell.depth_mm,
                    "height_mm": p.cell.height_mm,
                },
                "mask": ["".join("#" if v else "." for v in row) for row in p.mask.cells],
                "warnings": list(p.warnings),
            }
        return {
            "version": SCHEMA_VERSION,
            "id": self.id,
            "created": self.created,
            "modified": self.modified,
            "profiles": profiles,
            "method": None if self.method is None else {"name": self.method[0], "params": self.method[1]},
            "mesh_stages": [s.to_dict() for s in self.mesh_stages],
        }

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProjectState):
            return NotImplemented
        return self.to_json_dict() == other.to_json_dict()


def save(p: ProjectState, destination) -> None:
    data = save_bytes(p)
    if hasattr(destination, "write"):
        destination.write(data)
    else:
        with open(os.fspath(destination), "wb") as fh:
            fh.write(data)


def save_bytes(p: ProjectState) -> bytes:
    return (json.dumps(p.to_json_dict(), indent=2, sort_keys=True) + "\n").encode("utf-8")


def _expect(cond: bool, message: str, path: str):
    if not cond:
        raise ParseError(message, location=path)


def load(source) -> ProjectState:
    if hasattr(source, "read"):
        raw = source.read()
        if isinstance(raw, bytes):
            raw = raw.decode("utf-8")
    else:
        with open(os.fspath(source), "rb") as fh:
            raw = fh.read().decode("utf-8")
    return load_str(raw)


def load_str(raw: str) -> ProjectState:
    try:
        doc = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ParseError(f"malformed project document: {e.msg}", location=f"offset {e.pos}") from e
    _expect(isinstance(doc, dict), "project document must be a JSON object", "$")
    version = doc.get("version")
    if version != SCHEMA_VERSION:
        raise VersionError(
            f"unsupported project version {version!r}; this build reads version {SCHEMA_VERSION}"
        )
    unknown = set(doc) - _TOP_LEVEL_KEYS
    if unknown:
        # unknown fields mean a newer writer; refuse rather than drop data
        raise VersionError(f"unknown project fields {sorted(unknown)}; refusing to load")

    _expect(isinstance(doc.get("id"), str) and doc["id"], "id must be a non-empty string", "$.id")
    for key in ("created", "modified"):
        _expect(isinstance(doc.get(key), str), f"{key} must be a string timestamp", f"$.{key}")

    profiles: dict[Side, Profile] = {}
    raw_profiles = doc.get("profiles", {})
    _expect(isinstance(raw_profiles, dict), "profiles must be an object", "$.profiles")
    for side_name, entry in raw_profiles.items():
        path = f"$.profiles.{side_name}"
        try:
            side = Side(side_name)
        except ValueError:
            raise ParseError(f"unknown side {side_name!r}", location=path) from None
        _expect(isinstance(entry, dict), "profile must be an object", path)
        cell_doc = entry.get("cell")
        _expect(isinstance(cell_doc, dict), "profile.cell must be an object", f"{path}.cell")
        try:
            cell = CellDimensions(
                width_mm=float(cell_doc["width_mm"]),
                depth_mm=float(cell_doc["depth_mm"]),
                height_mm=float(cell_doc["height_mm"]),
            )
        except (KeyError, TypeError, ValueError, ValidationError) as e:
            raise ParseError(f"invalid cell dimensions: {e}", location=f"{path}.cell") from None
        rows = entry.get("mask")
        _expect(
            isinstance(rows, list) and rows and all(isinstance(r, str) for r in rows),
            "profile.mask must be a non-empty list of row strings",
            f"{path}.mask",
        )
        text = f"{len(rows[0])} {len(rows)}\n" + "\n".join(rows) + "\n"
        try:
            mask = BrickBitmask.from_text(text)
        except ParseError as e:
            raise ParseError(f"invalid mask: {e}", location=f"{path}.mask") from None
        warnings = entry.get("warnings", [])
        _expect(
            isinstance(warnings, list) and all(isinstance(w, str) for w in warnings),
            "profile.warnings must be a list of strings",
            f"{path}.warnings",
        )
        try:
            profiles[side] = Profile(mask, side, cell, tuple(warnings))
        except ValidationError as e:
            raise ParseError(str(e), location=path) from None

    method = None
    raw_method = doc.get("method")
    if raw_method is not None:
        _expect(isinstance(raw_method, dict), "method must be an object or null", "$.method")
        name = raw_method.get("name")
        _expect(
            name in ("extrude", "lathe", "triplanar"),
            f"unknown method {name!r}",
            "$.method.name",
        )
        params = raw_method.get("params", {})
        _expect(isinstance(params, dict), "method.params must be an object", "$.method.params")
        method = (name, params)

    stages: list[StageRecord] = []
    raw_stages = doc.get("mesh_stages", [])
    _expect(isinstance(raw_stages, list), "mesh_stages must be a list", "$.mesh_stages")
    for i, entry in enumerate(raw_stages):
        path = f"$.mesh_stages[{i}]"
        _expect(isinstance(entry, dict), "stage must be an object", path)
        for key in ("op", "input_digest", "digest"):
            _expect(isinstance(entry.get(key), str), f"stage.{key} must be a string", f"{path}.{key}")
        params = entry.get("params", {})
        _expect(isinstance(params, dict), "stage.params must be an object", f"{path}.params")
        stages.append(
            StageRecord(
                op=entry["op"],
                params=params,
                input_digest=entry["input_digest"],
                digest=entry["digest"],
            )
        )

    return ProjectState(
        id=doc["id"],
        created=doc["created"],
        modified=doc["modified"],
        profiles=profiles,
        method=method,
        mesh_stages=stages,
    )


def profiles_digest(profiles: dict[Side, Profile]) -> str:
    """Digest of the profile set, used as the first stage's input digest."""
    h = hashlib.sha256()
    for side, p in sorted(profiles.items(), key=lambda kv: kv[0].value):
        h.update(side.value.encode())
        h.update(p.mask.to_text().encode())
        h.update(f"{p.cell.width_mm},{p.cell.depth_mm},{p.cell.height_mm}".encode())
    return "sha256:" + h.hexdigest()
