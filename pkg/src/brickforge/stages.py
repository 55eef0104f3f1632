"""Shared stage engine: runs recorded reconstruction and postprocessing
steps from their parameter dictionaries.

Both the CLI pipeline runner and the HTTP service go through these
functions, which keeps their outputs byte-identical to direct library use.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import StateConflict, ValidationError
from .grid import Profile, Side, VoxelSolid
from .mesh import TriangleMesh
from .meshops import (
    Primitive,
    PrimitiveKind,
    lattice,
    merge_primitive,
    scale,
    smooth,
)
from .reconstruct import (
    ExtrudeDirection,
    ExtrudeParams,
    LatheAxis,
    LatheParams,
    extrude,
    lathe,
    solid_to_mesh,
    triplanar,
    voxelize_profile_depth,
)

POST_OPS = ("smooth", "lattice", "scale", "merge")
METHODS = ("extrude", "lathe", "triplanar")


@dataclass
class StageResult:
    mesh: TriangleMesh
    solid: VoxelSolid | None  # kept while the geometry is still grid-exact


def run_method(profiles: dict[Side, Profile], name: str, params: dict) -> StageResult:
    if name == "extrude":
        side = Side.parse(params.get("side", "front"))
        if side not in profiles:
            raise StateConflict(f"no {side.value} profile acquired")
        p = profiles[side]
        ep = _extrude_params(params)
        mesh = extrude(p, ep)
        solid = voxelize_profile_depth(p, ep)
        return StageResult(mesh, solid)
    if name == "lathe":
        side = Side.parse(params.get("side", "front"))
        if side not in profiles:
            raise StateConflict(f"no {side.value} profile acquired")
        mesh = lathe(profiles[side], _lathe_params(params))
        return StageResult(mesh, None)
    if name == "triplanar":
        wanted = params.get("sides", [s.value for s in profiles])
        chosen = []
        for side_name in wanted:
            side = Side.parse(side_name)
            if side not in profiles:
                raise StateConflict(f"no {side.value} profile acquired")
            chosen.append(profiles[side])
        if not chosen:
            raise StateConflict("triplanar needs at least one acquired profile")
        solid = triplanar(chosen, default_depth_cells=int(params.get("default_depth_cells", 1)))
        warnings = tuple(w for p in chosen for w in p.warnings)
        return StageResult(solid_to_mesh(solid, warnings), solid)
    raise ValidationError(f"unknown reconstruction method {name!r}")


def run_post(op: str, params: dict, current: StageResult) -> StageResult:
    if op == "smooth":
        iterations = int(params.get("iterations", 10))
        lam = float(params.get("lam", 0.5))
        mu = float(params.get("mu", -0.53))
        return StageResult(smooth(current.mesh, iterations, lam, mu), None)
    if op == "scale":
        if "factor" not in params:
            raise ValidationError("scale requires a factor")
        return StageResult(scale(current.mesh, float(params["factor"])), None)
    if op == "lattice":
        if current.solid is None:
            raise StateConflict(
                "lattice conversion needs grid-exact geometry; apply it directly "
                "after an extrude or triplanar reconstruction"
            )
        thickness = float(params.get("thickness_mm", 2.0))
        return StageResult(lattice(current.solid, thickness), None)
    if op == "merge":
        prim = _primitive(params)
        resolution = float(params.get("resolution_mm", 1.0))
        return StageResult(merge_primitive(current.mesh, prim, resolution), None)
    raise ValidationError(f"unknown postprocess operation {op!r}")


def _extrude_params(params: dict) -> ExtrudeParams:
    direction = ExtrudeDirection(params.get("direction", "+depth"))
    if "depth_mm" in params:
        return ExtrudeParams(depth_mm=float(params["depth_mm"]), direction=direction)
    if "depth_cells" in params:
        return ExtrudeParams(depth_cells=int(params["depth_cells"]), direction=direction)
    raise ValidationError("extrude requires depth_cells or depth_mm")


def _lathe_params(params: dict) -> LatheParams:
    axis = LatheAxis(params.get("axis", "left"))
    return LatheParams(axis_side=axis, angular_segments=int(params.get("segments", 64)))


def _primitive(params: dict) -> Primitive:
    try:
        kind = PrimitiveKind(params["kind"])
    except (KeyError, ValueError):
        raise ValidationError("merge requires kind 'cube' or 'sphere'") from None
    center = params.get("center", (0.0, 0.0, 0.0))
    if not (isinstance(center, (list, tuple)) and len(center) == 3):
        raise ValidationError("primitive center must be [x, y, z]")
    return Primitive(
        kind=kind,
        center=tuple(float(c) for c in center),
        scale=float(params.get("scale", 10.0)),
        resolution=int(params.get("resolution", 32)),
    )
