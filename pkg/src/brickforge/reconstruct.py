"""The three profile-to-solid reconstruction methods: extrude, lathe, triplanar.

Frames: x right, y up, z toward the viewer.  A profile lies in its own
plane with its grid's horizontal axis along local x and vertical along
local y; extrusion adds local z.  Triplanar places the front profile in
the x-y plane, the right profile in the z-y plane and the top profile in
the x-z plane.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from ._surface import prism_mesh, voxel_surface_mesh
from .errors import ProfileMismatch, ValidationError
from .grid import BrickBitmask, CellDimensions, Profile, Side, VoxelSolid, connected_components
from .mesh import TriangleMesh

DISCONNECTED_WARNING = "disconnected-profile"


class ExtrudeDirection(enum.Enum):
    POSITIVE = "+depth"
    NEGATIVE = "-depth"


@dataclass(frozen=True)
class ExtrudeParams:
    """Extrusion depth, in whole cells or exact millimeters."""

    depth_cells: int | None = None
    depth_mm: float | None = None
    direction: ExtrudeDirection = ExtrudeDirection.POSITIVE

    def __post_init__(self):
        if (self.depth_cells is None) == (self.depth_mm is None):
            raise ValidationError("specify exactly one of depth_cells or depth_mm")
        if self.depth_cells is not None and (
            not isinstance(self.depth_cells, int) or self.depth_cells < 1
        ):
            raise ValidationError(f"depth_cells must be a positive integer, got {self.depth_cells!r}")
        if self.depth_mm is not None and not (
            math.isfinite(self.depth_mm) and self.depth_mm > 0
        ):
            raise ValidationError(f"depth_mm must be positive, got {self.depth_mm!r}")

    def resolve_mm(self, cell_depth_mm: float) -> float:
        if self.depth_mm is not None:
            return float(self.depth_mm)
        return self.depth_cells * cell_depth_mm

    def resolve_cells(self, cell_depth_mm: float) -> int:
        """Depth snapped to the nearest positive whole number of voxel layers."""
        if self.depth_cells is not None:
            return self.depth_cells
        return max(1, round(self.depth_mm / cell_depth_mm))


class LatheAxis(enum.Enum):
    LEFT_EDGE = "left"
    RIGHT_EDGE = "right"


@dataclass(frozen=True)
class LatheParams:
    axis_side: LatheAxis = LatheAxis.LEFT_EDGE
    angular_segments: int = 64

    def __post_init__(self):
        if not isinstance(self.angular_segments, int) or self.angular_segments < 8:
            raise ValidationError(
                f"angular_segments must be an integer >= 8, got {self.angular_segments!r}"
            )


def _disconnection_warnings(mask: BrickBitmask) -> tuple[str, ...]:
    _, count = connected_components(mask)
    if count > 1:
        return (f"{DISCONNECTED_WARNING}: mask has {count} disconnected parts",)
    return ()


def extrude(p: Profile, params: ExtrudeParams) -> TriangleMesh:
    """Sweep the profile along its plane normal into a watertight prism."""
    cw, ch = p.plane_cell_mm()
    depth = params.resolve_mm(p.normal_cell_mm())
    if params.direction is ExtrudeDirection.POSITIVE:
        z0, z1 = 0.0, depth
    else:
        z0, z1 = -depth, 0.0
    mesh = prism_mesh(p.mask.xy(), cw, ch, z0, z1)
    warnings = p.warnings + _disconnection_warnings(p.mask)
    return mesh.with_warnings(warnings) if warnings else mesh


def pappus_factor(n: int) -> float:
    """Area ratio of a regular n-gon inscribed in its circumcircle."""
    return n / (2.0 * math.pi) * math.sin(2.0 * math.pi / n)


def lathe(p: Profile, params: LatheParams) -> TriangleMesh:
    """Revolve the profile 360 degrees around one bounding-box edge.

    Each filled cell at radial column c sweeps an annulus with inner
    radius c*w and outer radius (c+1)*w, approximated by regular
    ``angular_segments``-gons with vertices on the circles.  Columns are
    counted from the mask's own edge, so masks with empty leading columns
    revolve into shapes with a hole around the axis.
    """
    xy = p.mask.xy()
    if params.axis_side is LatheAxis.RIGHT_EDGE:
        xy = xy[::-1]
    nc, nr = xy.shape
    cw, ch = p.plane_cell_mm()
    n = params.angular_segments

    # Ring vertices are welded by (radius index, row index, angle step,
    # material component) so that cells touching only at a corner of the
    # (radius, row) grid keep separate edge loops; everything at radius 0
    # collapses to one axis vertex per row and component.
    from ._surface import _lut_2d

    pad = np.zeros((nc + 2, nr + 2), dtype=bool)
    pad[1:-1, 1:-1] = xy
    code = np.zeros((nc + 1, nr + 1), dtype=np.uint8)
    for iy in (0, 1):
        for ix in (0, 1):
            code |= pad[ix : ix + nc + 1, iy : iy + nr + 1].astype(np.uint8) << (ix + 2 * iy)
    lut = _lut_2d()

    vert_ids: dict[tuple[int, int, int, int], int] = {}
    verts: list[tuple[float, float, float]] = []

    def vid(rho: int, row: int, s: int, oc: int, orow: int) -> int:
        comp = int(lut[code[rho, row], (oc - rho + 1) + 2 * (orow - row + 1)])
        key = (0, row, 0, comp) if rho == 0 else (rho, row, s % n, comp)
        got = vert_ids.get(key)
        if got is not None:
            return got
        ang = 2.0 * math.pi * key[2] / n
        r = key[0] * cw
        verts.append((r * math.cos(ang), key[1] * ch, -r * math.sin(ang)))
        vert_ids[key] = len(verts) - 1
        return vert_ids[key]

    tris: list[tuple[int, int, int]] = []

    def emit_quad(a: int, b: int, c: int, d: int):
        if a != b and a != c and b != c:
            tris.append((a, b, c))
        if a != c and a != d and c != d:
            tris.append((a, c, d))

    def filled(c: int, r: int) -> bool:
        return 0 <= c < nc and 0 <= r < nr and bool(xy[c, r])

    for c in range(nc):
        for r in range(nr):
            if not xy[c, r]:
                continue
            for s in range(n):
                # radial walls where the radial neighbor differs
                if c + 1 >= nc or not xy[c + 1, r]:  # outer wall, normal away from axis
                    emit_quad(
                        vid(c + 1, r, s, c, r), vid(c + 1, r, s + 1, c, r),
                        vid(c + 1, r + 1, s + 1, c, r), vid(c + 1, r + 1, s, c, r),
                    )
                if c > 0 and not xy[c - 1, r]:  # inner wall, normal toward axis
                    emit_quad(
                        vid(c, r, s, c, r), vid(c, r + 1, s, c, r),
                        vid(c, r + 1, s + 1, c, r), vid(c, r, s + 1, c, r),
                    )
                # annulus rings where the vertical neighbor differs
                if not filled(c, r + 1):  # top ring, normal +y
                    emit_quad(
                        vid(c, r + 1, s, c, r), vid(c + 1, r + 1, s, c, r),
                        vid(c + 1, r + 1, s + 1, c, r), vid(c, r + 1, s + 1, c, r),
                    )
                if not filled(c, r - 1):  # bottom ring, normal -y
                    emit_quad(
                        vid(c, r, s, c, r), vid(c, r, s + 1, c, r),
                        vid(c + 1, r, s + 1, c, r), vid(c + 1, r, s, c, r),
                    )

    mesh = TriangleMesh(np.array(verts, dtype=np.float64), np.array(tris, dtype=np.int64))
    warnings = p.warnings + _disconnection_warnings(p.mask)
    return mesh.with_warnings(warnings) if warnings else mesh


def lathe_analytic_volume(p: Profile, params: LatheParams) -> float:
    """Pappus volume of the revolved cell region times the n-gon factor."""
    xy = p.mask.xy()
    if params.axis_side is LatheAxis.RIGHT_EDGE:
        xy = xy[::-1]
    cw, ch = p.plane_cell_mm()
    total = 0.0
    for c in range(xy.shape[0]):
        count = int(xy[c].sum())
        total += count * math.pi * (2 * c + 1) * cw * cw * ch
    return total * pappus_factor(params.angular_segments)


_AXIS_NAMES = {
    ("front", "right"): ("front.rows", "right.rows", "y"),
    ("front", "top"): ("front.cols", "top.cols", "x"),
    ("right", "top"): ("right.cols", "top.rows", "z"),
}


def triplanar(
    profiles: list[Profile] | tuple[Profile, ...],
    cell: CellDimensions | None = None,
    default_depth_cells: int = 1,
) -> VoxelSolid:
    """Intersect orthogonally extruded profiles into one voxel solid.

    ``occupancy[x, y, z] = front(x, y) & right(z, y) & top(x, z)`` with
    missing profiles treated as all-filled.  With a single profile the
    unconstrained axis extent defaults to ``default_depth_cells``.
    """
    if not profiles:
        raise ValidationError("triplanar needs at least one profile")
    by_side: dict[Side, Profile] = {}
    for p in profiles:
        if p.side in by_side:
            raise ProfileMismatch(f"duplicate side {p.side.value!r}")
        by_side[p.side] = p

    front = by_side.get(Side.FRONT)
    right = by_side.get(Side.RIGHT)
    top = by_side.get(Side.TOP)

    checks = []
    if front and right:
        checks.append(("front", "right", front.mask.rows, right.mask.rows))
    if front and top:
        checks.append(("front", "top", front.mask.cols, top.mask.cols))
    if right and top:
        checks.append(("right", "top", right.mask.cols, top.mask.rows))
    for a, b, ca, cb in checks:
        if ca != cb:
            na, nb, axis = _AXIS_NAMES[(a, b)]
            raise ProfileMismatch(
                f"profiles disagree on the {axis} axis: {na}={ca} vs {nb}={cb}"
            )

    nx = front.mask.cols if front else (top.mask.cols if top else default_depth_cells)
    ny = front.mask.rows if front else (right.mask.rows if right else default_depth_cells)
    nz = right.mask.cols if right else (top.mask.rows if top else default_depth_cells)

    occ = np.ones((nx, ny, nz), dtype=bool)
    if front is not None:
        occ &= front.mask.xy()[:, :, None]
    if right is not None:
        occ &= right.mask.xy().T[None, :, :]
    if top is not None:
        occ &= top.mask.xy()[:, None, :]
    if cell is None:
        cell = profiles[0].cell
    return VoxelSolid(occ, cell=cell)


def voxelize_profile_depth(p: Profile, params: ExtrudeParams) -> VoxelSolid:
    """Voxel form of an extrusion, in the profile's local frame.

    Millimeter depths are snapped to the nearest whole number of voxel
    layers (the mesh path keeps the exact depth).
    """
    from .grid import voxelize_extrusion

    cw, ch = p.plane_cell_mm()
    depth_mm = p.normal_cell_mm()
    cell = CellDimensions(width_mm=cw, depth_mm=depth_mm, height_mm=ch)
    return voxelize_extrusion(p.mask, params.resolve_cells(depth_mm), cell)


def solid_to_mesh(s: VoxelSolid, warnings: tuple[str, ...] = ()) -> TriangleMesh:
    """Extract the boundary between occupied and empty/exterior voxels.

    The mesh is watertight with volume exactly ``occupied count x voxel
    volume`` for solids that do not pinch material diagonally around an
    edge; profile-derived solids (extrusions, triplanar intersections)
    never do.
    """
    if s.occupied_count() == 0:
        raise ValidationError("cannot mesh an empty solid")
    xs = np.arange(s.nx + 1, dtype=np.float64) * s.cell.width_mm
    ys = np.arange(s.ny + 1, dtype=np.float64) * s.cell.height_mm
    zs = np.arange(s.nz + 1, dtype=np.float64) * s.cell.depth_mm
    mesh = voxel_surface_mesh(s.occupancy, xs, ys, zs)
    return mesh.with_warnings(warnings) if warnings else mesh
