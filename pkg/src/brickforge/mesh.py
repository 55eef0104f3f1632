"""Indexed triangle meshes in millimeter coordinates, plus analysis and OBJ io."""

from __future__ import annotations

import io
import os
from dataclasses import dataclass

import numpy as np

from . import __version__
from .errors import MeshContractError, ParseError, ValidationError


class TriangleMesh:
    """Immutable indexed triangle surface.

    Vertices are (n, 3) float64 millimeters; triangles index into them
    counter-clockwise seen from outside.  ``warnings`` carries non-fatal
    diagnostics attached by the producing operation (e.g. a disconnected
    source profile).
    """

    __slots__ = ("_vertices", "_triangles", "warnings")

    def __init__(self, vertices, triangles, warnings: tuple[str, ...] = ()):
        v = np.asarray(vertices, dtype=np.float64)
        t = np.asarray(triangles, dtype=np.int64)
        if v.ndim != 2 or v.shape[1] != 3:
            raise ValidationError(f"vertices must be (n, 3), got {v.shape}")
        if t.ndim != 2 or t.shape[1] != 3:
            raise ValidationError(f"triangles must be (m, 3), got {t.shape}")
        if len(t) and (t.min() < 0 or t.max() >= len(v)):
            raise ValidationError("triangle index out of range")
        if len(t):
            a, b, c = t[:, 0], t[:, 1], t[:, 2]
            if bool(np.any((a == b) | (b == c) | (a == c))):
                raise ValidationError("degenerate triangle (repeated vertex index)")
        v = v.copy()
        t = t.copy()
        v.setflags(write=False)
        t.setflags(write=False)
        self._vertices = v
        self._triangles = t
        self.warnings = tuple(warnings)

    @property
    def vertices(self) -> np.ndarray:
        return self._vertices

    @property
    def triangles(self) -> np.ndarray:
        return self._triangles

    def vertex_count(self) -> int:
        return len(self._vertices)

    def triangle_count(self) -> int:
        return len(self._triangles)

    def with_warnings(self, warnings: tuple[str, ...]) -> "TriangleMesh":
        return TriangleMesh(self._vertices, self._triangles, warnings)

    def __eq__(self, other) -> bool:
        if not isinstance(other, TriangleMesh):
            return NotImplemented
        return (
            np.array_equal(self._vertices, other._vertices)
            and np.array_equal(self._triangles, other._triangles)
            and self.warnings == other.warnings
        )

    def __repr__(self) -> str:
        return f"TriangleMesh(v={len(self._vertices)}, t={len(self._triangles)})"


def _triangle_corners(m: TriangleMesh) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    v, t = m.vertices, m.triangles
    return v[t[:, 0]], v[t[:, 1]], v[t[:, 2]]


def signed_volume(m: TriangleMesh) -> float:
    """Divergence-theorem volume; positive for outward-oriented closed meshes."""
    a, b, c = _triangle_corners(m)
    return float(np.einsum("ij,ij->i", a, np.cross(b, c)).sum() / 6.0)


def surface_area(m: TriangleMesh) -> float:
    a, b, c = _triangle_corners(m)
    return float(np.linalg.norm(np.cross(b - a, c - a), axis=1).sum() / 2.0)


def center_of_mass(m: TriangleMesh) -> np.ndarray:
    """Uniform-density centroid of the enclosed solid."""
    a, b, c = _triangle_corners(m)
    vols = np.einsum("ij,ij->i", a, np.cross(b, c)) / 6.0
    total = vols.sum()
    if abs(total) < 1e-12:
        raise MeshContractError("mesh encloses no volume")
    centroids = (a + b + c) / 4.0
    return (vols[:, None] * centroids).sum(axis=0) / total


def _directed_edges(m: TriangleMesh) -> np.ndarray:
    t = m.triangles
    return np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])


def is_watertight(m: TriangleMesh) -> bool:
    """True iff every edge is shared by exactly two opposite-oriented triangles."""
    if m.triangle_count() == 0:
        return False
    e = _directed_edges(m)
    n = m.vertex_count()
    packed = e[:, 0] * n + e[:, 1]
    uniq, counts = np.unique(packed, return_counts=True)
    if bool((counts != 1).any()):
        return False
    reverse = np.sort(e[:, 1] * n + e[:, 0])
    return bool(np.array_equal(np.sort(packed), reverse))


def shell_count(m: TriangleMesh) -> int:
    """Connected components of the triangle graph (shared-vertex connectivity)."""
    n = m.vertex_count()
    parent = np.arange(n)

    def find(i: int) -> int:
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for a, b, c in m.triangles:
        ra, rb, rc = find(a), find(b), find(c)
        parent[rb] = ra
        parent[rc] = ra
    referenced = np.unique(m.triangles)
    return len({find(i) for i in referenced})


def euler_characteristic(m: TriangleMesh) -> int:
    referenced = np.unique(m.triangles)
    e = _directed_edges(m)
    undirected = np.unique(np.sort(e, axis=1), axis=0)
    return int(len(referenced) - len(undirected) + m.triangle_count())


def degenerate_triangle_count(m: TriangleMesh, area_eps: float = 1e-9) -> int:
    a, b, c = _triangle_corners(m)
    areas = np.linalg.norm(np.cross(b - a, c - a), axis=1) / 2.0
    return int((areas <= area_eps).sum())


@dataclass(frozen=True)
class MeshReport:
    volume_mm3: float
    surface_area_mm2: float
    watertight: bool
    shell_count: int
    euler_characteristic: int
    bbox_min: tuple[float, float, float]
    bbox_max: tuple[float, float, float]

    def to_dict(self) -> dict:
        return {
            "volume_mm3": self.volume_mm3,
            "surface_area_mm2": self.surface_area_mm2,
            "watertight": self.watertight,
            "shell_count": self.shell_count,
            "euler_characteristic": self.euler_characteristic,
            "bbox_min": list(self.bbox_min),
            "bbox_max": list(self.bbox_max),
        }


def analyze(m: TriangleMesh) -> MeshReport:
    lo = m.vertices.min(axis=0) if m.vertex_count() else np.zeros(3)
    hi = m.vertices.max(axis=0) if m.vertex_count() else np.zeros(3)
    return MeshReport(
        volume_mm3=signed_volume(m),
        surface_area_mm2=surface_area(m),
        watertight=is_watertight(m),
        shell_count=shell_count(m),
        euler_characteristic=euler_characteristic(m),
        bbox_min=tuple(float(x) for x in lo),
        bbox_max=tuple(float(x) for x in hi),
    )


# -- static balance ---------------------------------------------------------

_AXES = {"x": 0, "y": 1, "z": 2}
SUPPORT_BAND_MM = 0.5


def _convex_hull_2d(points: np.ndarray) -> np.ndarray:
    """Andrew's monotone chain; returns hull CCW. Handles degenerate input."""
    pts = np.unique(points, axis=0)
    if len(pts) <= 2:
        return pts
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    pts = pts[order]

    def cross(o, a, b):
        return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])

    lower: list[np.ndarray] = []
    for p in pts:
        while len(lower) >= 2 and cross(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper: list[np.ndarray] = []
    for p in pts[::-1]:
        while len(upper) >= 2 and cross(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    hull = np.array(lower[:-1] + upper[:-1])
    if len(hull) < 3:  # all collinear
        ends = pts[[0, -1]]
        return ends
    return hull


def _signed_distance_to_hull(point: np.ndarray, hull: np.ndarray) -> float:
    """Positive inside the CCW hull, negative outside / for degenerate hulls."""
    if len(hull) == 0:
        return -np.inf
    if len(hull) == 1:
        return -float(np.linalg.norm(point - hull[0]))
    if len(hull) == 2:
        a, b = hull
        ab = b - a
        t = np.clip(np.dot(point - a, ab) / np.dot(ab, ab), 0.0, 1.0)
        return -float(np.linalg.norm(point - (a + t * ab)))
    dmin = np.inf
    for i in range(len(hull)):
        a = hull[i]
        b = hull[(i + 1) % len(hull)]
        ab = b - a
        # signed distance to edge line, positive on the interior (left) side
        d = ((ab[0]) * (point[1] - a[1]) - (ab[1]) * (point[0] - a[0])) / np.linalg.norm(ab)
        dmin = min(dmin, d)
    if dmin >= 0:
        return float(dmin)
    # outside: distance to the hull boundary (segments)
    dist = np.inf
    for i in range(len(hull)):
        a = hull[i]
        b = hull[(i + 1) % len(hull)]
        ab = b - a
        t = np.clip(np.dot(point - a, ab) / np.dot(ab, ab), 0.0, 1.0)
        dist = min(dist, float(np.linalg.norm(point - (a + t * ab))))
    return -dist


@dataclass(frozen=True)
class BalanceReport:
    center_of_mass: tuple[float, float, float]
    support_polygon: list[tuple[float, float]]
    stable: bool
    margin_mm: float

    def to_dict(self) -> dict:
        return {
            "center_of_mass": list(self.center_of_mass),
            "support_polygon": [list(p) for p in self.support_polygon],
            "stable": self.stable,
            "margin_mm": self.margin_mm,
        }


def balance_report(m: TriangleMesh, up_axis: str = "y") -> BalanceReport:
    """Static stability of the mesh resting on its lowest plane.

    The support polygon is the convex hull of all vertices within
    0.5 mm of the lowest plane perpendicular to ``up_axis``; the shape is
    stable iff the center of mass projects strictly inside it.  Margin is
    the signed distance from that projection to the hull boundary.
    """
    if up_axis not in _AXES:
        raise ValidationError(f"up_axis must be one of x, y, z, got {up_axis!r}")
    if not is_watertight(m):
        raise MeshContractError("balance analysis requires a watertight mesh")
    u = _AXES[up_axis]
    others = [i for i in range(3) if i != u]
    com = center_of_mass(m)
    low = m.vertices[:, u].min()
    support = m.vertices[m.vertices[:, u] <= low + SUPPORT_BAND_MM][:, others]
    hull = _convex_hull_2d(support)
    margin = _signed_distance_to_hull(com[others], hull)
    return BalanceReport(
        center_of_mass=tuple(float(x) for x in com),
        support_polygon=[(float(p[0]), float(p[1])) for p in hull],
        stable=bool(margin > 0.0),
        margin_mm=float(margin),
    )


# -- OBJ io ------------------------------------------------------------------
# ASCII OBJ, millimeters, 6 decimal places, 1-indexed faces, CCW = outward.
# Byte output is deterministic for a given mesh.


def obj_bytes(m: TriangleMesh) -> bytes:
    out = io.StringIO()
    out.write(f"# brickforge {__version__}\n")
    for v in m.vertices:
        out.write(f"v {v[0]:.6f} {v[1]:.6f} {v[2]:.6f}\n")
    for t in m.triangles:
        out.write(f"f {t[0] + 1} {t[1] + 1} {t[2] + 1}\n")
    return out.getvalue().encode("ascii")


def export_obj(m: TriangleMesh, destination) -> None:
    """Write the mesh to a path or binary file-like object."""
    data = obj_bytes(m)
    if hasattr(destination, "write"):
        destination.write(data)
    else:
        with open(os.fspath(destination), "wb") as fh:
            fh.write(data)


def import_obj(source) -> TriangleMesh:
    """Read an ASCII OBJ (v/f lines; polygons are fan-triangulated)."""
    if hasattr(source, "read"):
        text = source.read()
        if isinstance(text, bytes):
            text = text.decode("utf-8")
    else:
        with open(os.fspath(source), "rb") as fh:
            text = fh.read().decode("utf-8")
    vertices: list[list[float]] = []
    triangles: list[list[int]] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        parts = line.split()
        tag = parts[0]
        if tag == "v":
            if len(parts) < 4:
                raise ParseError("vertex line needs 3 coordinates", location=f"line {lineno}")
            try:
                vertices.append([float(parts[1]), float(parts[2]), float(parts[3])])
            except ValueError:
                raise ParseError(f"bad vertex coordinate in {raw!r}", location=f"line {lineno}") from None
        elif tag == "f":
            if len(parts) < 4:
                raise ParseError("face line needs at least 3 indices", location=f"line {lineno}")
            idx = []
            for p in parts[1:]:
                head = p.split("/")[0]
                try:
                    i = int(head)
                except ValueError:
                    raise ParseError(f"bad face index {p!r}", location=f"line {lineno}") from None
                if i < 0:
                    i = len(vertices) + 1 + i
                if not (1 <= i <= len(vertices)):
                    raise ParseError(f"face index {i} out of range", location=f"line {lineno}")
                idx.append(i - 1)
            for k in range(1, len(idx) - 1):
                triangles.append([idx[0], idx[k], idx[k + 1]])
        # vn/vt/o/g/s/usemtl/mtllib are accepted and ignored
    if not vertices:
        raise ParseError("no vertices found", location="end of file")
    return TriangleMesh(np.array(vertices), np.array(triangles, dtype=np.int64).reshape(-1, 3))
