"""Brick-grid data model: bitmasks, profiles, voxel solids and grid analyses.

Geometry convention used throughout the package: x points right, y points
up, z toward the viewer.  A bitmask stores rows top-first (matching the text
format and image space); :meth:`BrickBitmask.xy` exposes the same cells
indexed ``[x, y]`` with y growing upward, which is what all mesh and voxel
code works with.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass

import numpy as np

from .errors import ParseError, ValidationError


class Side(enum.Enum):
    """Which side of the physical model a profile was acquired from."""

    FRONT = "front"
    RIGHT = "right"
    TOP = "top"

    @classmethod
    def parse(cls, name: str) -> "Side":
        try:
            return cls(name.strip().lower())
        except ValueError:
            raise ValidationError(f"unknown side {name!r}; expected front, right or top") from None


@dataclass(frozen=True)
class CellDimensions:
    """Physical size of one brick cell in millimeters.

    Defaults to the footprint of a standard 2x2 interlocking brick
    (15.8 mm square) with an 11.4 mm stacking pitch.
    """

    width_mm: float = 15.8
    depth_mm: float = 15.8
    height_mm: float = 11.4

    def __post_init__(self):
        for name in ("width_mm", "depth_mm", "height_mm"):
            v = getattr(self, name)
            if not (isinstance(v, (int, float)) and math.isfinite(v) and v > 0):
                raise ValidationError(f"cell {name} must be a positive finite number, got {v!r}")


class BrickBitmask:
    """2D boolean occupancy grid of brick cells. Row 0 is the top row."""

    __slots__ = ("_cells",)

    def __init__(self, cells):
        arr = np.array(cells, dtype=bool)
        if arr.ndim != 2:
            raise ValidationError(f"bitmask cells must be a 2D matrix, got ndim={arr.ndim}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValidationError(f"bitmask must be at least 1x1, got {arr.shape[0]}x{arr.shape[1]}")
        arr.setflags(write=False)
        self._cells = arr

    @property
    def rows(self) -> int:
        return self._cells.shape[0]

    @property
    def cols(self) -> int:
        return self._cells.shape[1]

    @property
    def cells(self) -> np.ndarray:
        """Read-only (rows, cols) bool array, top row first."""
        return self._cells

    def filled_count(self) -> int:
        return int(self._cells.sum())

    def xy(self) -> np.ndarray:
        """Cells re-indexed as ``[x, y]`` with y growing upward."""
        return self._cells[::-1].T

    @classmethod
    def from_xy(cls, xy: np.ndarray) -> "BrickBitmask":
        return cls(np.asarray(xy, dtype=bool).T[::-1])

    @classmethod
    def full(cls, cols: int, rows: int) -> "BrickBitmask":
        return cls(np.ones((rows, cols), dtype=bool))

    # -- text format -------------------------------------------------------
    # First line "<cols> <rows>", then `rows` lines of '#' (filled) and
    # '.' (empty), top row first.  Round-trips bit-exactly.

    def to_text(self) -> str:
        lines = [f"{self.cols} {self.rows}"]
        for row in self._cells:
            lines.append("".join("#" if v else "." for v in row))
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text: str) -> "BrickBitmask":
        lines = text.splitlines()
        if not lines:
            raise ParseError("empty bitmask document", location="line 1")
        header = lines[0].split()
        if len(header) != 2:
            raise ParseError(f"expected '<cols> <rows>' header, got {lines[0]!r}", location="line 1")
        try:
            cols, rows = int(header[0]), int(header[1])
        except ValueError:
            raise ParseError(f"non-integer header {lines[0]!r}", location="line 1") from None
        if cols < 1 or rows < 1:
            raise ParseError(f"grid size must be positive, got {cols}x{rows}", location="line 1")
        body = lines[1:]
        if len(body) < rows:
            raise ParseError(f"expected {rows} rows, found {len(body)}", location=f"line {len(lines)}")
        cells = np.zeros((rows, cols), dtype=bool)
        for r in range(rows):
            line = body[r]
            if len(line) != cols:
                raise ParseError(
                    f"row has {len(line)} cells, expected {cols}", location=f"line {r + 2}"
                )
            for c, ch in enumerate(line):
                if ch == "#":
                    cells[r, c] = True
                elif ch != ".":
                    raise ParseError(f"invalid cell character {ch!r}", location=f"line {r + 2}")
        return cls(cells)

    def __eq__(self, other) -> bool:
        if not isinstance(other, BrickBitmask):
            return NotImplemented
        return self._cells.shape == other._cells.shape and bool(
            np.array_equal(self._cells, other._cells)
        )

    def __hash__(self):
        return hash((self._cells.shape, self._cells.tobytes()))

    def __repr__(self) -> str:
        return f"BrickBitmask({self.cols}x{self.rows}, filled={self.filled_count()})"


class Profile:
    """A labeled bitmask: the unit of reconstruction input.

    Raises :class:`ValidationError` when the mask is empty, so the vision
    stage can report "nothing found" before a Profile ever exists.
    """

    __slots__ = ("mask", "side", "cell", "warnings")

    def __init__(
        self,
        mask: BrickBitmask,
        side: Side,
        cell: CellDimensions | None = None,
        warnings: tuple[str, ...] = (),
    ):
        if mask.filled_count() == 0:
            raise ValidationError("profile mask must contain at least one filled cell")
        self.mask = mask
        self.side = side if isinstance(side, Side) else Side.parse(side)
        self.cell = cell if cell is not None else CellDimensions()
        self.warnings = tuple(warnings)

    def plane_cell_mm(self) -> tuple[float, float]:
        """Physical (horizontal, vertical) size of one cell in this view."""
        c = self.cell
        if self.side is Side.FRONT:
            return (c.width_mm, c.height_mm)
        if self.side is Side.RIGHT:
            return (c.depth_mm, c.height_mm)
        return (c.width_mm, c.depth_mm)

    def normal_cell_mm(self) -> float:
        """Physical cell size along this view's extrusion direction."""
        c = self.cell
        if self.side is Side.FRONT:
            return c.depth_mm
        if self.side is Side.RIGHT:
            return c.width_mm
        return c.height_mm

    def __eq__(self, other) -> bool:
        if not isinstance(other, Profile):
            return NotImplemented
        return (
            self.mask == other.mask
            and self.side is other.side
            and self.cell == other.cell
            and self.warnings == other.warnings
        )

    def __repr__(self) -> str:
        return f"Profile({self.side.value}, {self.mask!r})"


class VoxelSolid:
    """3D boolean occupancy grid; ``occupancy[x, y, z]`` with y up."""

    __slots__ = ("_occupancy", "cell")

    def __init__(self, occupancy, cell: CellDimensions | None = None):
        arr = np.array(occupancy, dtype=bool)
        if arr.ndim != 3:
            raise ValidationError(f"voxel occupancy must be 3D, got ndim={arr.ndim}")
        if min(arr.shape) < 1:
            raise ValidationError(f"voxel grid must be at least 1x1x1, got {arr.shape}")
        arr.setflags(write=False)
        self._occupancy = arr
        self.cell = cell if cell is not None else CellDimensions()

    @property
    def nx(self) -> int:
        return self._occupancy.shape[0]

    @property
    def ny(self) -> int:
        return self._occupancy.shape[1]

    @property
    def nz(self) -> int:
        return self._occupancy.shape[2]

    @property
    def occupancy(self) -> np.ndarray:
        return self._occupancy

    def occupied_count(self) -> int:
        return int(self._occupancy.sum())

    def voxel_volume_mm3(self) -> float:
        return self.cell.width_mm * self.cell.height_mm * self.cell.depth_mm

    def __eq__(self, other) -> bool:
        if not isinstance(other, VoxelSolid):
            return NotImplemented
        return (
            self._occupancy.shape == other._occupancy.shape
            and bool(np.array_equal(self._occupancy, other._occupancy))
            and self.cell == other.cell
        )

    def __repr__(self) -> str:
        return f"VoxelSolid({self.nx}x{self.ny}x{self.nz}, occupied={self.occupied_count()})"


def connected_components(mask: BrickBitmask) -> tuple[np.ndarray, int]:
    """Label 4-connected components of the filled cells.

    Returns ``(labels, count)`` where ``labels`` has the mask's shape,
    0 marks empty cells and components are numbered from 1 in scan order.
    Corner-touching bricks do not interlock, so diagonal adjacency is not
    a connection.
    """
    cells = mask.cells
    labels = np.zeros(cells.shape, dtype=np.int32)
    count = 0
    rows, cols = cells.shape
    for r in range(rows):
        for c in range(cols):
            if not cells[r, c] or labels[r, c]:
                continue
            count += 1
            queue = deque([(r, c)])
            labels[r, c] = count
            while queue:
                i, j = queue.popleft()
                for ni, nj in ((i - 1, j), (i + 1, j), (i, j - 1), (i, j + 1)):
                    if 0 <= ni < rows and 0 <= nj < cols and cells[ni, nj] and not labels[ni, nj]:
                        labels[ni, nj] = count
                        queue.append((ni, nj))
    return labels, count


def voxel_components(occupancy: np.ndarray) -> tuple[np.ndarray, int]:
    """Label 6-connected components of a 3D occupancy grid."""
    occ = np.asarray(occupancy, dtype=bool)
    labels = np.zeros(occ.shape, dtype=np.int32)
    count = 0
    nx, ny, nz = occ.shape
    for x0, y0, z0 in zip(*np.nonzero(occ)):
        if labels[x0, y0, z0]:
            continue
        count += 1
        queue = deque([(x0, y0, z0)])
        labels[x0, y0, z0] = count
        while queue:
            x, y, z = queue.popleft()
            for dx, dy, dz in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)):
                nx_, ny_, nz_ = x + dx, y + dy, z + dz
                if (
                    0 <= nx_ < nx
                    and 0 <= ny_ < ny
                    and 0 <= nz_ < nz
                    and occ[nx_, ny_, nz_]
                    and not labels[nx_, ny_, nz_]
                ):
                    labels[nx_, ny_, nz_] = count
                    queue.append((nx_, ny_, nz_))
    return labels, count


def outline_polygons(mask: BrickBitmask) -> list[np.ndarray]:
    """Trace the boundary of the filled region as closed polygons.

    Coordinates are in cell units on the y-up grid (cell ``(x, y)`` spans
    ``[x, x+1] x [y, y+1]``).  Outer boundaries wind counter-clockwise,
    holes clockwise; collinear runs are merged.  The union of the enclosed
    regions (even-odd rule) reproduces the mask exactly.
    """
    xy = mask.xy()
    if not xy.any():
        raise ValidationError("cannot outline an empty mask")
    w, h = xy.shape

    def filled(x: int, y: int) -> bool:
        return 0 <= x < w and 0 <= y < h and bool(xy[x, y])

    # Directed boundary edges, interior on the left.
    # Key: start vertex -> list of (end vertex, direction).
    out_edges: dict[tuple[int, int], list[tuple[int, int]]] = {}

    def add(a: tuple[int, int], b: tuple[int, int]):
        out_edges.setdefault(a, []).append(b)

    for x in range(w):
        for y in range(h):
            if not xy[x, y]:
                continue
            if not filled(x, y - 1):  # bottom edge, heading +x
                add((x, y), (x + 1, y))
            if not filled(x, y + 1):  # top edge, heading -x
                add((x + 1, y + 1), (x, y + 1))
            if not filled(x - 1, y):  # left edge, heading -y
                add((x, y + 1), (x, y))
            if not filled(x + 1, y):  # right edge, heading +y
                add((x + 1, y), (x + 1, y + 1))

    # Left-turn preference resolves checkerboard corners without creating
    # self-intersecting loops (turn order: left, straight, right).
    def pick_next(cur: tuple[int, int], d: tuple[int, int]) -> tuple[int, int]:
        candidates = out_edges[cur]
        if len(candidates) == 1:
            return candidates[0]
        left = (-d[1], d[0])
        for pref in (left, d, (d[1], -d[0])):
            target = (cur[0] + pref[0], cur[1] + pref[1])
            if target in candidates:
                return target
        return candidates[0]

    polygons: list[np.ndarray] = []
    while out_edges:
        start = min(out_edges)
        cur = start
        nxt = out_edges[cur][0]
        loop = [cur]
        while True:
            out_edges[cur].remove(nxt)
            if not out_edges[cur]:
                del out_edges[cur]
            d = (nxt[0] - cur[0], nxt[1] - cur[1])
            cur = nxt
            if cur == start:
                break
            loop.append(cur)
            nxt = pick_next(cur, d)
        # Merge collinear runs (all edges are axis-aligned and unit length).
        simplified = []
        n = len(loop)
        for i in range(n):
            prev, here, after = loop[i - 1], loop[i], loop[(i + 1) % n]
            if (here[0] - prev[0], here[1] - prev[1]) != (after[0] - here[0], after[1] - here[1]):
                simplified.append(here)
        polygons.append(np.array(simplified, dtype=np.int64))
    return polygons


def voxelize_extrusion(
    mask: BrickBitmask, depth_cells: int, cell: CellDimensions | None = None
) -> VoxelSolid:
    """Sweep a bitmask along z: ``occupancy[x, y, z] = mask(x, y)``."""
    if not isinstance(depth_cells, int) or isinstance(depth_cells, bool) or depth_cells < 1:
        raise ValidationError(f"extrusion depth must be a positive integer, got {depth_cells!r}")
    xy = mask.xy()
    occ = np.repeat(xy[:, :, np.newaxis], depth_cells, axis=2)
    return VoxelSolid(occ, cell=cell)
