"""Boundary surface extraction for cell grids.

Both meshers weld face corners by (lattice point, local material component)
rather than by position alone.  Where two filled cells touch only along an
edge or corner, the materials around that lattice point form separate
face-connected components, and each component gets its own vertex copy;
this keeps every produced mesh edge-manifold (exactly two incident
triangles) even for checkerboard configurations.
"""

from __future__ import annotations

from collections import deque
from functools import lru_cache

import numpy as np

from .mesh import TriangleMesh


def _block_components(n_positions: int, adjacency: list[tuple[int, int]], pattern: int) -> np.ndarray:
    comp = np.full(n_positions, -1, dtype=np.int8)
    nxt = 0
    for start in range(n_positions):
        if not (pattern >> start) & 1 or comp[start] >= 0:
            continue
        comp[start] = nxt
        queue = deque([start])
        while queue:
            cur = queue.popleft()
            for a, b in adjacency:
                other = b if a == cur else (a if b == cur else -1)
                if other >= 0 and (pattern >> other) & 1 and comp[other] < 0:
                    comp[other] = nxt
                    queue.append(other)
        nxt += 1
    return comp


@lru_cache(maxsize=1)
def _lut_2d() -> np.ndarray:
    """(16, 4) component ids for 2x2 blocks; position bit = ix + 2*iy."""
    adj = [(0, 1), (2, 3), (0, 2), (1, 3)]
    return np.stack([_block_components(4, adj, p) for p in range(16)])


@lru_cache(maxsize=1)
def _lut_3d() -> np.ndarray:
    """(256, 8) component ids for 2x2x2 blocks; position bit = ix + 2*iy + 4*iz."""
    adj = []
    for p in range(8):
        for axis_bit in (1, 2, 4):
            q = p ^ axis_bit
            if q > p:
                adj.append((p, q))
    return np.stack([_block_components(8, adj, p) for p in range(256)])


def _build_mesh(all_keys: np.ndarray, key_coords, quads_ccw: np.ndarray) -> TriangleMesh:
    """Deduplicate corner keys into vertices and emit two triangles per quad."""
    uniq, inverse = np.unique(all_keys, return_inverse=True)
    verts = key_coords(uniq)
    corner = inverse.reshape(quads_ccw)
    tris = np.concatenate([corner[:, [0, 1, 2]], corner[:, [0, 2, 3]]])
    return TriangleMesh(verts, tris)


def voxel_surface_mesh(
    occ: np.ndarray,
    xs: np.ndarray,
    ys: np.ndarray,
    zs: np.ndarray,
    exterior_only: bool = False,
) -> TriangleMesh:
    """Mesh the boundary of a 3D occupancy grid.

    ``xs, ys, zs`` are lattice-plane coordinate arrays (len = n+1 along each
    axis), so non-uniform cell sizes are supported.  With ``exterior_only``
    faces of internal cavities are skipped (used by the lattice generator).
    """
    occ = np.asarray(occ, dtype=bool)
    nx, ny, nz = occ.shape
    pad = np.zeros((nx + 2, ny + 2, nz + 2), dtype=bool)
    pad[1:-1, 1:-1, 1:-1] = occ

    if exterior_only:
        empty_side = _exterior_empty(pad)
    else:
        empty_side = ~pad

    # corner pattern per lattice point: bit(ix + 2*iy + 4*iz) set when the
    # voxel at (point - 1 + offset) is filled
    code = np.zeros((nx + 1, ny + 1, nz + 1), dtype=np.uint16)
    for iz in (0, 1):
        for iy in (0, 1):
            for ix in (0, 1):
                bit = ix + 2 * iy + 4 * iz
                code |= pad[ix : ix + nx + 1, iy : iy + ny + 1, iz : iz + nz + 1].astype(np.uint16) << bit
    lut = _lut_3d()

    # The four lattice corners of each face, CCW seen from the outward
    # normal, expressed as offsets from the owner voxel.
    face_specs = [
        # (axis, direction, corner offsets)
        (0, +1, [(1, 0, 0), (1, 1, 0), (1, 1, 1), (1, 0, 1)]),
        (0, -1, [(0, 0, 0), (0, 0, 1), (0, 1, 1), (0, 1, 0)]),
        (1, +1, [(0, 1, 0), (0, 1, 1), (1, 1, 1), (1, 1, 0)]),
        (1, -1, [(0, 0, 0), (1, 0, 0), (1, 0, 1), (0, 0, 1)]),
        (2, +1, [(0, 0, 1), (1, 0, 1), (1, 1, 1), (0, 1, 1)]),
        (2, -1, [(0, 0, 0), (0, 1, 0), (1, 1, 0), (1, 0, 0)]),
    ]

    quad_keys = []
    dims = (nx + 1, ny + 1, nz + 1)
    for axis, direction, corners in face_specs:
        shift = [slice(1, -1)] * 3
        shift[axis] = slice(2, None) if direction > 0 else slice(None, -2)
        owners = np.argwhere(pad[1:-1, 1:-1, 1:-1] & empty_side[tuple(shift)])
        if len(owners) == 0:
            continue
        cols = []
        for off in corners:
            pt = owners + np.array(off)
            # owner position within the corner's 2x2x2 block
            rel = owners - pt + 1
            pos = rel[:, 0] + 2 * rel[:, 1] + 4 * rel[:, 2]
            comp = lut[code[pt[:, 0], pt[:, 1], pt[:, 2]], pos]
            key = ((pt[:, 0].astype(np.int64) * dims[1] + pt[:, 1]) * dims[2] + pt[:, 2]) * 8 + comp
            cols.append(key)
        quad_keys.append(np.stack(cols, axis=1))

    if not quad_keys:
        raise ValueError("solid has no boundary faces")
    keys = np.concatenate(quad_keys).reshape(-1)

    xs = np.asarray(xs, dtype=np.float64)
    ys = np.asarray(ys, dtype=np.float64)
    zs = np.asarray(zs, dtype=np.float64)

    def coords(uniq_keys: np.ndarray) -> np.ndarray:
        cell = uniq_keys // 8
        k = cell % dims[2]
        j = (cell // dims[2]) % dims[1]
        ii = cell // (dims[2] * dims[1])
        return np.stack([xs[ii], ys[j], zs[k]], axis=1)

    return _build_mesh(keys, coords, (-1, 4))


def _exterior_empty(pad: np.ndarray) -> np.ndarray:
    """Empty cells 6-connected to the padded border (cavities excluded)."""
    empty = ~pad
    outside = np.zeros_like(pad)
    outside[0, :, :] = outside[-1, :, :] = True
    outside[:, 0, :] = outside[:, -1, :] = True
    outside[:, :, 0] = outside[:, :, -1] = True
    outside &= empty
    while True:
        grown = outside.copy()
        grown[1:, :, :] |= outside[:-1, :, :]
        grown[:-1, :, :] |= outside[1:, :, :]
        grown[:, 1:, :] |= outside[:, :-1, :]
        grown[:, :-1, :] |= outside[:, 1:, :]
        grown[:, :, 1:] |= outside[:, :, :-1]
        grown[:, :, :-1] |= outside[:, :, 1:]
        grown &= empty
        if np.array_equal(grown, outside):
            return outside
        outside = grown


def exterior_boundary_faces(occ: np.ndarray) -> list[tuple[int, int, np.ndarray]]:
    """(axis, direction, owner voxel positions) for faces against the exterior."""
    occ = np.asarray(occ, dtype=bool)
    nx, ny, nz = occ.shape
    pad = np.zeros((nx + 2, ny + 2, nz + 2), dtype=bool)
    pad[1:-1, 1:-1, 1:-1] = occ
    empty_side = _exterior_empty(pad)
    out = []
    for axis in range(3):
        for direction in (+1, -1):
            shift = [slice(1, -1)] * 3
            shift[axis] = slice(2, None) if direction > 0 else slice(None, -2)
            owners = np.argwhere(pad[1:-1, 1:-1, 1:-1] & empty_side[tuple(shift)])
            out.append((axis, direction, owners))
    return out


def prism_mesh(
    xy: np.ndarray,
    cell_w: float,
    cell_h: float,
    z0: float,
    z1: float,
) -> TriangleMesh:
    """Extrude a y-up cell mask along z into a closed prism mesh.

    Caps are triangulated per cell; walls follow unit boundary edges, so
    cap and wall triangles share identical welded vertices and the result
    is watertight for any non-empty mask.
    """
    xy = np.asarray(xy, dtype=bool)
    if not xy.any():
        raise ValueError("cannot extrude an empty mask")
    if not z1 > z0:
        raise ValueError(f"invalid extrusion interval [{z0}, {z1}]")
    w, h = xy.shape
    pad = np.zeros((w + 2, h + 2), dtype=bool)
    pad[1:-1, 1:-1] = xy

    code = np.zeros((w + 1, h + 1), dtype=np.uint8)
    for iy in (0, 1):
        for ix in (0, 1):
            code |= pad[ix : ix + w + 1, iy : iy + h + 1].astype(np.uint8) << (ix + 2 * iy)
    lut = _lut_2d()
    dims = (w + 1, h + 1)

    def corner_key(pt: np.ndarray, owner: np.ndarray, level: int) -> np.ndarray:
        rel = owner - pt + 1
        pos = rel[:, 0] + 2 * rel[:, 1]
        comp = lut[code[pt[:, 0], pt[:, 1]], pos]
        return ((pt[:, 0].astype(np.int64) * dims[1] + pt[:, 1]) * 8 + comp) * 2 + level

    quads = []
    cells = np.argwhere(xy)

    # caps: top (z1) CCW seen from +z, bottom (z0) reversed
    cap_corners = [(0, 0), (1, 0), (1, 1), (0, 1)]
    top = [corner_key(cells + np.array(c), cells, 1) for c in cap_corners]
    quads.append(np.stack(top, axis=1))
    bottom = [corner_key(cells + np.array(c), cells, 0) for c in reversed(cap_corners)]
    quads.append(np.stack(bottom, axis=1))

    # walls: per unit boundary edge; corner order = CCW seen from outward normal
    wall_specs = [
        # (neighbor offset, [(corner offset, z level), ...])
        ((+1, 0), [((1, 0), 0), ((1, 1), 0), ((1, 1), 1), ((1, 0), 1)]),
        ((-1, 0), [((0, 0), 0), ((0, 0), 1), ((0, 1), 1), ((0, 1), 0)]),
        ((0, +1), [((0, 1), 0), ((0, 1), 1), ((1, 1), 1), ((1, 1), 0)]),
        ((0, -1), [((0, 0), 0), ((1, 0), 0), ((1, 0), 1), ((0, 0), 1)]),
    ]
    for (dx, dy), corners in wall_specs:
        owners = np.argwhere(xy & ~pad[1 + dx : 1 + dx + w, 1 + dy : 1 + dy + h])
        if len(owners) == 0:
            continue
        ring = [corner_key(owners + np.array(c), owners, lv) for c, lv in corners]
        quads.append(np.stack(ring, axis=1))

    keys = np.concatenate(quads).reshape(-1)
    zvals = np.array([z0, z1], dtype=np.float64)

    def coords(uniq_keys: np.ndarray) -> np.ndarray:
        level = uniq_keys % 2
        cell = uniq_keys // 2 // 8
        j = cell % dims[1]
        i = cell // dims[1]
        return np.stack([i * cell_w, j * cell_h, zvals[level]], axis=1)

    return _build_mesh(keys, coords, (-1, 4))
