import numpy as np
import pytest

from brickforge import BrickBitmask, CellDimensions, Profile, Side
from brickforge.mesh import (
    TriangleMesh,
    degenerate_triangle_count,
    is_watertight,
)


def random_cropped_mask(rng, max_dim=20, p=0.5) -> BrickBitmask:
    """Random bitmask cropped to its filled bounding box."""
    rows, cols = rng.integers(1, max_dim + 1, size=2)
    cells = rng.random((rows, cols)) < p
    if not cells.any():
        cells[rng.integers(rows), rng.integers(cols)] = True
    rr = np.nonzero(cells.any(axis=1))[0]
    cc = np.nonzero(cells.any(axis=0))[0]
    return BrickBitmask(cells[rr.min() : rr.max() + 1, cc.min() : cc.max() + 1])


def random_profile(rng, max_dim=12, cell=None, side=Side.FRONT) -> Profile:
    return Profile(random_cropped_mask(rng, max_dim), side, cell or CellDimensions())


def random_box_union_solid(rng, max_dim=12, boxes=4, min_side=3) -> np.ndarray:
    """Connected union of boxes with at least min_side-thick features."""
    from brickforge import voxel_components

    lo = min(max(min_side + 1, 6), max_dim)
    shape = tuple(int(v) for v in rng.integers(lo, max_dim + 1, size=3))
    occ = np.zeros(shape, dtype=bool)
    for _ in range(boxes):
        size = [int(rng.integers(min_side, max(min_side + 1, s // 2 + 2))) for s in shape]
        pos = [int(rng.integers(0, shape[i] - size[i] + 1)) for i in range(3)]
        occ[pos[0] : pos[0] + size[0], pos[1] : pos[1] + size[1], pos[2] : pos[2] + size[2]] = True
    labels, n = voxel_components(occ)
    if n > 1:
        counts = [(labels == i).sum() for i in range(1, n + 1)]
        occ = labels == (1 + int(np.argmax(counts)))
    return occ


def assert_mesh_hygiene(mesh: TriangleMesh, context: str = ""):
    """Watertight, consistently oriented, no degenerate triangles."""
    assert is_watertight(mesh), f"mesh not watertight {context}"
    assert degenerate_triangle_count(mesh) == 0, f"degenerate triangles {context}"


@pytest.fixture
def rng():
    return np.random.default_rng(20260810)
