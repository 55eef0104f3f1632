"""Synthetic renderer: draws a bitmask as colored cells on a black backdrop.

This is the test oracle for the scan pipeline: deterministic for a fixed
seed, exactly one white reference cell, all other filled cells in saturated
non-white colors, and a ground-truth record of everything the renderer did.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ValidationError
from ..grid import BrickBitmask
from .image import RawImage

# canvas aspect matches the default working resolution (300:255 = 20:17)
_ASPECT = (20, 17)
_WHITE = np.array([255, 255, 255], dtype=np.uint8)


@dataclass(frozen=True)
class SynthTruth:
    mask: BrickBitmask
    white_cell: tuple[int, int]  # (row, col)
    origin_px: tuple[int, int]  # top-left of cell (0, 0)
    px_per_cell: tuple[int, int]
    silhouette: np.ndarray  # bool raster of painted cells


def _random_cell_color(rng: np.random.Generator) -> np.ndarray:
    """A saturated color that cannot be mistaken for white, black or gray."""
    while True:
        c = rng.integers(40, 216, size=3)
        lum = 0.299 * c[0] + 0.587 * c[1] + 0.114 * c[2]
        if lum >= 90 and c.min() <= 170:
            return c.astype(np.uint8)


def synth_render(
    mask: BrickBitmask,
    palette_seed: int = 0,
    noise_sigma: float = 0.0,
    px_per_cell: tuple[int, int] = (12, 12),
    margin_cells: float = 2.0,
) -> tuple[RawImage, SynthTruth]:
    """Render a bitmask orthographically; returns the image and ground truth.

    The canvas is padded symmetrically to the working aspect ratio so the
    preprocessing crop never clips the model.
    """
    if mask.filled_count() == 0:
        raise ValidationError("cannot render an empty mask")
    px, py = int(px_per_cell[0]), int(px_per_cell[1])
    if px < 2 or py < 2:
        raise ValidationError(f"px_per_cell must be at least 2, got {(px, py)}")

    content_w = mask.cols * px + int(round(2 * margin_cells * px))
    content_h = mask.rows * py + int(round(2 * margin_cells * py))
    unit = max(
        -(-content_w // _ASPECT[0]),  # ceil div
        -(-content_h // _ASPECT[1]),
    )
    width, height = _ASPECT[0] * unit, _ASPECT[1] * unit
    ox = (width - mask.cols * px) // 2
    oy = (height - mask.rows * py) // 2

    rng = np.random.default_rng(palette_seed)
    filled = np.argwhere(mask.cells)
    white_idx = int(rng.integers(0, len(filled)))
    white_cell = (int(filled[white_idx][0]), int(filled[white_idx][1]))

    pixels = np.zeros((height, width, 3), dtype=np.uint8)
    silhouette = np.zeros((height, width), dtype=bool)
    for r, c in filled:
        color = _WHITE if (r, c) == white_cell else _random_cell_color(rng)
        x0, y0 = ox + c * px, oy + r * py
        pixels[y0 : y0 + py, x0 : x0 + px] = color
        silhouette[y0 : y0 + py, x0 : x0 + px] = True

    if noise_sigma > 0:
        noisy = pixels.astype(np.float64) + rng.normal(0.0, noise_sigma, pixels.shape)
        pixels = np.clip(np.rint(noisy), 0, 255).astype(np.uint8)

    truth = SynthTruth(
        mask=mask,
        white_cell=white_cell,
        origin_px=(ox, oy),
        px_per_cell=(px, py),
        silhouette=silhouette,
    )
    return RawImage(pixels), truth
