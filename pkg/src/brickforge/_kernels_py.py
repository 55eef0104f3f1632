"""Numpy fallback for the compiled kernels.

The accumulation order and float widths mirror brickforge._kernels exactly
(window offsets scanned dy-major, float64 accumulators, float32 storage),
so both backends produce bit-identical results.
"""

from __future__ import annotations

import numpy as np

BACKEND = "python"


def mean_shift_filter(
    img: np.ndarray,
    spatial_radius: int,
    color_radius: float,
    max_iter: int,
    tol: float = 0.5,
) -> np.ndarray:
    """Flat-kernel mean-shift color migration with a fixed spatial window.

    Each pixel's color moves to the mean of the colors within its
    ``(2r+1)^2`` window that lie inside ``color_radius`` (L2, RGB).  All
    pixels update simultaneously; iteration stops when no pixel moved by
    ``tol`` or more on any channel.
    """
    cur = np.ascontiguousarray(img, dtype=np.float32)
    h, w, _ = cur.shape
    r = int(spatial_radius)
    cr2 = float(color_radius) * float(color_radius)

    for _ in range(int(max_iter)):
        acc = np.zeros((h, w, 3), dtype=np.float64)
        count = np.zeros((h, w), dtype=np.float64)
        cur64 = cur.astype(np.float64)
        for dy in range(-r, r + 1):
            ys0, ys1 = max(0, -dy), min(h, h - dy)
            yn0 = ys0 + dy
            for dx in range(-r, r + 1):
                xs0, xs1 = max(0, -dx), min(w, w - dx)
                xn0 = xs0 + dx
                nb = cur64[yn0 : yn0 + (ys1 - ys0), xn0 : xn0 + (xs1 - xs0)]
                ctr = cur64[ys0:ys1, xs0:xs1]
                d = nb - ctr
                dist = d[..., 0] * d[..., 0] + d[..., 1] * d[..., 1] + d[..., 2] * d[..., 2]
                ok = dist <= cr2
                acc[ys0:ys1, xs0:xs1] += np.where(ok[..., None], nb, 0.0)
                count[ys0:ys1, xs0:xs1] += ok
        nxt = (acc / count[..., None]).astype(np.float32)
        if float(np.max(np.abs(nxt.astype(np.float64) - cur64))) < tol:
            cur = nxt
            break
        cur = nxt
    return cur


def hysteresis_closure(strong: np.ndarray, weak: np.ndarray) -> np.ndarray:
    """All weak pixels 8-connected to a strong pixel (strong included)."""
    strong = np.asarray(strong, dtype=bool)
    weak = np.asarray(weak, dtype=bool)
    cur = strong & weak
    while True:
        grown = cur.copy()
        grown[1:, :] |= cur[:-1, :]
        grown[:-1, :] |= cur[1:, :]
        grown[:, 1:] |= cur[:, :-1]
        grown[:, :-1] |= cur[:, 1:]
        grown[1:, 1:] |= cur[:-1, :-1]
        grown[1:, :-1] |= cur[:-1, 1:]
        grown[:-1, 1:] |= cur[1:, :-1]
        grown[:-1, :-1] |= cur[1:, 1:]
        grown &= weak
        if np.array_equal(grown, cur):
            return cur
        cur = grown
