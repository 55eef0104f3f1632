"""Optional graph-cut refinement of the thresholded foreground.

Iterative min-cut on an 8-neighbor pixel graph: unary terms from per-side
Gaussian color models re-estimated each round, pairwise terms from local
contrast.  The min-cut itself is solved with scipy's max-flow.
"""

from __future__ import annotations

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_flow

from .config import PipelineConfig
from .image import RawImage

_CAPACITY_SCALE = 1000  # max-flow wants integer capacities
_HARD_LINK = 10**9


def _erode(mask: np.ndarray, steps: int) -> np.ndarray:
    out = mask.copy()
    for _ in range(steps):
        nxt = out.copy()
        nxt[1:, :] &= out[:-1, :]
        nxt[:-1, :] &= out[1:, :]
        nxt[:, 1:] &= out[:, :-1]
        nxt[:, :-1] &= out[:, 1:]
        out = nxt
    return out


def _gaussian_neg_log(pixels: np.ndarray, sample: np.ndarray) -> np.ndarray:
    mean = sample.mean(axis=0)
    var = sample.var(axis=0) + 4.0  # floor keeps flat backdrops well-posed
    d = pixels - mean
    return 0.5 * ((d * d) / var).sum(axis=-1) + 0.5 * np.log(var).sum()


def refine_foreground(img: RawImage, initial: np.ndarray, cfg: PipelineConfig) -> np.ndarray:
    h, w = initial.shape
    n = h * w
    p = img.pixels.astype(np.float64)
    flat = p.reshape(-1, 3)

    sure_fg = _erode(initial, 2)
    if not sure_fg.any():
        sure_fg = initial
    sure_bg = ~initial
    sure_bg = _erode(sure_bg, 2)

    # contrast-weighted pairwise capacities over the 8-neighborhood
    offsets = [(0, 1), (1, 0), (1, 1), (1, -1)]
    beta_samples = []
    for dy, dx in offsets:
        a = p[max(0, -dy) : h - max(0, dy), max(0, -dx) : w - max(0, dx)]
        b = p[max(0, dy) :, max(0, dx) :] if dx >= 0 else p[max(0, dy) :, : w - 1]
        b = b[: a.shape[0], : a.shape[1]]
        beta_samples.append(((a - b) ** 2).sum(axis=-1).ravel())
    beta = 1.0 / max(2.0 * float(np.concatenate(beta_samples).mean()), 1e-6)

    seg = initial.copy()
    for _ in range(max(1, cfg.graphcut_iterations)):
        fg_pix = flat[seg.ravel()]
        bg_pix = flat[~seg.ravel()]
        if len(fg_pix) == 0 or len(bg_pix) == 0:
            break
        cost_fg = _gaussian_neg_log(flat, fg_pix)  # cost of labeling background... see below
        cost_bg = _gaussian_neg_log(flat, bg_pix)

        # source = foreground terminal, sink = background terminal
        src_cap = np.clip(cost_bg * _CAPACITY_SCALE, 0, _HARD_LINK).astype(np.int64)
        snk_cap = np.clip(cost_fg * _CAPACITY_SCALE, 0, _HARD_LINK).astype(np.int64)
        src_cap[sure_fg.ravel()] = _HARD_LINK
        snk_cap[sure_fg.ravel()] = 0
        snk_cap[sure_bg.ravel()] = _HARD_LINK
        src_cap[sure_bg.ravel()] = 0

        rows, cols, caps = [], [], []
        idx = np.arange(n).reshape(h, w)
        for dy, dx in offsets:
            ys = slice(max(0, -dy), h - max(0, dy))
            xs = slice(max(0, -dx), w - max(0, dx))
            a_idx = idx[ys, xs].ravel()
            b_idx = idx[max(0, dy) :, max(0, dx) :] if dx >= 0 else idx[max(0, dy) :, : w - 1]
            b_idx = b_idx[: idx[ys, xs].shape[0], : idx[ys, xs].shape[1]].ravel()
            diff = ((flat[a_idx] - flat[b_idx]) ** 2).sum(axis=-1)
            cap = (50.0 * np.exp(-beta * diff) * _CAPACITY_SCALE).astype(np.int64)
            rows.extend((a_idx, b_idx))
            cols.extend((b_idx, a_idx))
            caps.extend((cap, cap))

        source, sink = n, n + 1
        rows.append(np.full(n, source))
        cols.append(np.arange(n))
        caps.append(src_cap)
        rows.append(np.arange(n))
        cols.append(np.full(n, sink))
        caps.append(snk_cap)

        graph = csr_matrix(
            (np.concatenate(caps), (np.concatenate(rows), np.concatenate(cols))),
            shape=(n + 2, n + 2),
            dtype=np.int64,
        )
        result = maximum_flow(graph, source, sink)
        # pixels still reachable from the source in the residual graph are foreground
        residual = graph - result.flow
        residual.data = np.maximum(residual.data, 0)
        reachable = _bfs_reachable(residual, source, n)
        new_seg = reachable.reshape(h, w)
        if np.array_equal(new_seg, seg):
            break
        seg = new_seg
    return seg


def _bfs_reachable(residual: csr_matrix, source: int, n: int) -> np.ndarray:
    seen = np.zeros(residual.shape[0], dtype=bool)
    seen[source] = True
    frontier = [source]
    indptr, indices, data = residual.indptr, residual.indices, residual.data
    while frontier:
        nxt = []
        for u in frontier:
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                if data[k] > 0 and not seen[v]:
                    seen[v] = True
                    nxt.append(v)
        frontier = nxt
    return seen[:n]
