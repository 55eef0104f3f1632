"""The scan pipeline stages, composed by :func:`scan_profile`.

Every stage is a pure function of (input, config); errors carry the stage
name so callers can attribute failures.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .. import kernels
from ..errors import (
    AmbiguousReference,
    NoModelFound,
    ReferenceBrickNotFound,
    ValidationError,
)
from ..grid import BrickBitmask, CellDimensions, Profile, Side, connected_components
from ..reconstruct import DISCONNECTED_WARNING
from .config import PipelineConfig
from .image import RawImage


# -- preprocessing -------------------------------------------------------------


def _bilinear_resize(src: np.ndarray, out_w: int, out_h: int) -> np.ndarray:
    h, w = src.shape[:2]
    # half-pixel mapping: identical sizes come back bit-exact
    xs = (np.arange(out_w) + 0.5) * (w / out_w) - 0.5
    ys = (np.arange(out_h) + 0.5) * (h / out_h) - 0.5
    x0 = np.clip(np.floor(xs).astype(int), 0, w - 1)
    y0 = np.clip(np.floor(ys).astype(int), 0, h - 1)
    x1 = np.minimum(x0 + 1, w - 1)
    y1 = np.minimum(y0 + 1, h - 1)
    fx = np.clip(xs - x0, 0.0, 1.0)
    fy = np.clip(ys - y0, 0.0, 1.0)
    p = src.astype(np.float64)
    top = p[y0][:, x0] * (1 - fx)[None, :, None] + p[y0][:, x1] * fx[None, :, None]
    bot = p[y1][:, x0] * (1 - fx)[None, :, None] + p[y1][:, x1] * fx[None, :, None]
    out = top * (1 - fy)[:, None, None] + bot * fy[:, None, None]
    return np.clip(np.rint(out), 0, 255).astype(np.uint8)


def _gaussian_blur(src: np.ndarray, sigma: float) -> np.ndarray:
    if sigma <= 0:
        return src
    radius = max(1, int(math.ceil(3.0 * sigma)))
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    kernel = np.exp(-(x * x) / (2.0 * sigma * sigma))
    kernel /= kernel.sum()
    p = src.astype(np.float64)
    for axis in (0, 1):
        pad = [(0, 0)] * p.ndim
        pad[axis] = (radius, radius)
        padded = np.pad(p, pad, mode="reflect")
        acc = np.zeros_like(p)
        for k in range(2 * radius + 1):
            sl = [slice(None)] * p.ndim
            sl[axis] = slice(k, k + p.shape[axis])
            acc += kernel[k] * padded[tuple(sl)]
        p = acc
    return np.clip(np.rint(p), 0, 255).astype(np.uint8)


def preprocess(img: RawImage, cfg: PipelineConfig) -> RawImage:
    """Center-crop to the target aspect ratio, scale to the working
    resolution, then denoise with a Gaussian blur."""
    if img.width < 8 or img.height < 8:
        raise ValidationError(
            f"image {img.width}x{img.height} is too small to process", stage="preprocess"
        )
    tw, th = cfg.target_width, cfg.target_height
    w, h = img.width, img.height
    if w * th > h * tw:  # too wide: crop width
        cw, ch = max(1, round(h * tw / th)), h
    else:
        cw, ch = w, max(1, round(w * th / tw))
    x0 = (w - cw) // 2
    y0 = (h - ch) // 2
    cropped = img.pixels[y0 : y0 + ch, x0 : x0 + cw]
    resized = cropped if (cw, ch) == (tw, th) else _bilinear_resize(cropped, tw, th)
    return RawImage(_gaussian_blur(resized, cfg.blur_sigma))


# -- color quantization --------------------------------------------------------


def quantize_colors(img: RawImage, cfg: PipelineConfig) -> RawImage:
    """Mean-shift color migration followed by global mode merging.

    Pixel colors migrate to local modes (flat kernel, fixed spatial
    window); converged colors within half the color radius of an
    established mode are then merged, so flat regions end up single-color.
    """
    shifted = kernels.mean_shift_filter(
        img.pixels.astype(np.float32),
        int(cfg.meanshift_spatial_radius),
        float(cfg.meanshift_color_radius),
        int(cfg.meanshift_max_iter),
    )
    u8 = np.clip(np.rint(shifted), 0, 255).astype(np.uint8)

    flat = u8.reshape(-1, 3)
    packed = (
        flat[:, 0].astype(np.int64) * 65536 + flat[:, 1].astype(np.int64) * 256 + flat[:, 2]
    )
    uniq, inverse, counts = np.unique(packed, return_inverse=True, return_counts=True)
    colors = np.stack([uniq // 65536, (uniq // 256) % 256, uniq % 256], axis=1).astype(np.float64)

    merge_r2 = (cfg.meanshift_color_radius / 2.0) ** 2
    assignment = np.full(len(uniq), -1, dtype=np.int64)
    mode_colors: list[np.ndarray] = []
    remaining = np.argsort(-counts, kind="stable")
    remaining_mask = np.ones(len(uniq), dtype=bool)
    while remaining_mask.any():
        head = remaining[remaining_mask[remaining]][0]
        seed = colors[head]
        d2 = ((colors - seed) ** 2).sum(axis=1)
        member = remaining_mask & (d2 <= merge_r2)
        weights = counts[member].astype(np.float64)
        mean = (colors[member] * weights[:, None]).sum(axis=0) / weights.sum()
        assignment[member] = len(mode_colors)
        mode_colors.append(np.clip(np.rint(mean), 0, 255))
        remaining_mask &= ~member
    table = np.array(mode_colors, dtype=np.uint8)
    return RawImage(table[assignment[inverse]].reshape(img.pixels.shape))


# -- edges ---------------------------------------------------------------------


def detect_edges(img: RawImage, cfg: PipelineConfig) -> np.ndarray:
    """Canny: Sobel gradient, non-maximum suppression, hysteresis."""
    gray = img.luminance()
    p = np.pad(gray, 1, mode="reflect")
    gx = (
        (p[:-2, 2:] + 2 * p[1:-1, 2:] + p[2:, 2:])
        - (p[:-2, :-2] + 2 * p[1:-1, :-2] + p[2:, :-2])
    )
    gy = (
        (p[2:, :-2] + 2 * p[2:, 1:-1] + p[2:, 2:])
        - (p[:-2, :-2] + 2 * p[:-2, 1:-1] + p[:-2, 2:])
    )
    mag = np.hypot(gx, gy) / 4.0  # a clean step of d levels scores d

    # non-maximum suppression along the quantized gradient direction
    angle = np.mod(np.arctan2(gy, gx), math.pi)
    direction = ((angle + math.pi / 8) // (math.pi / 4)).astype(int) % 4
    padm = np.pad(mag, 1, mode="constant")
    neighbor_pairs = {
        0: ((0, 1), (0, -1)),  # gradient ~horizontal: compare left/right
        1: ((-1, 1), (1, -1)),
        2: ((1, 0), (-1, 0)),
        3: ((1, 1), (-1, -1)),
    }
    keep = np.zeros_like(mag, dtype=bool)
    h, w = mag.shape
    for d, ((dy1, dx1), (dy2, dx2)) in neighbor_pairs.items():
        n1 = padm[1 + dy1 : 1 + dy1 + h, 1 + dx1 : 1 + dx1 + w]
        n2 = padm[1 + dy2 : 1 + dy2 + h, 1 + dx2 : 1 + dx2 + w]
        keep |= (direction == d) & (mag >= n1) & (mag >= n2)
    nms = np.where(keep, mag, 0.0)

    strong = nms >= cfg.canny_high
    weak = nms >= cfg.canny_low
    return kernels.hysteresis_closure(
        strong.astype(np.uint8), weak.astype(np.uint8)
    ).astype(bool)


# -- foreground ----------------------------------------------------------------


def _label_components(mask: np.ndarray) -> list[np.ndarray]:
    """8-connected components of a boolean raster, as separate masks."""
    out: list[np.ndarray] = []
    rest = mask.copy()
    while rest.any():
        ys, xs = np.nonzero(rest)
        seed = np.zeros_like(mask)
        seed[ys[0], xs[0]] = True
        comp = kernels.hysteresis_closure(seed.astype(np.uint8), rest.astype(np.uint8)).astype(
            bool
        )
        out.append(comp)
        rest &= ~comp
    return out


def extract_foreground(img: RawImage, edges: np.ndarray, cfg: PipelineConfig) -> np.ndarray:
    """Separate the model from the black backdrop.

    Luminance thresholding is the workhorse (the capture protocol mandates
    a black background); the Canny edges bound the region of interest, and
    an optional graph-cut refinement can be enabled in the config.  Bright
    blobs well below the largest one are discarded as glare, but parts of
    comparable size are kept so disconnected models remain visible.
    """
    if edges.shape != img.pixels.shape[:2]:
        raise ValidationError("edge raster does not match image dimensions", stage="foreground")
    bright = img.luminance() >= cfg.foreground_threshold
    if edges.any():
        # The edge bounding box trims stray bright clutter, but only when it
        # actually covers the model: soft gradients (heavy upscaling, dim
        # colors) can make Canny under-fire, and then thresholding alone is
        # authoritative.
        ys, xs = np.nonzero(edges)
        margin = 3
        roi = np.zeros_like(bright)
        roi[
            max(0, ys.min() - margin) : ys.max() + 1 + margin,
            max(0, xs.min() - margin) : xs.max() + 1 + margin,
        ] = True
        restricted = bright & roi
        if restricted.sum() >= 0.98 * bright.sum():
            bright = restricted

    if cfg.use_graphcut and bright.any():
        from .graphcut import refine_foreground

        bright = refine_foreground(img, bright, cfg)

    components = _label_components(bright)
    if not components:
        raise NoModelFound("no model found on the backdrop", stage="foreground")
    areas = np.array([c.sum() for c in components])
    keep = (areas >= cfg.min_component_fraction * areas.max()) | (
        areas >= cfg.min_component_px
    )
    fg = np.zeros_like(bright)
    for comp, k in zip(components, keep):
        if k:
            fg |= comp
    return fg


# -- reference brick -----------------------------------------------------------


@dataclass(frozen=True)
class SegmentationResult:
    foreground: np.ndarray
    reference_box: tuple[int, int, int, int]  # x, y, w, h in pixels
    px_per_cell_x: float
    px_per_cell_y: float

    def __post_init__(self):
        x, y, w, h = self.reference_box
        fh, fw = self.foreground.shape
        if not (0 <= x and 0 <= y and x + w <= fw and y + h <= fh and w > 0 and h > 0):
            raise ValidationError(f"reference box {self.reference_box} outside image bounds")
        if not (self.px_per_cell_x > 0 and self.px_per_cell_y > 0):
            raise ValidationError("cell pixel sizes must be positive")


def locate_reference_brick(
    img: RawImage, foreground: np.ndarray, cfg: PipelineConfig
) -> SegmentationResult:
    """Find the single white brick and infer the grid's pixel pitch.

    The white brick spans exactly one grid cell in the photographed plane,
    so its bounding box calibrates x and y pitches independently.
    """
    if not foreground.any():
        raise NoModelFound("empty foreground", stage="reference")
    white = (img.pixels >= cfg.white_threshold).all(axis=2) & foreground
    components = _label_components(white)
    if not components:
        raise ReferenceBrickNotFound(
            "no near-white region inside the model; is the white brick visible?",
            stage="reference",
        )
    areas = np.array([c.sum() for c in components])
    order = np.argsort(-areas, kind="stable")
    if len(areas) > 1 and areas[order[1]] >= 0.8 * areas[order[0]]:
        raise AmbiguousReference(
            f"{int((areas >= 0.8 * areas[order[0]]).sum())} white regions of comparable size; "
            "embed exactly one white brick",
            stage="reference",
        )
    best = components[order[0]]
    ys, xs = np.nonzero(best)
    x0, x1 = int(xs.min()), int(xs.max())
    y0, y1 = int(ys.min()), int(ys.max())
    w = x1 - x0 + 1
    h = y1 - y0 + 1
    return SegmentationResult(
        foreground=foreground,
        reference_box=(x0, y0, w, h),
        px_per_cell_x=float(w),
        px_per_cell_y=float(h),
    )


# -- grid rasterization --------------------------------------------------------


def _pitch_candidates(span: float, guess: float) -> list[float]:
    """Pitches that make the foreground span a whole number of cells.

    Blur erodes the strict near-white threshold, so the reference box
    under-measures the true pitch (never over-measures).  Every cell count
    whose implied pitch falls in the plausible band above the measurement
    is offered; the occupancy-polarity search picks the winner.
    """
    # the measured box sits in [pitch - erosion, pitch + bleed]: the strict
    # near-white threshold erodes up to a few pixels (more after downscale)
    # while mode assignment can bleed about one pixel outward
    lo = max(2.0, guess - 1.5)
    hi = guess + max(6.5, 0.45 * guess)
    counts = range(max(1, math.ceil(span / hi)), max(1, math.floor(span / lo)) + 1)
    out = sorted(span / c for c in counts)
    if not out:
        return [guess]
    if len(out) > 24:  # keep the candidates nearest the plausible center
        center = guess + 2.5
        out = sorted(out, key=lambda p: abs(p - center))[:24]
        out.sort()
    return out


def _cell_coverage(integral: np.ndarray, xb: np.ndarray, yb: np.ndarray) -> np.ndarray:
    """Mean foreground coverage for every cell of a boundary grid."""
    s = integral
    areas = (xb[1:] - xb[:-1])[None, :] * (yb[1:] - yb[:-1])[:, None]
    sums = (
        s[yb[1:]][:, xb[1:]]
        - s[yb[:-1]][:, xb[1:]]
        - s[yb[1:]][:, xb[:-1]]
        + s[yb[:-1]][:, xb[:-1]]
    )
    with np.errstate(invalid="ignore", divide="ignore"):
        cov = np.where(areas > 0, sums / np.maximum(areas, 1), 0.0)
    return cov


def rasterize_to_bitmask(
    foreground: np.ndarray, seg: SegmentationResult, cfg: PipelineConfig
) -> BrickBitmask:
    """Register a cell grid to the foreground and threshold per-cell coverage.

    The grid pitch starts from the reference brick, is refined so the
    foreground bounding box spans a whole number of cells, and the sub-cell
    offset is searched in 1 px steps for maximum occupancy polarity
    (cells should be either mostly filled or mostly empty).
    """
    fg = foreground.astype(np.float64)
    h, w = fg.shape
    ys, xs = np.nonzero(foreground)
    if len(xs) == 0:
        raise NoModelFound("empty foreground", stage="rasterize")
    integral = np.zeros((h + 1, w + 1))
    integral[1:, 1:] = fg.cumsum(0).cumsum(1)

    pxs = _pitch_candidates(xs.max() - xs.min() + 1, seg.px_per_cell_x)
    pys = _pitch_candidates(ys.max() - ys.min() + 1, seg.px_per_cell_y)

    x_lo, x_hi = int(xs.min()), int(xs.max())
    y_lo, y_hi = int(ys.min()), int(ys.max())
    bx, by, bw, bh = seg.reference_box

    def boundary_matrix(pitch: float, limit: int, lo: int, hi: int) -> np.ndarray:
        # rows: integer sub-cell offsets in [0, pitch); columns: cell
        # boundaries covering [lo, hi] plus one cell of margin (cells far
        # from the model carry no registration signal)
        k0 = math.floor((lo - pitch) / pitch) - 1
        k1 = math.ceil((hi + pitch) / pitch) + 1
        offsets = np.arange(max(1, int(math.ceil(pitch))))[:, None]
        b = np.rint(offsets + np.arange(k0, k1 + 1)[None, :] * pitch)
        return np.clip(b, 0, limit).astype(np.int64)

    def splits_reference(b: np.ndarray, lo: int, size: int) -> np.ndarray:
        # the white brick occupies a single cell, so no boundary may cut
        # deep through its interior (2 px slack for blur erosion)
        return ((b > lo + 2) & (b < lo + size - 2)).any(axis=1)

    def pitch_order(cands: list[float], guess: float) -> list[float]:
        return sorted(cands, key=lambda p: abs(p - (guess + 2.5)))

    # A correctly registered grid has no cells anywhere near half coverage
    # (threshold bleed stays within ~15% of a cell) while misregistered
    # grids always straddle cells; accept a near-perfect pair immediately,
    # but only when its pitch also sits right on the box measurement, since
    # aliased pitches can score well on self-similar masks.
    good_enough = (1.0, 1.0, 0.97)

    def trusted(px: float, py: float) -> bool:
        return abs(px - bw) <= 1.5 and abs(py - bh) <= 1.5
    best = None
    for py in pitch_order(pys, seg.px_per_cell_y):
        yb_all = boundary_matrix(py, h, y_lo, y_hi)  # (ndy, nj)
        y_ok = ~splits_reference(yb_all, by, bh)
        sy = integral[yb_all]  # (ndy, nj, w+1)
        for px in pitch_order(pxs, seg.px_per_cell_x):
            xb_all = boundary_matrix(px, w, x_lo, x_hi)  # (ndx, nk)
            x_ok = ~splits_reference(xb_all, bx, bw)
            g = sy[:, :, xb_all]  # (ndy, nj, ndx, nk)
            sums = g[:, 1:, :, 1:] - g[:, :-1, :, 1:] - g[:, 1:, :, :-1] + g[:, :-1, :, :-1]
            widths = (xb_all[:, 1:] - xb_all[:, :-1])[None, None, :, :]
            heights = (yb_all[:, 1:] - yb_all[:, :-1])[:, :, None, None]
            areas = heights * widths
            # score only cells within one pitch of the model so every
            # offset/pitch candidate is judged over the same region
            x_live = (xb_all[:, 1:] > x_lo - px) & (xb_all[:, :-1] < x_hi + px)
            y_live = (yb_all[:, 1:] > y_lo - py) & (yb_all[:, :-1] < y_hi + py)
            valid = (areas > 0) & y_live[:, :, None, None] & x_live[None, None, :, :]
            with np.errstate(invalid="ignore"):
                cov = np.where(valid, sums / np.maximum(areas, 1), 0.0)
            polarity = np.where(valid, np.maximum(cov, 1.0 - cov), 1.0)
            nvalid = np.maximum(valid.sum(axis=(1, 3)), 1)  # per (dy, dx)
            frac = ((polarity >= 0.75) & valid).sum(axis=(1, 3)) / nvalid
            mean = (polarity * valid).sum(axis=(1, 3)) / nvalid
            # soft preference for pitches consistent with the measured box
            # (typical erosion is ~2.5 px); breaks aliasing ties on masks
            # with little registration signal of their own
            mean = mean - 0.02 * (
                abs(px - (bw + 2.5)) / max(bw, 1) + abs(py - (bh + 2.5)) / max(bh, 1)
            )
            fit = (y_ok[:, None] & x_ok[None, :]).astype(np.float64)
            stacked = np.stack([fit, frac, mean])
            flat = stacked.reshape(3, -1)
            # lexicographic argmax: fit, then dead-zone-free fraction, then mean
            order = np.lexsort(flat[::-1])
            pick = int(order[-1])
            dy, dx = divmod(pick, frac.shape[1])
            score = (float(fit[dy, dx]), float(frac[dy, dx]), float(mean[dy, dx]))
            if best is None or score > best[0]:
                best = (score, px, py, dx, dy)
                if score >= good_enough and trusted(px, py):
                    break
        else:
            continue
        break

    _, px, py, dx, dy = best

    def boundaries(offset: int, pitch: float, limit: int, lo: int, hi: int) -> np.ndarray:
        k0 = math.floor((lo - pitch - offset) / pitch)
        k1 = math.ceil((hi + pitch - offset) / pitch)
        b = np.rint(offset + np.arange(k0, k1 + 1) * pitch).astype(np.int64)
        return np.unique(np.clip(b, 0, limit))

    xb = boundaries(dx, px, w, x_lo, x_hi)
    yb = boundaries(dy, py, h, y_lo, y_hi)
    cov = _cell_coverage(integral, xb, yb)
    cells = cov >= cfg.occupancy_threshold
    if not cells.any():
        raise NoModelFound("no cells reach the occupancy threshold", stage="rasterize")
    rows = np.nonzero(cells.any(axis=1))[0]
    cols = np.nonzero(cells.any(axis=0))[0]
    return BrickBitmask(cells[rows.min() : rows.max() + 1, cols.min() : cols.max() + 1])


# -- composition ---------------------------------------------------------------


def scan_profile(
    img: RawImage,
    side: Side | str,
    cfg: PipelineConfig | None = None,
    cell: CellDimensions | None = None,
) -> Profile:
    """Run the full pipeline and label the result with its side.

    The reference brick maps one grid cell to the configured physical cell
    size.  A profile that rasterizes into multiple 4-connected parts gets a
    disconnection warning (such models print as loose pieces).
    """
    cfg = cfg or PipelineConfig()
    side = side if isinstance(side, Side) else Side.parse(side)
    pre = preprocess(img, cfg)
    quant = quantize_colors(pre, cfg)
    edges = detect_edges(quant, cfg)
    fg = extract_foreground(quant, edges, cfg)
    seg = locate_reference_brick(quant, fg, cfg)
    mask = rasterize_to_bitmask(fg, seg, cfg)
    _, count = connected_components(mask)
    warnings = ()
    if count > 1:
        warnings = (f"{DISCONNECTED_WARNING}: mask has {count} disconnected parts",)
    return Profile(mask, side, cell or CellDimensions(), warnings)
