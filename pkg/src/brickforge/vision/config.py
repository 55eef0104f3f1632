"""Tunable parameters of the scan pipeline."""

from __future__ import annotations

from dataclasses import dataclass, fields

from ..errors import ValidationError


@dataclass(frozen=True)
class PipelineConfig:
    # working resolution; photographs are cropped to this aspect then scaled
    target_width: int = 300
    target_height: int = 255
    blur_sigma: float = 1.0
    # mean-shift color quantization
    meanshift_spatial_radius: int = 10
    meanshift_color_radius: float = 25.0
    meanshift_max_iter: int = 10
    # Canny on 8-bit gradient magnitude (Sobel 3x3, magnitude / 4)
    canny_low: float = 50.0
    canny_high: float = 150.0
    # near-white per-channel level for the reference brick
    white_threshold: int = 200
    # fraction of a cell's area that must be foreground to count as filled
    occupancy_threshold: float = 0.5
    # luminance level separating the model from the black backdrop
    foreground_threshold: float = 60.0
    # bright blobs are treated as glare and dropped only when they are both
    # below this fraction of the largest blob and smaller than one grid cell
    # at the minimum supported pitch; real model parts stay detectable
    min_component_fraction: float = 0.25
    min_component_px: int = 64
    # optional graph-cut refinement of the thresholded foreground
    use_graphcut: bool = False
    graphcut_iterations: int = 2

    def __post_init__(self):
        if self.target_width < 1 or self.target_height < 1:
            raise ValidationError("target dimensions must be positive")
        if not (0.0 < self.occupancy_threshold <= 1.0):
            raise ValidationError(
                f"occupancy_threshold must be in (0, 1], got {self.occupancy_threshold}"
            )
        if not (self.canny_low < self.canny_high):
            raise ValidationError("canny_low must be below canny_high")
        if self.blur_sigma < 0:
            raise ValidationError("blur_sigma must be non-negative")
        if self.meanshift_spatial_radius < 1:
            raise ValidationError("meanshift_spatial_radius must be at least 1")
        if not (0 <= self.white_threshold <= 255):
            raise ValidationError("white_threshold must be an 8-bit level")
        if not (0.0 < self.min_component_fraction <= 1.0):
            raise ValidationError("min_component_fraction must be in (0, 1]")

    @classmethod
    def from_mapping(cls, data: dict) -> "PipelineConfig":
        known = {f.name: f.type for f in fields(cls)}
        unknown = set(data) - set(known)
        if unknown:
            raise ValidationError(f"unknown config keys: {sorted(unknown)}")
        return cls(**data)
