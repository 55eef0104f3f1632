"""Photograph-to-bitmask pipeline: preprocessing, color quantization, edge
detection, foreground extraction, reference-brick calibration and grid
rasterization."""

from .config import PipelineConfig
from .image import RawImage
from .pipeline import (
    SegmentationResult,
    detect_edges,
    extract_foreground,
    locate_reference_brick,
    preprocess,
    quantize_colors,
    rasterize_to_bitmask,
    scan_profile,
)
from .synth import SynthTruth, synth_render

__all__ = [
    "PipelineConfig",
    "RawImage",
    "SegmentationResult",
    "SynthTruth",
    "detect_edges",
    "extract_foreground",
    "locate_reference_brick",
    "preprocess",
    "quantize_colors",
    "rasterize_to_bitmask",
    "scan_profile",
    "synth_render",
]
