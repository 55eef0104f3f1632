"""8-bit RGB raster wrapper with PNG/JPEG io."""

from __future__ import annotations

import io
import os

import numpy as np
from PIL import Image

from ..errors import ValidationError


class RawImage:
    """An (height, width, 3) uint8 RGB raster."""

    __slots__ = ("_pixels",)

    def __init__(self, pixels):
        arr = np.asarray(pixels)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValidationError(f"expected (h, w, 3) pixels, got shape {arr.shape}")
        if arr.dtype != np.uint8:
            if np.issubdtype(arr.dtype, np.floating):
                arr = np.clip(np.rint(arr), 0, 255)
            arr = arr.astype(np.uint8)
        arr = np.ascontiguousarray(arr)
        arr.setflags(write=False)
        self._pixels = arr

    @property
    def pixels(self) -> np.ndarray:
        return self._pixels

    @property
    def width(self) -> int:
        return self._pixels.shape[1]

    @property
    def height(self) -> int:
        return self._pixels.shape[0]

    def luminance(self) -> np.ndarray:
        """Rec. 601 luma as float64."""
        p = self._pixels.astype(np.float64)
        return 0.299 * p[:, :, 0] + 0.587 * p[:, :, 1] + 0.114 * p[:, :, 2]

    @classmethod
    def open(cls, source) -> "RawImage":
        with Image.open(source) as im:
            return cls(np.asarray(im.convert("RGB")))

    def save(self, destination, format: str | None = None) -> None:
        im = Image.fromarray(self._pixels, mode="RGB")
        if format is None and not hasattr(destination, "write"):
            im.save(os.fspath(destination))
        else:
            im.save(destination, format=format or "PNG")

    def png_bytes(self) -> bytes:
        buf = io.BytesIO()
        Image.fromarray(self._pixels, mode="RGB").save(buf, format="PNG")
        return buf.getvalue()

    def __eq__(self, other) -> bool:
        if not isinstance(other, RawImage):
            return NotImplemented
        return self._pixels.shape == other._pixels.shape and bool(
            np.array_equal(self._pixels, other._pixels)
        )

    def __repr__(self) -> str:
        return f"RawImage({self.width}x{self.height})"
