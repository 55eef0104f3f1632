"""Kernel backend selection.

Prefers the compiled extension, falls back to the numpy implementations.
Set BRICKFORGE_KERNELS=python to force the fallback (used by the
benchmark and the parity tests).
"""

from __future__ import annotations

import os

if os.environ.get("BRICKFORGE_KERNELS", "").lower() == "python":
    from brickforge import _kernels_py as _impl
else:
    try:
        from brickforge import _kernels as _impl  # type: ignore[attr-defined]
    except ImportError:
        from brickforge import _kernels_py as _impl

BACKEND: str = _impl.BACKEND
mean_shift_filter = _impl.mean_shift_filter
hysteresis_closure = _impl.hysteresis_closure
