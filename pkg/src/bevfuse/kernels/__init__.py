"""Hot-kernel backend selection.

Imports the compiled Cython core when it is built, otherwise falls back to
the numpy reference implementations. Set ``BEVFUSE_PURE_PYTHON=1`` to force
the fallback (used by the parity tests and the kernel benchmark).
"""

import os

from . import fallback

if os.environ.get("BEVFUSE_PURE_PYTHON", "") not in ("", "0"):
    _impl = fallback
    BACKEND = "python"
else:
    try:
        from . import _core as _impl

        BACKEND = "compiled"
    except ImportError:
        _impl = fallback
        BACKEND = "python"

im2col = _impl.im2col
col2im = _impl.col2im
scatter_add_rows = _impl.scatter_add_rows
bilinear_sample = _impl.bilinear_sample
bilinear_sample_grad = _impl.bilinear_sample_grad
nearest_points = _impl.nearest_points

__all__ = [
    "BACKEND",
    "fallback",
    "im2col",
    "col2im",
    "scatter_add_rows",
    "bilinear_sample",
    "bilinear_sample_grad",
    "nearest_points",
]
