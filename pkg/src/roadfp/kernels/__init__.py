"""Hot-kernel dispatch: compiled extension when available, numpy otherwise.

Set ROADFP_BACKEND=python (or =compiled) to force a backend. The selected
backend name is exposed as BACKEND for diagnostics and benchmarks.
"""

import os

from . import pyref

_requested = os.environ.get("ROADFP_BACKEND", "").strip().lower()

if _requested in ("python", "numpy"):
    _impl = pyref
    BACKEND = "python"
elif _requested in ("", "c", "compiled"):
    try:
        from . import _ckernels as _impl
        BACKEND = "compiled"
    except ImportError:
        if _requested:
            raise
        _impl = pyref
        BACKEND = "python"
else:
    raise RuntimeError(f"unknown ROADFP_BACKEND value: {_requested!r}")

conv2d_forward = _impl.conv2d_forward
conv2d_backward_input = _impl.conv2d_backward_input
conv2d_backward_params = _impl.conv2d_backward_params
maxpool2_forward = _impl.maxpool2_forward
maxpool2_backward = _impl.maxpool2_backward
track_distance = _impl.track_distance
