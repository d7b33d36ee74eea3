"""Backend selection for the inner loops.

The compiled extension is used when importable; set SSVBOUNDS_PURE_PYTHON=1
to force the pure-Python fallback.
"""

import os

from . import _kernels_py

if os.environ.get("SSVBOUNDS_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl

        BACKEND = "cython"
    except ImportError:
        _impl = _kernels_py
        BACKEND = "python"

osborne_sweeps = _impl.osborne_sweeps
quartic_eval = _impl.quartic_eval
quartic_value = _impl.quartic_value
quartic_newton = _impl.quartic_newton
align = _impl.align

KIND_SCALAR = _kernels_py.KIND_SCALAR
KIND_FULL = _kernels_py.KIND_FULL

__all__ = [
    "BACKEND",
    "osborne_sweeps",
    "quartic_eval",
    "quartic_value",
    "quartic_newton",
    "align",
    "KIND_SCALAR",
    "KIND_FULL",
]
