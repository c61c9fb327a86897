"""Kernel backend selection.

The compiled extension is used when importable. Setting the environment
variable ``RYDSUPERHET_PURE_PYTHON=1`` before import forces the fallback.
"""
import os

from . import _pykernels

try:
    if os.environ.get("RYDSUPERHET_PURE_PYTHON", "") == "1":
        raise ImportError("pure-Python kernels requested")
    from . import _ckernels as _active
    BACKEND = "cython"
except ImportError:
    _active = _pykernels
    BACKEND = "python"

doppler_first_order = _active.doppler_first_order
block_tridiag_solve = _active.block_tridiag_solve
rk4_harmonics = _active.rk4_harmonics


def available_backends():
    """Map of backend name to kernel module, compiled first when present."""
    out = {}
    try:
        from . import _ckernels
        out["cython"] = _ckernels
    except ImportError:
        pass
    out["python"] = _pykernels
    return out
