"""Backend selection for the hot kernels.

The compiled extension is used when it imports; otherwise the numpy
fallback.  ``RCSM_KERNELS=python`` forces the fallback.
"""
import os

from . import _pykernels
from .errors import ArgumentError

BACKEND = "python"
cavi_sweep = _pykernels.cavi_sweep
mlga_search = _pykernels.mlga_search
mlga_search_gram = _pykernels.mlga_search_gram

if os.environ.get("RCSM_KERNELS", "").lower() != "python":
    try:
        from . import _ckernels
    except ImportError:  # extension not built
        pass
    else:
        BACKEND = "cython"
        cavi_sweep = _ckernels.cavi_sweep
        mlga_search = _ckernels.mlga_search
        mlga_search_gram = _ckernels.mlga_search_gram


def get_backend(name=None):
    """Return the kernel module for ``name`` ("python", "cython"; default: active)."""
    if name is None:
        name = BACKEND
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ArgumentError(f"unknown kernel backend {name!r}")
