"""Backend selection for the hot kernels.

The compiled extension is used when it was built; otherwise the numpy
fallback is imported. Setting ``PSCVX_PURE_PYTHON=1`` forces the fallback.
"""
from __future__ import annotations

import os

from . import _pykernels

BACKEND = "python"
_impl = _pykernels

if os.environ.get("PSCVX_PURE_PYTHON", "") not in ("1", "true", "yes"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        _impl = _pykernels

jacobi_eigh_batch = _impl.jacobi_eigh_batch


def available_backends():
    """Map backend name to module for every backend importable here."""
    out = {"python": _pykernels}
    try:
        from . import _ckernels

        out["cython"] = _ckernels
    except ImportError:
        pass
    return out
