"""Backend selection for the inner kernels.

The compiled extension is used when importable; set ``TPGRAPH_BACKEND=python``
to force the pure-Python fallback (``TPGRAPH_BACKEND=cython`` makes a missing
extension an import error instead of a silent fallback).
"""
from __future__ import annotations

import os

from . import _pykernels

_choice = os.environ.get("TPGRAPH_BACKEND", "auto").lower()

if _choice == "python":
    _impl = _pykernels
else:
    try:
        from . import _ckernels as _impl
    except ImportError:
        if _choice == "cython":
            raise
        _impl = _pykernels

BACKEND = "cython" if _impl is not _pykernels else "python"

OK = 0
SINGULAR = 1

draw_rows = _impl.draw_rows
batch_pcorr = _impl.batch_pcorr
test_pair = _impl.test_pair


def get_backend(name: str):
    """Return the kernel module for ``"python"`` or ``"cython"``."""
    if name == "python":
        return _pykernels
    if name == "cython":
        from . import _ckernels
        return _ckernels
    raise ValueError(f"unknown backend {name!r}")
