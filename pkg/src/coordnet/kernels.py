"""Kernel backend selection.

The compiled Cython module is used when it was built; otherwise, or when
``COORDNET_PURE_PYTHON=1`` is set, the numpy fallback is used. Both expose
the same functions with the same results.
"""
import os

from . import _fallback

BACKENDS = {"python": _fallback}

try:
    from . import _kernels
except ImportError:
    _kernels = None
else:
    BACKENDS["cython"] = _kernels

if _kernels is not None and os.environ.get("COORDNET_PURE_PYTHON", "") in ("", "0"):
    BACKEND = "cython"
else:
    BACKEND = "python"


def get_backend(name=None):
    name = name or BACKEND
    try:
        return BACKENDS[name]
    except KeyError:
        raise ValueError(f"kernel backend {name!r} is not available (have {sorted(BACKENDS)})") from None


def topk_rows(sims, row_offset, k, out_idx, out_val, backend=None):
    get_backend(backend).topk_rows(sims, row_offset, k, out_idx, out_val)
