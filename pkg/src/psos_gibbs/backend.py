"""Selects the compiled kernels when available, else the numpy fallback.

Set ``PSOS_PURE_PYTHON=1`` to force the fallback.
"""

import os

from psos_gibbs import _fallback

try:
    if os.environ.get("PSOS_PURE_PYTHON"):
        raise ImportError("PSOS_PURE_PYTHON set")
    from psos_gibbs import _kernels as _impl

    BACKEND = "cython"
except ImportError:
    _impl = _fallback
    BACKEND = "python"

multistart = _impl.multistart
gamma_grid_max = _impl.gamma_grid_max


def implementations():
    """All importable kernel modules keyed by name (for tests and benchmarks)."""
    out = {"python": _fallback}
    try:
        from psos_gibbs import _kernels
    except ImportError:
        return out
    out["cython"] = _kernels
    return out
