"""Hot-kernel backend selection.

Imports the compiled Cython kernels when the extension was built, otherwise
the numpy fallback.  ``HPSPLIT_PURE_PYTHON=1`` in the environment forces the
fallback (used by the kernel benchmark and the equivalence tests).
"""
import os

from hpsplit._kernels import _fallback
from hpsplit._kernels._fallback import ITERATION_CAP, OPTIMAL, UNBOUNDED

if os.environ.get("HPSPLIT_PURE_PYTHON") == "1":
    _impl = _fallback
    BACKEND = "python"
else:
    try:
        from hpsplit._kernels import _speedups as _impl
        BACKEND = "compiled"
    except ImportError:
        _impl = _fallback
        BACKEND = "python"

simplex_iterate = _impl.simplex_iterate
lasso_sweeps = _impl.lasso_sweeps

__all__ = [
    "BACKEND", "ITERATION_CAP", "OPTIMAL", "UNBOUNDED",
    "lasso_sweeps", "simplex_iterate",
]
