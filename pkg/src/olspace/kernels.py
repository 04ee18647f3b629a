"""Select the compiled kernels when available, else the pure-Python fallback.

Set OLSPACE_PURE_PYTHON=1 to force the fallback.
"""
import os

import numpy as np

from . import _pykernels

BACKEND = "python"
_impl = _pykernels
if not os.environ.get("OLSPACE_PURE_PYTHON"):
    try:
        from . import _ckernels as _impl  # type: ignore[no-redef]

        BACKEND = "cython"
    except ImportError:
        pass

POWER, POWERLOG, EXPM1 = _pykernels.POWER, _pykernels.POWERLOG, _pykernels.EXPM1


def _arr(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def use(backend: str):
    """Switch backend at runtime ('cython' or 'python'); used by the benchmark."""
    global _impl, BACKEND
    if backend == "python":
        _impl, BACKEND = _pykernels, "python"
    else:
        from . import _ckernels

        _impl, BACKEND = _ckernels, "cython"


def rearrange(values, measures):
    return _impl.rearrange(list(values), list(measures))


def distribution(values, measures, lam):
    if BACKEND == "python":
        return float(_impl.distribution(values, measures, float(lam)))
    return _impl.distribution(_arr(values), _arr(measures), float(lam))


def modular_sum(phivals, wbreaks):
    if BACKEND == "python":
        return float(_impl.modular_sum(list(phivals), list(wbreaks)))
    return _impl.modular_sum(_arr(phivals), _arr(wbreaks))


def scaled_modular(code, p, q, values, dw, eps):
    if BACKEND == "python":
        return float(_impl.scaled_modular(code, p, q, list(values), list(dw), eps))
    return float(_impl.scaled_modular(code, p, q, _arr(values), _arr(dw), eps))


def norm_bracket(code, p, q, values, dw, eps0):
    if BACKEND == "python":
        return _impl.norm_bracket(code, p, q, list(values), list(dw), eps0)
    return _impl.norm_bracket(code, p, q, _arr(values), _arr(dw), eps0)


def norm_bisect(code, p, q, values, dw, lo, hi, rtol, maxiter=400):
    if BACKEND == "python":
        return _impl.norm_bisect(code, p, q, list(values), list(dw), lo, hi, rtol, maxiter)
    return _impl.norm_bisect(code, p, q, _arr(values), _arr(dw), lo, hi, rtol, maxiter)
