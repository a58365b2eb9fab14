"""Selects the compiled kernels when available, else the numpy fallback.

Set FIBERMEASURE_PURE=1 to force the fallback.  BACKEND names the choice.
"""

import os

import numpy as np

from . import _fallback

_compiled = None
if os.environ.get("FIBERMEASURE_PURE", "") not in ("1", "true", "yes"):
    try:
        from . import _kernels as _compiled
    except ImportError:
        _compiled = None

BACKEND = "compiled" if _compiled is not None else "python"

_LIMIT = 1 << 62


def _fits(M) -> bool:
    return _compiled is not None and int(M) < _LIMIT


def _i64(a):
    return np.ascontiguousarray(a, dtype=np.int64)


def eval_mod(coef, exps, out_idx, n_out, points, M, backend=None):
    """Evaluate flattened polys (coef residues, exps, out_idx) at points mod M."""
    if backend != "python" and _fits(M) and np.asarray(points).dtype != object:
        return _compiled.eval_mod(_i64(coef), _i64(exps), _i64(out_idx), int(n_out),
                                  _i64(points), int(M))
    return _fallback.eval_mod(coef, exps, out_idx, n_out, points, M)


def count_zeros(coef, exps, out_idx, n_out, M, m, q, sphere=False, backend=None):
    if backend != "python" and _fits(M):
        return _compiled.count_zeros(_i64(coef), _i64(exps), _i64(out_idx), int(n_out),
                                     int(M), int(m), int(q), bool(sphere))
    return _fallback.count_zeros(coef, exps, out_idx, n_out, M, m, q, sphere)


def eval_real(coef, exps, out_idx, n_out, points, backend=None):
    if backend != "python" and _compiled is not None:
        return _compiled.eval_real(np.ascontiguousarray(coef, dtype=np.float64), _i64(exps),
                                   _i64(out_idx), int(n_out),
                                   np.ascontiguousarray(points, dtype=np.float64))
    return _fallback.eval_real(coef, exps, out_idx, n_out, points)


def valuations(x, q, cap, backend=None):
    x = np.asarray(x)
    if backend != "python" and _compiled is not None and x.dtype != object:
        return _compiled.valuations(_i64(x), int(q), int(cap))
    return _fallback.valuations(x, q, cap)
