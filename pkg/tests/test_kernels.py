"""The compiled kernels and the numpy fallback agree on every input."""

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from fibermeasure import _fallback, kernels
from fibermeasure.poly import MultiPoly, to_arrays

compiled = pytest.mark.skipif(kernels._compiled is None, reason="compiled core not built")


def arrays(draw, m, n_out, M=None):
    polys = []
    for _ in range(n_out):
        terms = draw(st.dictionaries(st.tuples(*[st.integers(0, 4)] * m), st.integers(-9, 9),
                                     min_size=1, max_size=5))
        polys.append(MultiPoly(m, terms))
    coefs, exps, idx = to_arrays(polys)
    if M:
        coef = np.array([int(c) % M for c in coefs], dtype=np.int64)
    else:
        coef = np.array([float(c) for c in coefs])
    return coef, np.ascontiguousarray(exps, dtype=np.int64), np.asarray(idx, dtype=np.int64)


@compiled
@given(st.data(), st.integers(1, 3), st.integers(1, 2), st.sampled_from([2, 3, 5, 7]),
       st.integers(1, 9))
def test_eval_mod_agrees(data, m, n_out, p, k):
    M = p ** k
    coef, exps, idx = arrays(data.draw, m, n_out, M)
    pts = np.array(data.draw(st.lists(st.lists(st.integers(0, M - 1), min_size=m, max_size=m),
                                      min_size=1, max_size=40)), dtype=np.int64)
    a = kernels.eval_mod(coef, exps, idx, n_out, pts, M)
    b = _fallback.eval_mod(coef, exps, idx, n_out, pts, M)
    assert np.array_equal(np.asarray(a), np.asarray(b))


@compiled
@given(st.data(), st.integers(1, 3), st.sampled_from([2, 3, 5]), st.integers(1, 2),
       st.booleans())
def test_count_zeros_agrees(data, m, p, k, sphere):
    M = p ** k
    coef, exps, idx = arrays(data.draw, m, 1, M)
    a = kernels.count_zeros(coef, exps, idx, 1, M, m, p, sphere)
    b = _fallback.count_zeros(coef, exps, idx, 1, M, m, p, sphere)
    assert a == b


@compiled
@given(st.data(), st.integers(1, 3))
def test_eval_real_agrees(data, m):
    coef, exps, idx = arrays(data.draw, m, 2)
    X = np.array(data.draw(st.lists(st.lists(st.floats(-3, 3), min_size=m, max_size=m),
                                    min_size=1, max_size=30)))
    a = kernels.eval_real(coef, exps, idx, 2, X)
    b = _fallback.eval_real(coef, exps, idx, 2, X)
    assert np.allclose(a, b, rtol=1e-12, atol=1e-9)


@compiled
@given(st.lists(st.integers(0, 5 ** 20), min_size=1, max_size=50), st.integers(1, 20))
def test_valuations_agree(xs, cap):
    x = np.array(xs, dtype=np.int64)
    assert np.array_equal(kernels.valuations(x, 5, cap), _fallback.valuations(x, 5, cap))


def test_backend_is_named():
    assert kernels.BACKEND in ("compiled", "python")


def test_pure_env_selects_fallback():
    import subprocess
    import sys

    out = subprocess.run([sys.executable, "-c",
                          "from fibermeasure import kernels; print(kernels.BACKEND)"],
                         env={"FIBERMEASURE_PURE": "1", "PATH": "/usr/bin:/bin"},
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"
