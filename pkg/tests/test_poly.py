import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given
from hypothesis import strategies as st

from fibermeasure.errors import ParseError
from fibermeasure.fields import LaurentScalar, PadicScalar
from fibermeasure.poly import (MultiPoly, PolyMap, compose, euler_residual, evaluate,
                               generalized_gradient, jacobian_minor, parse_poly, partial)

REMARK = "x0^2*x2^2 + x1^3*x2"


def test_parse_examples():
    f = parse_poly(REMARK)
    assert f.terms == {(2, 0, 2): 1, (0, 3, 1): 1}
    z = parse_poly("0")
    assert z.is_zero()
    q = parse_poly("x0^4 + x1^4 - x2^4")
    assert q.degree == 4 and q.is_homogeneous()


@pytest.mark.parametrize("bad", ["x0^", "x0 + * x1", "y^2", "x0^-1", "(x0", ""])
def test_parse_errors(bad):
    with pytest.raises(ParseError):
        parse_poly(bad)


def test_eval_examples():
    f = parse_poly(REMARK)
    n = 8.0
    assert evaluate(f, [n, -(2 * n) ** (1 / 3), 1 / n]) == pytest.approx(-1.0, abs=1e-12)
    g = parse_poly("x0^2 + x1^2 + 7")
    assert evaluate(g, [0, 0]) == 7
    v = evaluate(parse_poly("x0^2 + x1^2"), [PadicScalar.from_rational(1, 5),
                                             PadicScalar.from_rational(2, 5)])
    assert v.residue(3) == 5 and float(v.norm()) == pytest.approx(0.2)


def test_partial_examples():
    f = parse_poly(REMARK)
    assert partial(f, 0) == parse_poly("2*x0*x2^2", 3)
    yp = parse_poly("x0^3", 1)
    assert partial(yp, 0, char=3).is_zero()
    assert partial(MultiPoly.const(5, 2), 1).is_zero()


def test_jacobian_minor_examples():
    F = PolyMap.parse(["x0"])
    assert jacobian_minor(F, (0,)) == MultiPoly.const(1, 1)
    G = PolyMap.parse(["x0^2 + x1^2 - x2^2"])
    assert jacobian_minor(G, (2,)) == parse_poly("-2*x2", 3)
    H = PolyMap.parse(["x0 + x1", "x0*x1"])
    assert jacobian_minor(H, (0, 1)) == parse_poly("x0 - x1", 2)


def test_generalized_gradient_shapes():
    f = parse_poly("x0^2 + x1*x2")
    gg = generalized_gradient(PolyMap([f]))
    assert [J for J, _ in gg] == [(0,), (1,), (2,)]
    assert [g for _, g in gg] == [partial(f, i) for i in range(3)]
    F = PolyMap.parse(["x0 + x1^2", "x1*x2 - x0"])
    assert len(generalized_gradient(F)) == 3


def test_remark_gradient_decay():
    f = parse_poly(REMARK)
    grads = [partial(f, i) for i in range(3)]
    vals = []
    for n in (1e3, 1e4, 1e5, 1e6):
        x = [n, -np.cbrt(2 * n), 1 / n]
        vals.append(max(abs(evaluate(g, x)) for g in grads) * np.cbrt(n))
    assert max(vals) / min(vals) < 1.01


def test_compose_examples():
    f = parse_poly("x0^2 + 3*x0*x1")
    ident = [MultiPoly.var(i, 2) for i in range(2)]
    assert compose(f, ident) == f
    g = parse_poly("x0^2", 1)
    assert compose(g, [parse_poly("x0 + 1", 1)]) == parse_poly("x0^2 + 2*x0 + 1", 1)
    h = parse_poly("x0^3 - x0*x1^2", 2)
    s = [MultiPoly.var(i, 2).scale(Fraction(1, 25)) for i in range(2)]
    assert compose(h, s) == h.scale(Fraction(1, 25 ** 3))


def test_euler_examples():
    assert euler_residual(parse_poly("x0^4 + x1^4 - x2^4")).is_zero()
    assert euler_residual(parse_poly("x0^2 + x0", 1)) == parse_poly("-x0", 1)
    assert euler_residual(MultiPoly.const(3, 2)).is_zero()


def test_laurent_evaluation_char_p():
    # (1 + t)^2 = 1 + t^2 over F_2
    t = LaurentScalar.t_power(1, 2, 10)
    one = LaurentScalar.from_rational(1, 2, 10)
    v = evaluate(parse_poly("x0^2", 1), [one + t])
    assert v.residue(4) == (LaurentScalar.from_rational(1, 2, 10) + t * t).residue(4)


# ------------------------------------------------------------- properties

def polys(m, max_deg=3):
    exps = st.tuples(*[st.integers(0, max_deg)] * m)
    return st.dictionaries(exps, st.integers(-5, 5), max_size=6).map(lambda d: MultiPoly(m, d))


@given(polys(3), st.integers(0, 2), st.integers(0, 2))
def test_mixed_partials_commute(f, i, j):
    assert partial(partial(f, i), j) == partial(partial(f, j), i)


@given(polys(2), polys(2), polys(2), st.integers(-30, 30), st.integers(-30, 30),
       st.sampled_from([3, 5, 7]))
def test_compose_commutes_with_eval(f, s0, s1, a, b, p):
    x = [PadicScalar.from_rational(a, p, 30), PadicScalar.from_rational(b, p, 30)]
    lhs = evaluate(compose(f, [s0, s1]), x)
    inner = [evaluate(s0, x), evaluate(s1, x)]
    rhs = evaluate(f, inner)
    d = lhs - rhs
    assert d.is_zero() or d.valuation() >= 20


@given(st.integers(1, 4), st.integers(0, 5), st.data())
def test_euler_residual_detects_homogeneity(m, d, data):
    exps = [e for e in itertools.product(range(d + 1), repeat=m) if sum(e) == d]
    coefs = data.draw(st.lists(st.integers(-4, 4), min_size=len(exps), max_size=len(exps)))
    f = MultiPoly(m, dict(zip(exps, coefs)))
    assert euler_residual(f).is_zero()
    assume(not f.is_zero())
    g = f + MultiPoly.var(0, m) ** (d + 1)
    assert not euler_residual(g).is_zero()


@given(polys(3))
def test_minor_r1_is_partial(f):
    F = PolyMap([f])
    for i in range(3):
        assert jacobian_minor(F, (i,)) == partial(f, i)
