from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fibermeasure.errors import EmptyLocus, NoContraction
from fibermeasure.fields import PadicScalar
from fibermeasure.lift import Cell, dist_to_zero, hensel_lift, zero_cells
from fibermeasure.poly import MultiPoly, PolyMap, evaluate, parse_poly, partial
from fibermeasure.residues import PadicRing

Z5 = PadicRing(5)


def test_sqrt2_in_z7_digits():
    cert = hensel_lift(PolyMap.parse(["x0^2 - 2"]), (0,), [3], target=12,
                       backend=("padic", 7, 20, None))
    y = cert.point[0]
    assert y.residue(2) == 10
    assert y.residue(3) == 108
    assert [a for a in range(7 ** 4) if (a * a - 2) % 7 ** 4 == 0 and a % 7 == 3] == \
        [y.residue(4)]
    assert evaluate(parse_poly("x0^2 - 2", 1), [y]).valuation() >= 12


def test_linear_lift_is_one_step():
    cert = hensel_lift(PolyMap.parse(["x0 - 7"]), (0,), [2], target=10,
                       backend=("padic", 5, 20, None))
    assert cert.iterations == 1
    assert cert.point[0].to_fraction() == 7


def test_double_root_rejected():
    with pytest.raises(NoContraction):
        hensel_lift(PolyMap.parse(["x0^2"]), (0,), [5], target=8, backend=("padic", 5, 20, None))


def test_real_newton_lift():
    cert = hensel_lift(PolyMap.parse(["x0^2 + x1^2 - 1"]), (0,), [0.9, 0.3],
                       backend=("real", 0, 0, None))
    x, y = cert.point
    assert abs(float(x) ** 2 + float(y) ** 2 - 1) < 1e-12


def test_zero_cells_examples():
    t = zero_cells(parse_poly("x0", 1), Z5, 2)
    assert t.leaves() == [Cell((0,), 2)]
    t = zero_cells(parse_poly("x0^2 + x1^2 - 1"), Z5, 1)
    assert sorted(c.base for c in t.leaves()) == [(0, 1), (0, 4), (1, 0), (4, 0)]
    t = zero_cells(parse_poly("x0^2 + 1", 1), PadicRing(3), 4)
    assert t.is_empty()
    assert t.empty and max(c.depth for c in t.empty) == 1


def test_dist_examples():
    d = dist_to_zero([5], parse_poly("x0", 1), Z5)
    assert d.norm.as_fraction() == Fraction(1, 5) and d.exact
    f = parse_poly("x0^2", 1)
    d = dist_to_zero([5], f, Z5)
    assert d.norm.as_fraction() == Fraction(1, 5)
    assert PadicScalar.from_rational(25, 5).norm().as_fraction() == d.norm.as_fraction() ** 2


def test_dist_circle_point():
    # |f(1,5)| = 1/25 and |grad f| = 1, so the nearest zero is (sqrt(-24), 5) = (1 + O(25), 5)
    d = dist_to_zero([1, 5], parse_poly("x0^2 + x1^2 - 1"), Z5)
    assert d.norm.as_fraction() == Fraction(1, 25)


def test_dist_on_empty_locus_raises():
    with pytest.raises(EmptyLocus):
        dist_to_zero([1], parse_poly("x0^2 + 1", 1), PadicRing(3))


def test_dist_zero_at_a_zero():
    d = dist_to_zero([1, 0], parse_poly("x0^2 + x1^2 - 1"), Z5)
    assert d.norm.is_zero()


# ------------------------------------------------------------- properties

small = st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3)), st.integers(-4, 4),
                        min_size=1, max_size=4).map(lambda d: MultiPoly(2, d))


@given(small, st.sampled_from([3, 5]))
def test_zero_cells_monotone(f, p):
    ring = PadicRing(p)
    coarse = zero_cells(f, ring, 2)
    fine = zero_cells(f, ring, 3)
    parents = {c.base for c in coarse.leaves()}
    M = p ** 2
    for c in fine.leaves():
        assert tuple(v % M for v in c.base) in parents


@given(small, st.integers(0, 24), st.integers(0, 24))
def test_newton_bound_and_certified_lifts(f, a, b):
    p = 5
    x = [a, b]
    grads = [evaluate(partial(f, j), x) for j in range(2)]
    fx = evaluate(f, x)
    if fx == 0 or all(g == 0 for g in grads):
        return
    j = max(range(2), key=lambda k: PadicScalar.from_rational(grads[k], p).norm()
            if grads[k] else PadicScalar.zero(p).norm())
    try:
        cert = hensel_lift(PolyMap([f]), (j,), x, target=10, backend=("padic", p, 30, None))
    except NoContraction:
        return
    # re-verify the certificate at a fresh, higher working precision
    hi = [PadicScalar.from_rational(v.to_fraction(), p, 40) for v in cert.point]
    assert evaluate(f, hi).valuation() >= 10
    d = dist_to_zero(x, f, PadicRing(p))
    bound = PadicScalar.from_rational(fx, p).norm().as_fraction() / \
        PadicScalar.from_rational(grads[j], p).norm().as_fraction()
    assert d.norm.as_fraction() <= bound
