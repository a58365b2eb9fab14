import math
from fractions import Fraction

import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import integrate

from fibermeasure.errors import BudgetExceeded
from fibermeasure.lift import Cell
from fibermeasure.measure import (Region, canonical_measure, fiber_solutions, growth_series,
                                  oracle_depth, point_count_density, tempered_report)
from fibermeasure.poly import MultiPoly, PolyMap
from fibermeasure.realmeasure import real_annulus_series, real_fiber_measure
from fibermeasure.residues import PadicRing

Z5 = PadicRing(5)
CIRCLE = PolyMap.parse(["x0^2 + x1^2"])
LINE = PolyMap.parse(["x0"], 2)


def test_fiber_solutions_examples():
    pts = fiber_solutions(LINE, 0, (0,), Cell((3,), 2), Z5)
    assert len(pts) == 1 and pts[0].minor_norm.as_fraction() == 1
    pts = fiber_solutions(PolyMap.parse(["x0^2 + x1^2 - 1"]), 0, (0,), Cell((0,), 1), Z5)
    assert sorted(p.point[0].residue(1) for p in pts) == [1, 4]
    assert all(p.minor_norm.as_fraction() == 1 for p in pts)


def test_canonical_measure_examples():
    assert canonical_measure(LINE, 0, Region(), 4, Z5).value == 1
    est = canonical_measure(CIRCLE, 1, Region(), 4, Z5)
    assert est.value == Fraction(4, 5) and est.error_bound == 0
    assert "vol(R^m) = 1" in est.normalization


def test_point_count_examples():
    assert point_count_density(LINE, 0, Region(), 2, Z5) == 1
    assert point_count_density(CIRCLE, 1, Region(), 1, Z5) == Fraction(4, 5)
    assert point_count_density(CIRCLE, 1, Region(), 2, Z5) == Fraction(4, 5)
    assert point_count_density(CIRCLE, 1, Region(), 1, PadicRing(3)) == Fraction(4, 3)


def test_growth_of_a_line():
    gs = growth_series(LINE, 0, 3, depth=4, ring=Z5)
    assert gs.measures == [1, 5, 25, 125]
    assert gs.slope == pytest.approx(1.0)


def test_growth_of_the_sphere_is_exact_slope_one():
    # frozen from the engine and confirmed sphere by sphere with point counts
    F = PolyMap.parse(["x0^2 + x1^2 + x2^2"])
    gs = growth_series(F, 1, 5, depth=6, ring=Z5)
    assert gs.measures == [Fraction(6, 5), 6, 30, 150, 750, 3750]
    assert gs.slope == pytest.approx(1.0)
    for s, want in [(1, Fraction(24, 5)), (2, 24)]:
        assert point_count_density(F, 1, Region(t=s, inner=s - 1), 3, Z5) == want


def test_unresolved_cells_are_reported():
    est = canonical_measure(PolyMap.parse(["x0^2 + x1^2"]), 0, Region(), 3, Z5)
    assert est.unresolved > 0 and est.error_bound > 0
    assert any("SingularCells" in f for f in est.flags)


def test_real_line_and_circle():
    est = real_fiber_measure(LINE, 0, Region(radius=0.5), 20000, seed=1)
    assert abs(est.value - 1.0) < 3 * est.stderr + 1e-9
    est = real_fiber_measure(CIRCLE, 1, Region(radius=2.0), 10 ** 5, seed=2)
    # density 1/|grad| on the max-norm chart; the arc length is 2 pi
    assert abs(2 * est.value - 2 * math.pi) / (2 * math.pi) < 0.02


def _quartic_annulus(R):
    # two roots z = +-(x^4 + y^4)^(1/4), density 1/|4 z^3|; 4 symmetric wedges |y| <= x
    f = lambda y, x: 2.0 / (4.0 * (x ** 4 + y ** 4) ** 0.75)
    val, _ = integrate.dblquad(f, R / 2, R, lambda x: -x, lambda x: x, epsabs=1e-10)
    return 4 * val


def test_quartic_annuli_against_quadrature():
    F = PolyMap.parse(["x0^4 + x1^4 - x2^4"])
    ests = real_annulus_series(F, 0, [1, 2, 3], 40000, seed=0, coords=(0, 1))
    for j, e in zip([1, 2, 3], ests):
        want = _quartic_annulus(2.0 ** -j)
        assert abs(e.value - want) < 4 * e.stderr + 0.01 * want
    # homogeneity: each halving doubles the annulus measure
    assert _quartic_annulus(0.25) / _quartic_annulus(0.5) == pytest.approx(2.0, rel=1e-6)


def test_tempered_report_examples():
    rep = tempered_report([5.0 ** t for t in range(8)], 1, q=5)
    assert rep.verdict == "convergent"
    rep = tempered_report([25.0 ** t for t in range(8)], 3, q=5)
    assert rep.verdict == "convergent"
    rep = tempered_report([1.0] * 10, 0, toward_zero=True)
    assert rep.verdict == "divergent"


def test_real_measure_is_reproducible():
    a = real_fiber_measure(CIRCLE, 1, Region(radius=2.0), 5000, seed=9)
    b = real_fiber_measure(CIRCLE, 1, Region(radius=2.0), 5000, seed=9)
    assert a.value == b.value


# ------------------------------------------------------------- properties

coef = st.integers(-3, 3)


def measure_or_reject(*args, **kw):
    """Critical inputs exhaust the node budget; they are outside these properties."""
    kw.setdefault("node_budget", 50_000)
    try:
        est = canonical_measure(*args, **kw)
    except BudgetExceeded:
        assume(False)
    assume(est.unresolved == 0)
    return est


def quad_maps(m):
    exps = st.tuples(*[st.integers(0, 2)] * m).filter(lambda e: 1 <= sum(e) <= 2)
    return st.dictionaries(exps, coef, min_size=1, max_size=4).map(
        lambda d: PolyMap([MultiPoly(m, d)]))


@settings(max_examples=25)
@given(quad_maps(2), st.integers(-3, 3), st.sampled_from([3, 5]))
def test_oracle_equivalence(F, c, p):
    assume(F.polys[0].degree >= 1)
    ring = PadicRing(p)
    est = measure_or_reject(F, c, Region(), 10, ring)
    N = oracle_depth(F, c, ring, n_max=5, budget=10 ** 6)
    assume(N is not None)
    N = max(N, 2 * est.max_delta + 1)
    assume(p ** (2 * N) <= 10 ** 6)
    assert point_count_density(F, c, Region(), N, ring, budget=10 ** 6) == est.value


@settings(max_examples=25)
@given(quad_maps(3), st.integers(-3, 3))
def test_chart_independence(F, c):
    assume(F.polys[0].degree >= 1)
    a = measure_or_reject(F, c, Region(), 5, Z5)
    b = measure_or_reject(F.permute([2, 0, 1]), c, Region(), 5, Z5)
    assert (a.value, a.error_bound) == (b.value, b.error_bound)


@settings(max_examples=20)
@given(quad_maps(2), st.integers(1, 3))
def test_additivity(F, c):
    assume(F.polys[0].degree >= 1)
    whole = measure_or_reject(F, c, Region(t=2), 6, Z5)
    parts = [measure_or_reject(F, c, Region(t=0), 6, Z5)] + [
        measure_or_reject(F, c, Region(t=s, inner=s - 1), 6, Z5) for s in (1, 2)]
    assert whole.value == sum(p.value for p in parts)
    assert whole.error_bound == sum(p.error_bound for p in parts)


@settings(max_examples=20)
@given(st.dictionaries(st.tuples(st.integers(0, 2), st.integers(0, 2), st.integers(0, 2))
                       .filter(lambda e: sum(e) == 2), coef, min_size=1, max_size=4),
       st.integers(1, 2), st.integers(1, 2))
def test_scaling_covariance(terms, c, t):
    F = PolyMap([MultiPoly(3, terms)])
    assume(not F.polys[0].is_zero())
    d = 2
    big = measure_or_reject(F, c, Region(t=t), 8, Z5)
    small = measure_or_reject(F, c * 5 ** (t * d), Region(), 8 + t * d, Z5)
    assert big.value == Fraction(5) ** (t * (3 - d)) * small.value


@settings(max_examples=20)
@given(quad_maps(2), st.integers(-3, 3))
def test_fiber_cardinality_cap(F, c):
    assume(F.polys[0].degree >= 1)
    est = measure_or_reject(F, c, Region(), 5, Z5)
    assert est.max_fiber <= F.bezout
