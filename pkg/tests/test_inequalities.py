import itertools
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st

from fibermeasure.inequalities import (INCONCLUSIVE, STABLE, critical_cells, deligne_example,
                                       euler_bound_check, fit_envelope, frobenius_image_count,
                                       gradient_lower_bound, h1_probe, h2_probe, icp_classify,
                                       lemma_distance_check, stability_probe, witness_remark)
from fibermeasure.poly import MultiPoly, PolyMap, evaluate, parse_poly, partial
from fibermeasure.residues import PadicRing

Z5 = PadicRing(5)
REMARK = PolyMap.parse(["x0^2*x2^2 + x1^3*x2"])


# ---------------------------------------------------------------- H1 / H2

@pytest.mark.parametrize("text,alpha", [("x0^2", 2), ("x0", 1), ("x0*(x0 - 1)", 1)])
def test_h1_examples(text, alpha):
    fit = h1_probe(parse_poly(text, 1), Z5, depth=4, samples=300)
    assert fit.alpha == alpha and fit.log_C == 0 and fit.C == 1
    assert fit.label == "exact" and fit.margin == 0
    assert fit.violation_rate(fit.rows) == 0


def test_h1_unit_factor_invariance():
    f = parse_poly("x0^2 - x1", 2)
    u = parse_poly("1 + 5*x0 + 5*x1^2", 2)   # |u| = 1 on Z_5^2
    a = h1_probe(f, Z5, depth=3, samples=200, seed=4)
    b = h1_probe(f * u, Z5, depth=3, samples=200, seed=4)
    assert a.rows == b.rows


def test_h2_examples():
    fit = h2_probe(parse_poly("x0^2 + 1", 1), PadicRing(3), t_max=3, samples=200)
    assert fit.branch != "zero-locus"
    assert fit.beta == 0 and fit.C == 1
    fit = h2_probe(parse_poly("x0", 1), Z5, t_max=3, samples=200)
    assert fit.alpha == 1 and fit.beta == 0
    assert lemma_distance_check(fit, 0.0)


def test_fresh_sample_validation_is_recorded():
    fit = h1_probe(parse_poly("x0^2 - 5*x1^3", 2), Z5, depth=3, samples=200)
    assert fit.violation_rate(fit.rows) == 0
    assert any("fresh-sample" in f for f in fit.flags)


def test_envelope_lp_recovers_a_planted_bound():
    rng = np.random.default_rng(0)
    u = rng.uniform(-6, 0, 300)
    rows = [(2 + 3 * ui + rng.uniform(0, 1), ui, 0.0) for ui in u]
    rows.append((2 + 3 * u[0], u[0], 0.0))
    alpha, beta, logC, *_ = fit_envelope(rows, True, False, exact=False)
    assert alpha == pytest.approx(3, abs=0.05)
    assert all(w - logC - alpha * ui >= -1e-7 for w, ui, _ in rows)


# -------------------------------------------------------- gradient bounds

def test_gradient_bound_examples():
    fit = gradient_lower_bound(PolyMap.parse(["x0^2 + x1^2 + x2^2"]), [1], Z5,
                               ts=(0, 1, 2), samples=300, depth=5)
    assert fit.beta == 0
    fit = gradient_lower_bound(PolyMap.parse(["x0"], 2), [0], Z5, ts=(0, 1, 2), samples=200)
    assert fit.beta == 0 and fit.C == 1


def test_remark_witness_gamma():
    ns = [10.0 ** k for k in range(3, 7)]
    W = witness_remark(ns)
    fit = gradient_lower_bound(REMARK, [-1], "real", ts=(), samples=0, window=None,
                               witness=W)
    assert fit.beta == pytest.approx(1 / 3, abs=1e-6)
    mixed = gradient_lower_bound(REMARK, [-1], "real", ts=(0, 1, 2, 3), samples=1500,
                                 window=None, witness=W)
    assert mixed.beta >= 1 / 3 - 0.05
    assert mixed.label == "sampled"


def test_euler_bound_examples():
    rep = euler_bound_check(parse_poly("x0^4 + x1^4 - x2^4"), 1, "real", ts=(0, 1, 2),
                            samples=3000)
    assert rep.holds and rep.points > 0
    rep = euler_bound_check(parse_poly("x0^2 + x1^2"), 1, Z5, ts=(0, 1, 2), depth=5)
    assert rep.holds and rep.min_ratio >= 0 and rep.constant == 1
    lin = parse_poly("3*x0 - x1", 2)
    got = [evaluate(partial(lin, i), [0, 0]) for i in range(2)]
    assert got == [3, -1]   # gradient of a linear form is constant


def test_euler_rejects_bad_input():
    with pytest.raises(ValueError):
        euler_bound_check(parse_poly("x0^2 + x0", 1), 1, Z5)
    with pytest.raises(ValueError):
        euler_bound_check(parse_poly("x0^2", 1), 0, Z5)


# -------------------------------------------------------- critical cells

def brute_critical(F, p, N):
    """Cells x mod p^N where every r x r minor vanishes mod p^N."""
    from fibermeasure.poly import generalized_gradient

    M = p ** N
    minors = [g for _, g in generalized_gradient(F)]
    out = set()
    for x in itertools.product(range(M), repeat=F.m):
        vals = [Fraction(evaluate(g, list(x))) for g in minors]
        if all(v.denominator == 1 and v.numerator % M == 0 for v in vals):
            out.add(x)
    return out


def test_critical_circle():
    rep = critical_cells(PolyMap.parse(["x0^2 + x1^2"]), Z5, 3)
    assert list(rep.iter_cells()) == [(0, 0)]
    assert rep.cv_cells == {(0,)}


def test_critical_cusp_matches_brute_force():
    F = PolyMap.parse(["x0^3 - x1^2"])
    rep = critical_cells(F, Z5, 2)
    assert set(rep.iter_cells()) == brute_critical(F, 5, 2)
    assert rep.cv_cells == {(0,)}


def test_critical_remark_contains_symbolic_set():
    p, N = 3, 2
    rep = critical_cells(REMARK, PadicRing(p), N)
    cells = set(rep.iter_cells())
    assert cells == brute_critical(REMARK, p, N)
    M = p ** N
    lines = {(x, 0, 0) for x in range(M)} | {(0, 0, z) for z in range(M)}
    assert lines <= cells


@settings(max_examples=15)
@given(st.dictionaries(st.tuples(st.integers(0, 3), st.integers(0, 3)), st.integers(-3, 3),
                       min_size=1, max_size=4), st.sampled_from([3, 5]))
def test_norm_and_minor_routes_agree(terms, p):
    F = PolyMap([MultiPoly(2, terms)])
    assume(F.polys[0].degree >= 1)
    a = critical_cells(F, PadicRing(p), 2, route="norm", values=False)
    b = critical_cells(F, PadicRing(p), 2, route="minors", values=False)
    assert a.levels == b.levels
    assert set(a.iter_cells()) == set(b.iter_cells())


# -------------------------------------------------------------- stability

def test_stability_examples():
    F = PolyMap.parse(["x0^2 + x1^2"])
    assert stability_probe(F, [1], 0, 3, Z5).verdict == STABLE
    assert stability_probe(F, [0], 0, 3, Z5).verdict == INCONCLUSIVE


@settings(max_examples=20)
@given(st.integers(-30, 30), st.integers(0, 3))
def test_stability_persists_with_depth(c, s):
    # a stable verdict at depth N survives refinement to N + 1
    F = PolyMap.parse(["x0^3 - x1^2 + 5*x0"])
    v = [stability_probe(F, [c], s, N, Z5).verdict for N in (1, 2, 3)]
    for a, b in zip(v, v[1:]):
        assert a != STABLE or b == STABLE


# ---------------------------------------------------------------- Deligne

def test_deligne_counts():
    assert frobenius_image_count(2, 4) == 4        # density 1/4
    assert frobenius_image_count(3, 3) == 3        # density 1/9
    for p in (2, 3):
        for N in range(2, 6):
            assert frobenius_image_count(p, N) == p ** (-(-N // p))
    dens = [Fraction(frobenius_image_count(2, N), 2 ** N) for N in (3, 5)]
    assert dens[1] < dens[0]


def test_deligne_table_p2():
    tb = deligne_example(2, (4, 6))
    assert [r.density for r in tb.rows] == [Fraction(1, 4), Fraction(1, 8)]
    assert tb.matches and tb.strictly_decreasing and tb.no_stable_window


# -------------------------------------------------------------------- ICP

def test_icp_labels():
    assert icp_classify((1, 0, 0, 0, 0), run_bound=False).label == "case-I"
    assert icp_classify((0, 1, 0, 0, 0), run_bound=False).label == "case-II"
    assert icp_classify((0, 0, 1, 1, 1), run_bound=False).label == "not-ICP"


def test_icp_case_one_bound():
    rep = icp_classify((1, 0, 0, 0, 0), samples=800, ts=(0, 1, 2, 3))
    assert rep.fit is not None and rep.fit.beta is not None and rep.fit.beta <= 0.1
