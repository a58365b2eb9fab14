"""The fourteen acceptance criteria, each at its stated tolerance.

The battery runs once per session; each test asserts one criterion, and
the terminal summary prints one PASS/FAIL line per criterion.
"""

import pytest

from fibermeasure.suite import CRITERIA, SuiteContext, run_criterion

RESULTS: dict = {}


@pytest.fixture(scope="session")
def battery():
    ctx = SuiteContext()
    for i, fn in enumerate(CRITERIA, start=1):
        res = run_criterion(fn, ctx)
        RESULTS[i] = res
        print(res.line())
    return RESULTS


def _check(battery, n):
    res = battery[n]
    assert res.passed, res.line()


def test_criterion_01_exact_measure_oracle(battery):
    _check(battery, 1)


def test_criterion_02_oracle_sweep(battery):
    _check(battery, 2)


def test_criterion_03_growth_exponent(battery):
    _check(battery, 3)


def test_criterion_04_remark_witness(battery):
    _check(battery, 4)


def test_criterion_05_quartic_divergence(battery):
    _check(battery, 5)


def test_criterion_06_fermat_finiteness(battery):
    _check(battery, 6)


def test_criterion_07_norm_forms(battery):
    _check(battery, 7)


def test_criterion_08_star_transform(battery):
    _check(battery, 8)


def test_criterion_09_h1_sanity(battery):
    _check(battery, 9)


def test_criterion_10_fiber_cardinality(battery):
    _check(battery, 10)


def test_criterion_11_euler_identity(battery):
    _check(battery, 11)


def test_criterion_12_critical_image_densities(battery):
    _check(battery, 12)


def test_criterion_13_chart_independence(battery):
    _check(battery, 13)


def test_criterion_14_hensel_lifting(battery):
    _check(battery, 14)
