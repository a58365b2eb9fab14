import random
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from fibermeasure.fields import NormValue, PadicScalar
from fibermeasure.forms import (ExtensionModel, build_norm_form, extension_inverse,
                                find_irreducible, form_norm, star_transform)
from fibermeasure.lift import Cell, zero_cells
from fibermeasure.poly import MultiPoly, evaluate, parse_poly
from fibermeasure.residues import PadicRing


def test_norm_form_examples():
    nf = build_norm_form(5, 2)
    assert nf.nu == parse_poly("x0^2 - 2*x1^2")
    assert build_norm_form(3, 2).nu == parse_poly("x0^2 + x1^2")
    assert build_norm_form(7, 1).nu == parse_poly("x0", 1)


def test_form_norm_examples():
    nf = build_norm_form(5, 2)
    assert form_norm(nf, [0, 0]).is_zero()
    assert form_norm(nf, [1, 1]).as_fraction() == 1
    assert form_norm(nf, [5, 5]).as_fraction() == Fraction(1, 5)


def test_extension_inverse_examples():
    model = ExtensionModel.build(5, 2)
    assert extension_inverse(model, [1, 0]) == [1, 0]
    assert extension_inverse(model, [1, 1]) == [-1, 1]
    assert extension_inverse(model, [0, 1]) == [0, Fraction(1, 2)]


def test_star_examples():
    model = ExtensionModel.build(5, 2)
    assert star_transform(MultiPoly.const(1, 2), model).result == MultiPoly.const(1, 2)
    assert star_transform(parse_poly("x0", 2), model).result == parse_poly("x0", 2)


@pytest.mark.parametrize("r", [2, 3])
def test_double_star_on_homogeneous(r):
    model = ExtensionModel.build(5, r)
    nu = build_norm_form(5, r).nu
    rng = random.Random(r)
    f = MultiPoly(r, {(2,) + (0,) * (r - 1): 1, (1, 1) + (0,) * (r - 2): -3,
                      (0,) * (r - 1) + (2,): 2})
    ff = star_transform(star_transform(f, model).result, model).result
    d = 2
    for _ in range(100):
        x = [Fraction(rng.randint(-40, 40), rng.randint(1, 9)) for _ in range(r)]
        assert evaluate(ff, x) == evaluate(f, x) * evaluate(nu, x) ** ((r - 2) * d)


def test_defining_polynomials_irreducible():
    for p, r in [(2, 2), (2, 3), (3, 2), (3, 3), (5, 2), (7, 2), (5, 3)]:
        poly = find_irreducible(p, r)
        # no roots mod p; for r <= 3 that is irreducibility
        assert all(sum(c * a ** i for i, c in enumerate(poly)) % p for a in range(p))


# ------------------------------------------------------------- properties

def vec(p, r):
    unit = st.fractions(min_value=-500, max_value=500, max_denominator=60)
    scale = st.integers(-3, 3)
    return st.lists(st.tuples(unit, scale).map(lambda t: t[0] * Fraction(p) ** t[1]),
                    min_size=r, max_size=r)


CASES = st.sampled_from([(5, 2), (3, 2), (2, 3)])


@given(CASES, st.data())
def test_model_ring_axioms(case, data):
    p, r = case
    model = ExtensionModel.build(p, r)
    x, y, z = (data.draw(vec(p, r)) for _ in range(3))
    assert model.mul(x, y) == model.mul(y, x)
    assert model.mul(model.mul(x, y), z) == model.mul(x, model.mul(y, z))
    assert model.mul(model.one(), x) == x


@given(CASES, st.data())
def test_norm_axioms(case, data):
    p, r = case
    nf = build_norm_form(p, r)
    x, y = data.draw(vec(p, r)), data.draw(vec(p, r))
    c = data.draw(st.fractions(min_value=-100, max_value=100, max_denominator=30))
    nx, ny = form_norm(nf, x), form_norm(nf, y)
    assert form_norm(nf, [a + b for a, b in zip(x, y)]) <= max(nx, ny)
    assert form_norm(nf, nf.model.mul(x, y)) == nx * ny
    cn = PadicScalar.from_rational(c, p).norm() if c else NormValue.zero_of(p)
    assert form_norm(nf, [c * a for a in x]) == cn * nx


@given(st.data())
def test_inversion_distance_identity(data):
    nf = build_norm_form(5, 2)
    x, y = data.draw(vec(5, 2)), data.draw(vec(5, 2))
    if not any(x) or not any(y) or x == y:
        return
    xi, yi = extension_inverse(nf.model, x), extension_inverse(nf.model, y)
    lhs = form_norm(nf, [a - b for a, b in zip(x, y)])
    rhs = form_norm(nf, [a - b for a, b in zip(xi, yi)]) * form_norm(nf, x) * form_norm(nf, y)
    assert lhs == rhs


@pytest.mark.parametrize("p", [3, 5])
def test_definite_at_resolution(p):
    nf = build_norm_form(p, 2)
    assert zero_cells(nf.nu, PadicRing(p), 6).leaves() == [Cell((0, 0), 6)]
