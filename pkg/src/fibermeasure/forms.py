"""Definite forms from unramified extensions, and the inversion transform f*.

The norm form of a degree-r unramified extension of Q_p is a homogeneous
degree-r polynomial in r variables that vanishes only at 0, and
|nu(x)|^(1/r) is an ultrametric norm on k^r.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from .errors import CombinatorialBlowup, IrreducibleNotFound, ZeroInverse
from .fields import NormValue, PadicScalar, _poly_mod_p_irreducible
from .poly import MultiPoly, compose, determinant, evaluate

DEFAULT_SEARCH_CAP = 10 ** 6


def _signed_order():
    k = 1
    while True:
        yield k
        yield -k
        k += 1


def find_irreducible(p: int, r: int, cap: int = DEFAULT_SEARCH_CAP) -> list[int]:
    """A monic polynomial over Z, irreducible mod p, low coefficient first.

    Binomials x^r - a are tried first (a = 1, -1, 2, -2, ...) so the small
    cases come out as x^2 - 2 over Q_5 and x^2 + 1 over Q_3.
    """
    if r == 1:
        return [0, 1]
    if p ** r > cap:
        raise IrreducibleNotFound(f"p^r = {p ** r} exceeds the search cap {cap}")
    for a in _signed_order():
        if abs(a) > p:
            break
        cand = [-a] + [0] * (r - 1) + [1]
        if _poly_mod_p_irreducible([c % p for c in cand], p):
            return cand
    for code in range(p ** r):
        cand = [(code // p ** i) % p for i in range(r)] + [1]
        if _poly_mod_p_irreducible(cand, p):
            return [c if c <= p // 2 else c - p for c in cand[:-1]] + [1]
    raise IrreducibleNotFound(f"no irreducible polynomial of degree {r} mod {p}")


@dataclass(frozen=True)
class ExtensionModel:
    """k[theta]/(h(theta)) in the power basis 1, theta, ..., theta^(r-1)."""

    p: int
    r: int
    defining: tuple
    # table[i][j] = coordinates of theta^i * theta^j
    table: tuple

    @classmethod
    def build(cls, p: int, r: int, defining: Sequence[int] | None = None,
              cap: int = DEFAULT_SEARCH_CAP) -> "ExtensionModel":
        h = list(defining) if defining is not None else find_irreducible(p, r, cap)
        if len(h) != r + 1 or h[-1] != 1:
            raise ValueError("defining polynomial must be monic of degree r")
        if not _poly_mod_p_irreducible([c % p for c in h], p):
            raise IrreducibleNotFound(f"{h} is reducible mod {p}")
        powers = []  # coordinates of theta^k for k < 2r-1
        for k in range(2 * r - 1):
            if k < r:
                v = [Fraction(0)] * r
                v[k] = Fraction(1)
            else:
                prev = powers[-1]
                # theta * prev, reducing theta^r = -sum h_i theta^i
                v = [Fraction(0)] + prev[:-1]
                top = prev[-1]
                v = [v[i] - top * h[i] for i in range(r)]
            powers.append(v)
        table = tuple(tuple(tuple(powers[i + j]) for j in range(r)) for i in range(r))
        return cls(p, r, tuple(h), table)

    def mul(self, x: Sequence, y: Sequence) -> list:
        out = [0] * self.r
        for i in range(self.r):
            if _is_zero(x[i]):
                continue
            for j in range(self.r):
                if _is_zero(y[j]):
                    continue
                xy = x[i] * y[j]
                for k, c in enumerate(self.table[i][j]):
                    if c:
                        out[k] = out[k] + xy * c
        return out

    def one(self) -> list:
        return [Fraction(1)] + [Fraction(0)] * (self.r - 1)

    def multiplication_matrix(self) -> list[list[MultiPoly]]:
        """lambda(x): the matrix of y -> x*y, entries linear in x."""
        r = self.r
        M = [[MultiPoly(r) for _ in range(r)] for _ in range(r)]
        for j in range(r):
            for i in range(r):
                xi = MultiPoly.var(i, r)
                for k, c in enumerate(self.table[i][j]):
                    if c:
                        M[k][j] = M[k][j] + xi.scale(c)
        return M

    def adjugate_map(self) -> list[MultiPoly]:
        """A(x) with x * A(x) = nu(x) * 1; entries of degree r - 1."""
        lam = self.multiplication_matrix()
        r = self.r
        if r == 1:
            return [MultiPoly.const(1, 1)]
        col = []
        for i in range(r):
            # adj[i][0] = (-1)^(i) * det(lam without row 0, column i)
            minor = [row[:i] + row[i + 1:] for k, row in enumerate(lam) if k != 0]
            d = determinant(minor)
            col.append(d if i % 2 == 0 else -d)
        return col

    def describe(self) -> dict:
        return {
            "p": self.p,
            "degree": self.r,
            "defining_polynomial": list(self.defining),
            "structure_constants": [[[str(c) for c in v] for v in row] for row in self.table],
        }


def _is_zero(v) -> bool:
    if hasattr(v, "is_zero"):
        return v.is_zero()
    return v == 0


@dataclass(frozen=True)
class NormForm:
    model: ExtensionModel
    nu: MultiPoly

    @property
    def r(self) -> int:
        return self.model.r

    @property
    def p(self) -> int:
        return self.model.p


def build_norm_form(p: int, r: int, cap: int = DEFAULT_SEARCH_CAP,
                    defining: Sequence[int] | None = None) -> NormForm:
    model = ExtensionModel.build(p, r, defining, cap)
    nu = determinant(model.multiplication_matrix())
    return NormForm(model, nu)


def _value_valuation(val, p: int) -> float:
    if isinstance(val, PadicScalar):
        return val.valuation()
    from .fields import valuation_rational

    return valuation_rational(val, p)


def form_norm(form: NormForm, x: Sequence) -> NormValue:
    """|nu(x)|^(1/r), with the exact rational exponent v(nu(x))/r."""
    if len(x) != form.r:
        raise ValueError(f"expected {form.r} coordinates")
    val = evaluate(form.nu, list(x))
    v = _value_valuation(val, form.p)
    if v == math.inf:
        return NormValue.zero_of(form.p)
    return NormValue.ultra(form.p, Fraction(int(v), form.r))


def extension_inverse(model: ExtensionModel, x: Sequence) -> list:
    """x^-1 = A(x) / nu(x)."""
    if all(_is_zero(v) for v in x):
        raise ZeroInverse("zero has no inverse")
    A = model.adjugate_map()
    nu = determinant(model.multiplication_matrix())
    nv = evaluate(nu, list(x))
    if _is_zero(nv):
        raise ZeroInverse("norm vanishes at this precision")
    return [evaluate(a, list(x)) / nv for a in A]


@dataclass(frozen=True)
class StarPoly:
    source: MultiPoly
    degree: int
    result: MultiPoly


def star_transform(f: MultiPoly, model: ExtensionModel, term_cap: int = 200_000) -> StarPoly:
    """f*(x) = f(x^-1) nu(x)^d as a polynomial: sum_e f_e(A(x)) nu^(d-e)."""
    if f.m != model.r:
        raise ValueError("f must have as many variables as the extension degree")
    if f.is_zero():
        return StarPoly(f, 0, f)
    d = int(f.degree)
    A = model.adjugate_map()
    nu = determinant(model.multiplication_matrix())
    acc = MultiPoly(model.r)
    for e in range(d + 1):
        fe = f.homogeneous_part(e)
        if fe.is_zero():
            continue
        term = compose(fe, A, term_cap) * nu ** (d - e)
        if len(term.terms) > term_cap:
            raise CombinatorialBlowup("star transform exceeds the term cap")
        acc = acc + term
    return StarPoly(f, d, acc)
