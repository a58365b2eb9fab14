"""Sparse multivariate polynomials with exact rational coefficients.

Coefficients live in Q at the symbolic layer; a backend scalar type is
chosen only when evaluating, so one polynomial drives every field.
"""

from __future__ import annotations

import itertools
import math
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import CombinatorialBlowup, ParseError, UnknownVariable
from .fields import LaurentScalar, PadicScalar, RealScalar

DEFAULT_TERM_CAP = 200_000
DEFAULT_MINOR_CAP = 10_000

Exponent = tuple


class MultiPoly:
    """Polynomial in variables x0..x{m-1}; terms maps exponent tuples to Fractions."""

    __slots__ = ("m", "terms", "_degree")

    def __init__(self, m: int, terms: Mapping[Exponent, object] | None = None):
        self.m = m
        clean = {}
        for e, c in (terms or {}).items():
            c = Fraction(c)
            if c != 0:
                if len(e) != m:
                    raise ValueError(f"exponent {e} does not have length {m}")
                clean[tuple(int(k) for k in e)] = c
        self.terms = clean
        self._degree = max((sum(e) for e in clean), default=-math.inf)

    # constructors
    @classmethod
    def const(cls, c, m: int) -> "MultiPoly":
        return cls(m, {(0,) * m: c})

    @classmethod
    def var(cls, i: int, m: int) -> "MultiPoly":
        e = [0] * m
        e[i] = 1
        return cls(m, {tuple(e): 1})

    @property
    def degree(self):
        """Total degree; -inf for the zero polynomial."""
        return self._degree

    def is_zero(self) -> bool:
        return not self.terms

    def sorted_terms(self):
        return sorted(self.terms.items())

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = MultiPoly.const(other, self.m)
        if not isinstance(other, MultiPoly):
            return NotImplemented
        return self.m == other.m and self.terms == other.terms

    def __hash__(self):
        return hash((self.m, frozenset(self.terms.items())))

    def _coerce(self, other) -> "MultiPoly":
        if isinstance(other, MultiPoly):
            if other.m != self.m:
                raise ValueError("variable counts differ")
            return other
        return MultiPoly.const(other, self.m)

    def __add__(self, other):
        other = self._coerce(other)
        t = dict(self.terms)
        for e, c in other.terms.items():
            t[e] = t.get(e, 0) + c
        return MultiPoly(self.m, t)

    __radd__ = __add__

    def __neg__(self):
        return MultiPoly(self.m, {e: -c for e, c in self.terms.items()})

    def __sub__(self, other):
        return self + (-self._coerce(other))

    def __rsub__(self, other):
        return self._coerce(other) - self

    def __mul__(self, other):
        other = self._coerce(other)
        t: dict = {}
        for e1, c1 in self.terms.items():
            for e2, c2 in other.terms.items():
                e = tuple(a + b for a, b in zip(e1, e2))
                t[e] = t.get(e, 0) + c1 * c2
        return MultiPoly(self.m, t)

    __rmul__ = __mul__

    def __pow__(self, k: int):
        if k < 0:
            raise ValueError("negative power of a polynomial")
        out = MultiPoly.const(1, self.m)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def scale(self, c) -> "MultiPoly":
        return MultiPoly(self.m, {e: c * v for e, v in self.terms.items()})

    def homogeneous_part(self, d: int) -> "MultiPoly":
        return MultiPoly(self.m, {e: c for e, c in self.terms.items() if sum(e) == d})

    def is_homogeneous(self) -> bool:
        return len({sum(e) for e in self.terms}) <= 1

    def constant_term(self) -> Fraction:
        return self.terms.get((0,) * self.m, Fraction(0))

    def extend(self, m_new: int, positions: Sequence[int] | None = None) -> "MultiPoly":
        """Reinterpret in m_new variables; variable i becomes positions[i]."""
        positions = list(range(self.m)) if positions is None else list(positions)
        t = {}
        for e, c in self.terms.items():
            ne = [0] * m_new
            for i, k in enumerate(e):
                ne[positions[i]] += k
            t[tuple(ne)] = c
        return MultiPoly(m_new, t)

    def permute(self, perm: Sequence[int]) -> "MultiPoly":
        """Variable i is renamed to perm[i]."""
        return self.extend(self.m, perm)

    # calculus
    def partial(self, i: int, char: int = 0) -> "MultiPoly":
        return partial(self, i, char)

    # evaluation
    def eval(self, x: Sequence):
        return evaluate(self, x)

    def __call__(self, *x):
        return evaluate(self, x)

    def __repr__(self):
        return f"MultiPoly({self.m}, {format_poly(self)!r})"

    def __str__(self):
        return format_poly(self)


def format_poly(f: MultiPoly) -> str:
    if f.is_zero():
        return "0"
    parts = []
    for e, c in sorted(f.terms.items(), key=lambda kv: (-sum(kv[0]), tuple(-k for k in kv[0]))):
        mono = "*".join(f"x{i}" + (f"^{k}" if k > 1 else "") for i, k in enumerate(e) if k)
        sign = "-" if c < 0 else "+"
        a = abs(c)
        if mono and a == 1:
            body = mono
        elif mono:
            body = f"{a}*{mono}"
        else:
            body = str(a)
        parts.append((sign, body))
    out = ("-" if parts[0][0] == "-" else "") + parts[0][1]
    for s, b in parts[1:]:
        out += f" {s} {b}"
    return out


# ------------------------------------------------------------------ parsing


class _Parser:
    def __init__(self, text: str, m: int | None):
        self.s = text
        self.i = 0
        self.m = m
        self.max_var = -1

    def error(self, msg):
        raise ParseError(msg, self.i)

    def skip(self):
        while self.i < len(self.s) and self.s[self.i].isspace():
            self.i += 1

    def peek(self):
        self.skip()
        return self.s[self.i] if self.i < len(self.s) else ""

    def integer(self) -> int:
        self.skip()
        j = self.i
        while self.i < len(self.s) and self.s[self.i].isdigit():
            self.i += 1
        if j == self.i:
            self.error("expected an integer")
        return int(self.s[j:self.i])

    # the grammar builds term lists of (coef, {var: power}) then expands
    def expr(self):
        sign = 1
        if self.peek() in ("+", "-"):
            sign = -1 if self.s[self.i] == "-" else 1
            self.i += 1
        acc = self.term()
        if sign < 0:
            acc = _neg(acc)
        while self.peek() in ("+", "-"):
            op = self.s[self.i]
            self.i += 1
            t = self.term()
            acc = _add(acc, t if op == "+" else _neg(t))
        return acc

    def term(self):
        acc = self.factor()
        while self.peek() == "*":
            self.i += 1
            acc = _mul(acc, self.factor())
        return acc

    def factor(self):
        ch = self.peek()
        if ch == "(":
            self.i += 1
            inner = self.expr()
            if self.peek() != ")":
                self.error("expected ')'")
            self.i += 1
            if self.peek() == "^":
                self.i += 1
                k = self.integer()
                if k < 1:
                    self.error("exponent must be positive")
                out = {(): Fraction(1)}
                for _ in range(k):
                    out = _mul(out, inner)
                return out
            return inner
        if ch == "x":
            start = self.i
            self.i += 1
            if not (self.i < len(self.s) and self.s[self.i].isdigit()):
                self.error("expected a variable index after 'x'")
            idx = self.integer()
            if self.m is not None and idx >= self.m:
                raise UnknownVariable(f"variable x{idx} outside x0..x{self.m - 1}", start)
            self.max_var = max(self.max_var, idx)
            k = 1
            if self.peek() == "^":
                self.i += 1
                k = self.integer()
                if k < 1:
                    self.error("exponent must be positive")
            return {((idx, k),): Fraction(1)}
        if ch.isdigit():
            num = self.integer()
            if self.peek() == "/":
                self.i += 1
                den = self.integer()
                if den == 0:
                    self.error("zero denominator")
                return {(): Fraction(num, den)}
            return {(): Fraction(num)}
        if ch == "":
            self.error("unexpected end of input")
        self.error(f"unexpected character {ch!r}")


def _norm_mono(items) -> tuple:
    d: dict = {}
    for v, k in items:
        d[v] = d.get(v, 0) + k
    return tuple(sorted(d.items()))


def _add(a, b):
    out = dict(a)
    for k, c in b.items():
        out[k] = out.get(k, 0) + c
    return {k: c for k, c in out.items() if c != 0}


def _neg(a):
    return {k: -c for k, c in a.items()}


def _mul(a, b):
    out: dict = {}
    for k1, c1 in a.items():
        for k2, c2 in b.items():
            k = _norm_mono(k1 + k2)
            out[k] = out.get(k, 0) + c1 * c2
    return {k: c for k, c in out.items() if c != 0}


def parse_poly(text: str, m: int | None = None) -> MultiPoly:
    """Parse the x0..x{m-1} grammar; m defaults to one more than the largest index."""
    p = _Parser(text, m)
    if p.peek() == "":
        p.error("empty polynomial")
    raw = p.expr()
    if p.peek() != "":
        p.error(f"trailing input {p.s[p.i:]!r}")
    if m is None:
        m = p.max_var + 1 if p.max_var >= 0 else 1
    terms = {}
    for mono, c in raw.items():
        e = [0] * m
        for v, k in mono:
            e[v] += k
        terms[tuple(e)] = terms.get(tuple(e), 0) + c
    return MultiPoly(m, terms)


# --------------------------------------------------------------- evaluation


def _lift_coef(c: Fraction, sample):
    if isinstance(sample, PadicScalar):
        N = sample.N if sample.N != math.inf else 24
        return PadicScalar.from_rational(c, sample.p, int(N))
    if isinstance(sample, LaurentScalar):
        N = sample.N if sample.N != math.inf else 24
        return LaurentScalar.from_rational(c, sample.p, int(N), sample.q)
    if isinstance(sample, RealScalar):
        return RealScalar(float(c))
    if isinstance(sample, float):
        return float(c)
    return c


def evaluate(f: MultiPoly, x: Sequence):
    """Evaluate at a point; terms are summed in sorted exponent order."""
    if len(x) != f.m:
        raise ValueError(f"expected {f.m} coordinates, got {len(x)}")
    sample = x[0] if f.m else None
    if isinstance(sample, (int, Fraction)) or sample is None:
        x = [Fraction(v) for v in x]
        sample = Fraction(0)
    if f.is_zero():
        return _lift_coef(Fraction(0), sample) if sample is not None else Fraction(0)
    acc = None
    for e, c in f.sorted_terms():
        t = _lift_coef(c, sample)
        for xi, k in zip(x, e):
            if k:
                t = t * (xi ** k)
        acc = t if acc is None else acc + t
    return acc


def to_arrays(polys: Sequence[MultiPoly]):
    """Flatten a list of polynomials to (coef Fractions, exps, out_idx)."""
    coefs, exps, idx = [], [], []
    m = polys[0].m if polys else 0
    for k, f in enumerate(polys):
        for e, c in f.sorted_terms():
            coefs.append(c)
            exps.append(e)
            idx.append(k)
    exps_arr = np.array(exps, dtype=np.int64).reshape(len(exps), m)
    return coefs, exps_arr, np.array(idx, dtype=np.int64)


# ------------------------------------------------------------------ calculus


def partial(f: MultiPoly, i: int, char: int = 0) -> MultiPoly:
    """Formal derivative in x_i; in characteristic char, multiples of char vanish."""
    if not 0 <= i < f.m:
        raise IndexError(f"variable index {i} out of range")
    t = {}
    for e, c in f.terms.items():
        k = e[i]
        if k == 0:
            continue
        nc = c * k
        if char and nc.numerator % char == 0:
            continue
        ne = list(e)
        ne[i] -= 1
        t[tuple(ne)] = nc
    return MultiPoly(f.m, t)


def compose(f: MultiPoly, subs: Sequence[MultiPoly], term_cap: int = DEFAULT_TERM_CAP) -> MultiPoly:
    """Substitute x_i -> subs[i] and expand."""
    if len(subs) != f.m:
        raise ValueError("need one substitution per variable")
    if not subs:
        return f
    m2 = subs[0].m
    if any(s.m != m2 for s in subs):
        raise ValueError("substitutions must share a variable count")
    cache: dict = {}

    def power(i, k):
        key = (i, k)
        if key not in cache:
            cache[key] = subs[i] ** k if k else MultiPoly.const(1, m2)
            if len(cache[key].terms) > term_cap:
                raise CombinatorialBlowup("substitution power exceeds the term cap")
        return cache[key]

    acc: dict = {}
    for e, c in f.sorted_terms():
        t = MultiPoly.const(c, m2)
        for i, k in enumerate(e):
            if k:
                t = t * power(i, k)
        for ee, cc in t.terms.items():
            acc[ee] = acc.get(ee, 0) + cc
        if len(acc) > term_cap:
            raise CombinatorialBlowup("composition exceeds the term cap")
    return MultiPoly(m2, acc)


def euler_residual(f: MultiPoly) -> MultiPoly:
    """sum_i x_i df/dx_i - deg(f) f; zero exactly for homogeneous f."""
    if f.is_zero():
        return f
    d = f.degree
    t = {e: c * (sum(e) - d) for e, c in f.terms.items()}
    return MultiPoly(f.m, t)


def determinant(M: Sequence[Sequence[MultiPoly]]) -> MultiPoly:
    """Cofactor expansion along the first row (small r only)."""
    n = len(M)
    if n == 1:
        return M[0][0]
    if n == 2:
        return M[0][0] * M[1][1] - M[0][1] * M[1][0]
    acc = None
    for j in range(n):
        if M[0][j].is_zero():
            continue
        minor = [row[:j] + row[j + 1:] for row in M[1:]]
        term = M[0][j] * determinant(minor)
        if j % 2:
            term = -term
        acc = term if acc is None else acc + term
    return acc if acc is not None else MultiPoly(M[0][0].m)


# ------------------------------------------------------------------- maps


class PolyMap:
    """r polynomials in m variables, viewed as a map k^m -> k^r."""

    __slots__ = ("polys",)

    def __init__(self, polys: Iterable[MultiPoly]):
        polys = tuple(polys)
        if not polys:
            raise ValueError("a polynomial map needs at least one component")
        m = polys[0].m
        if any(f.m != m for f in polys):
            raise ValueError("components must share the variable count")
        if len(polys) > m:
            raise ValueError("need r <= m")
        self.polys = polys

    def __eq__(self, other):
        return isinstance(other, PolyMap) and self.polys == other.polys

    def __hash__(self):
        return hash(self.polys)

    def __repr__(self):
        return f"PolyMap({[str(f) for f in self.polys]})"

    @classmethod
    def parse(cls, texts: Sequence[str], m: int | None = None) -> "PolyMap":
        if m is None:
            m = max(parse_poly(t).m for t in texts)
        return cls(parse_poly(t, m) for t in texts)

    @property
    def m(self) -> int:
        return self.polys[0].m

    @property
    def r(self) -> int:
        return len(self.polys)

    @property
    def degrees(self) -> tuple:
        return tuple(max(int(f.degree), 0) if not f.is_zero() else 0 for f in self.polys)

    @property
    def bezout(self) -> int:
        return math.prod(self.degrees)

    def __len__(self):
        return self.r

    def __iter__(self):
        return iter(self.polys)

    def __getitem__(self, i):
        return self.polys[i]

    def permute(self, perm: Sequence[int]) -> "PolyMap":
        return PolyMap(f.permute(perm) for f in self.polys)

    def eval(self, x):
        return [f.eval(x) for f in self.polys]


def chart_indices(m: int, r: int) -> list[tuple]:
    """All ordered r-subsets of range(m), lexicographic."""
    return list(itertools.combinations(range(m), r))


def jacobian_minor(F: PolyMap, J: Sequence[int], char: int = 0) -> MultiPoly:
    J = tuple(J)
    if len(J) != F.r or list(J) != sorted(set(J)):
        raise ValueError(f"chart {J} must be {F.r} strictly increasing indices")
    rows = [[partial(f, j, char) for j in J] for f in F.polys]
    return determinant(rows)


def generalized_gradient(F: PolyMap, char: int = 0, cap: int = DEFAULT_MINOR_CAP):
    """All r x r Jacobian minors as (J, minor), J in lexicographic order."""
    if math.comb(F.m, F.r) > cap:
        raise CombinatorialBlowup(f"C({F.m},{F.r}) minors exceed the cap {cap}")
    parts = [[partial(f, j, char) for j in range(F.m)] for f in F.polys]
    out = []
    for J in chart_indices(F.m, F.r):
        out.append((J, determinant([[row[j] for j in J] for row in parts])))
    return out
