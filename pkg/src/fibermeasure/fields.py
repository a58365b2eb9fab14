"""Scalar arithmetic for the three backends: Q_p, R and F_q((t)).

Every ultrametric scalar carries a relative precision N (digits known after
the leading one).  An inexact zero keeps its absolute precision in N so that
cancellation never fabricates digits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import total_ordering
from typing import Sequence

from .errors import DivisionByZero, PrecisionExhausted, SingularAtPrecision

INF = math.inf
DEFAULT_PRECISION = 24


def valuation_int(n: int, p: int) -> float:
    """p-adic valuation of an integer (inf for 0)."""
    if n == 0:
        return INF
    v = 0
    while n % p == 0:
        n //= p
        v += 1
    return v


def valuation_rational(x, p: int) -> float:
    x = Fraction(x)
    if x == 0:
        return INF
    return valuation_int(x.numerator, p) - valuation_int(x.denominator, p)


# ---------------------------------------------------------------- NormValue


@total_ordering
@dataclass(frozen=True)
class NormValue:
    """A norm, either q^(-exponent) (ultrametric) or a real magnitude.

    Ultrametric comparisons use the exact exponent, never a float.
    """

    kind: str  # "ultra" or "real"
    q: int = 0
    exponent: Fraction | int = 0
    zero: bool = False
    magnitude: float = 0.0

    @classmethod
    def ultra(cls, q: int, exponent, zero: bool = False) -> "NormValue":
        if zero:
            return cls("ultra", q, 0, True)
        e = Fraction(exponent)
        if e.denominator == 1:
            e = int(e)
        return cls("ultra", q, e, False)

    @classmethod
    def zero_of(cls, q: int) -> "NormValue":
        return cls("ultra", q, 0, True)

    @classmethod
    def real(cls, magnitude: float) -> "NormValue":
        return cls("real", magnitude=float(abs(magnitude)), zero=(magnitude == 0))

    def is_zero(self) -> bool:
        return self.zero

    def _key(self):
        if self.kind == "real":
            return self.magnitude
        # larger exponent means smaller norm
        return (0, 0) if self.zero else (1, -self.exponent)

    def __eq__(self, other):
        if isinstance(other, (int, float, Fraction)):
            return self.as_fraction() == other if self.kind == "ultra" else self.magnitude == other
        if not isinstance(other, NormValue):
            return NotImplemented
        if self.kind != other.kind:
            return NotImplemented
        if self.kind == "ultra" and not (self.zero and other.zero) and self.q != other.q:
            return NotImplemented
        return self._key() == other._key()

    def __lt__(self, other):
        if isinstance(other, (int, float, Fraction)):
            return float(self) < other
        if self.kind != other.kind:
            return NotImplemented
        return self._key() < other._key()

    def __hash__(self):
        return hash((self.kind, self.q, self._key()))

    def __mul__(self, other: "NormValue") -> "NormValue":
        if self.kind == "real":
            return NormValue.real(self.magnitude * other.magnitude)
        if self.zero or other.zero:
            return NormValue.zero_of(self.q)
        return NormValue.ultra(self.q, Fraction(self.exponent) + Fraction(other.exponent))

    def __truediv__(self, other: "NormValue") -> "NormValue":
        if other.zero:
            raise DivisionByZero("division by a zero norm")
        if self.kind == "real":
            return NormValue.real(self.magnitude / other.magnitude)
        if self.zero:
            return self
        return NormValue.ultra(self.q, Fraction(self.exponent) - Fraction(other.exponent))

    def __pow__(self, k) -> "NormValue":
        if self.kind == "real":
            return NormValue.real(self.magnitude ** k)
        if self.zero:
            return self
        return NormValue.ultra(self.q, Fraction(self.exponent) * Fraction(k))

    def as_fraction(self) -> Fraction:
        """Exact value as a rational; only for integral exponents."""
        if self.kind == "real":
            return Fraction(self.magnitude)
        if self.zero:
            return Fraction(0)
        e = Fraction(self.exponent)
        if e.denominator != 1:
            raise ValueError("norm with fractional exponent is irrational")
        return Fraction(self.q) ** (-int(e))

    def log_q(self) -> float:
        if self.kind == "real":
            return -INF if self.magnitude == 0 else math.log(self.magnitude)
        return -INF if self.zero else -float(self.exponent)

    def __float__(self):
        if self.kind == "real":
            return self.magnitude
        if self.zero:
            return 0.0
        return float(self.q) ** (-float(self.exponent))

    def __repr__(self):
        if self.kind == "real":
            return f"NormValue({self.magnitude!r})"
        if self.zero:
            return "NormValue(0)"
        return f"NormValue({self.q}^{-Fraction(self.exponent)})"


# ------------------------------------------------------------- PadicScalar


@dataclass(frozen=True)
class PadicScalar:
    """p^v * u with u a unit known modulo p^N.

    Zero has v = inf.  For the exact zero N = inf; otherwise N holds the
    absolute precision (the zero is known modulo p^N).
    """

    p: int
    v: float
    u: int
    N: float

    # construction
    @classmethod
    def zero(cls, p: int, abs_prec: float = INF) -> "PadicScalar":
        return cls(p, INF, 0, abs_prec)

    @classmethod
    def from_rational(cls, x, p: int, N: int = DEFAULT_PRECISION) -> "PadicScalar":
        x = Fraction(x)
        if x == 0:
            return cls.zero(p)
        num, den = x.numerator, x.denominator
        vn = int(valuation_int(num, p))
        vd = int(valuation_int(den, p))
        num //= p ** vn
        den //= p ** vd
        M = p ** N
        return cls(p, vn - vd, (num * pow(den, -1, M)) % M, N)

    @classmethod
    def from_residue(cls, r: int, p: int, n: int) -> "PadicScalar":
        """The class of an integer known modulo p^n."""
        r %= p ** n
        if r == 0:
            return cls.zero(p, n)
        v = int(valuation_int(r, p))
        return cls(p, v, r // p ** v, n - v)

    def is_zero(self) -> bool:
        return self.v == INF

    def is_exact_zero(self) -> bool:
        return self.v == INF and self.N == INF

    @property
    def q(self) -> int:
        return self.p

    @property
    def abs_prec(self) -> float:
        return self.N if self.is_zero() else self.v + self.N

    def norm(self) -> NormValue:
        if self.is_zero():
            return NormValue.zero_of(self.p)
        return NormValue.ultra(self.p, self.v)

    def valuation(self) -> float:
        return self.v

    def _check(self, other):
        if not isinstance(other, PadicScalar):
            other = PadicScalar.from_rational(other, self.p, self._default_N())
        if other.p != self.p:
            raise ValueError("mixing different primes")
        return other

    def _default_N(self):
        return self.N if self.N != INF else DEFAULT_PRECISION

    # arithmetic
    def __neg__(self):
        if self.is_zero():
            return self
        M = self.p ** self.N
        return PadicScalar(self.p, self.v, (-self.u) % M, self.N)

    def __add__(self, other):
        other = self._check(other)
        if self.is_exact_zero():
            return other
        if other.is_exact_zero():
            return self
        A = min(self.abs_prec, other.abs_prec)
        if self.is_zero() and other.is_zero():
            return PadicScalar.zero(self.p, A)
        vmin = min(self.v, other.v)
        s = 0
        for x in (self, other):
            if not x.is_zero():
                s += x.u * self.p ** int(x.v - vmin)
        n = int(A - vmin)
        if n <= 0:
            return PadicScalar.zero(self.p, A)
        s %= self.p ** n
        if s == 0:
            return PadicScalar.zero(self.p, A)
        w = int(valuation_int(s, self.p))
        v = int(vmin) + w
        return PadicScalar(self.p, v, s // self.p ** w, int(A) - v)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return self._check(other) - self

    def __mul__(self, other):
        other = self._check(other)
        if self.is_exact_zero() or other.is_exact_zero():
            return PadicScalar.zero(self.p)
        if self.is_zero() or other.is_zero():
            if self.is_zero() and other.is_zero():
                return PadicScalar.zero(self.p, self.N + other.N)
            z, nz = (self, other) if self.is_zero() else (other, self)
            return PadicScalar.zero(self.p, z.N + nz.v)
        N = min(self.N, other.N)
        M = self.p ** N
        return PadicScalar(self.p, self.v + other.v, (self.u * other.u) % M, N)

    __rmul__ = __mul__

    def inverse(self) -> "PadicScalar":
        if self.is_zero():
            raise DivisionByZero("inverse of a p-adic zero")
        M = self.p ** self.N
        return PadicScalar(self.p, -self.v, pow(self.u, -1, M), self.N)

    def __truediv__(self, other):
        other = self._check(other)
        if other.is_zero():
            raise DivisionByZero("p-adic division by zero")
        if self.is_zero():
            if self.is_exact_zero():
                return self
            return PadicScalar.zero(self.p, self.N - other.v)
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self._check(other) / self

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        out = PadicScalar.from_rational(1, self.p, self._default_N())
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = PadicScalar.from_rational(other, self.p, self._default_N())
        if not isinstance(other, PadicScalar):
            return NotImplemented
        if self.p != other.p:
            return False
        if self.is_zero() or other.is_zero():
            return self.is_zero() and other.is_zero()
        if self.v != other.v:
            return False
        N = min(self.N, other.N)
        M = self.p ** N
        return (self.u - other.u) % M == 0

    def __hash__(self):
        return hash((self.p, self.v))

    # conversions
    def residue(self, n: int) -> int:
        """Integer representative of this (integral) scalar mod p^n."""
        if self.is_zero():
            if self.N < n:
                raise PrecisionExhausted(f"zero known only mod p^{self.N}")
            return 0
        if self.v < 0:
            raise ValueError("non-integral scalar has no residue")
        if self.v + self.N < n:
            raise PrecisionExhausted(f"scalar known only mod p^{self.v + self.N}")
        return (self.u * self.p ** int(self.v)) % self.p ** n

    def to_fraction(self) -> Fraction:
        """The canonical rational representative p^v * u."""
        if self.is_zero():
            return Fraction(0)
        return Fraction(self.p) ** int(self.v) * self.u

    def digits(self, n: int) -> list[int]:
        r = self.residue(n)
        out = []
        for _ in range(n):
            r, d = divmod(r, self.p)
            out.append(d)
        return out

    def __repr__(self):
        if self.is_zero():
            return f"PadicScalar(0 mod {self.p}^{self.N})"
        return f"PadicScalar({self.p}^{self.v}*{self.u} +O({self.p}^{self.v + self.N}))"


# ------------------------------------------------------------- FiniteField


def _poly_mod_p_irreducible(coeffs: Sequence[int], p: int) -> bool:
    """Brute force irreducibility of a monic polynomial over F_p (low first)."""
    d = len(coeffs) - 1
    if d <= 1:
        return d == 1
    # any monic factor of degree k <= d/2
    for k in range(1, d // 2 + 1):
        for code in range(p ** k):
            g = [(code // p ** i) % p for i in range(k)] + [1]
            if _poly_rem(list(coeffs), g, p) == [0] * k:
                return False
    return True


def _poly_rem(a: list[int], b: list[int], p: int) -> list[int]:
    a = [x % p for x in a]
    db = len(b) - 1
    inv = pow(b[-1], -1, p)
    for i in range(len(a) - 1, db - 1, -1):
        c = (a[i] * inv) % p
        if c:
            for j in range(db + 1):
                a[i - db + j] = (a[i - db + j] - c * b[j]) % p
    out = a[:db]
    return out + [0] * (db - len(out))


class FiniteField:
    """F_q with q = p^e; elements are ints whose base-p digits are the
    coefficients in the power basis of a fixed irreducible modulus."""

    def __init__(self, p: int, e: int = 1):
        self.p, self.e, self.q = p, e, p ** e
        if e == 1:
            self.modulus = [0, 1]
            self._mul = None
            return
        self.modulus = None
        for code in range(p ** e):
            cand = [(code // p ** i) % p for i in range(e)] + [1]
            if _poly_mod_p_irreducible(cand, p):
                self.modulus = cand
                break
        q = self.q
        import numpy as np

        self._add = np.zeros((q, q), dtype=np.int64)
        self._mul = np.zeros((q, q), dtype=np.int64)
        for a in range(q):
            da = self._digits(a)
            for b in range(q):
                db = self._digits(b)
                self._add[a, b] = self._encode([(x + y) % p for x, y in zip(da, db)])
                prod = [0] * (2 * e - 1)
                for i, x in enumerate(da):
                    for j, y in enumerate(db):
                        prod[i + j] = (prod[i + j] + x * y) % p
                self._mul[a, b] = self._encode(_poly_rem(prod, self.modulus, p))
        self._inv = [0] * q
        for a in range(1, q):
            for b in range(1, q):
                if self._mul[a, b] == 1:
                    self._inv[a] = b
                    break

    def _digits(self, a: int) -> list[int]:
        return [(a // self.p ** i) % self.p for i in range(self.e)]

    def _encode(self, ds) -> int:
        return sum(int(d) * self.p ** i for i, d in enumerate(ds))

    def add(self, a: int, b: int) -> int:
        if self.e == 1:
            return (a + b) % self.p
        return int(self._add[a, b])

    def neg(self, a: int) -> int:
        if self.e == 1:
            return (-a) % self.p
        return self._encode([(-d) % self.p for d in self._digits(a)])

    def sub(self, a: int, b: int) -> int:
        return self.add(a, self.neg(b))

    def mul(self, a: int, b: int) -> int:
        if self.e == 1:
            return (a * b) % self.p
        return int(self._mul[a, b])

    def inv(self, a: int) -> int:
        if a == 0:
            raise DivisionByZero("inverse of 0 in F_q")
        if self.e == 1:
            return pow(a, -1, self.p)
        return self._inv[a]

    def from_int(self, n: int) -> int:
        """Image of an integer (prime subfield)."""
        return n % self.p


_FIELDS: dict[tuple[int, int], FiniteField] = {}


def finite_field(p: int, e: int = 1) -> FiniteField:
    key = (p, e)
    if key not in _FIELDS:
        _FIELDS[key] = FiniteField(p, e)
    return _FIELDS[key]


# ------------------------------------------------------------ LaurentScalar


@dataclass(frozen=True)
class LaurentScalar:
    """t^v * (c_0 + c_1 t + ... + c_{N-1} t^{N-1} + O(t^N)) over F_q."""

    p: int
    q: int
    v: float
    coeffs: tuple
    # absolute precision for zeros; ignored otherwise
    zero_prec: float = INF

    @property
    def field(self) -> FiniteField:
        e = round(math.log(self.q, self.p))
        return finite_field(self.p, e)

    @property
    def N(self) -> float:
        return self.zero_prec if self.is_zero() else len(self.coeffs)

    @classmethod
    def zero(cls, p: int, q: int | None = None, abs_prec: float = INF):
        return cls(p, q or p, INF, (), abs_prec)

    @classmethod
    def from_coeffs(cls, coeffs: Sequence[int], p: int, v: int = 0,
                    q: int | None = None, N: int | None = None):
        """Build from coefficients c_i of t^(v+i); precision defaults to len."""
        q = q or p
        cs = [int(c) % q for c in coeffs]
        N = len(cs) if N is None else N
        cs = (cs + [0] * N)[:N]
        for i, c in enumerate(cs):
            if c:
                return cls(p, q, v + i, tuple(cs[i:]))
        return cls.zero(p, q, v + N)

    @classmethod
    def from_rational(cls, x, p: int, N: int = DEFAULT_PRECISION, q: int | None = None):
        x = Fraction(x)
        q = q or p
        if x == 0:
            return cls.zero(p, q)
        if x.denominator % p == 0:
            raise DivisionByZero(f"{x} has no image in characteristic {p}")
        c = (x.numerator * pow(x.denominator, -1, p)) % p
        if c == 0:
            return cls.zero(p, q)
        return cls(p, q, 0, (c,) + (0,) * (N - 1))

    @classmethod
    def t_power(cls, k: int, p: int, N: int = DEFAULT_PRECISION, q: int | None = None):
        return cls(p, q or p, k, (1,) + (0,) * (N - 1))

    def is_zero(self) -> bool:
        return self.v == INF

    @property
    def abs_prec(self) -> float:
        return self.zero_prec if self.is_zero() else self.v + len(self.coeffs)

    def norm(self) -> NormValue:
        if self.is_zero():
            return NormValue.zero_of(self.q)
        return NormValue.ultra(self.q, self.v)

    def valuation(self) -> float:
        return self.v

    def _check(self, other):
        if not isinstance(other, LaurentScalar):
            n = len(self.coeffs) if not self.is_zero() else DEFAULT_PRECISION
            other = LaurentScalar.from_rational(other, self.p, n, self.q)
        if (other.p, other.q) != (self.p, self.q):
            raise ValueError("mixing different Laurent fields")
        return other

    def __neg__(self):
        F = self.field
        return LaurentScalar(self.p, self.q, self.v, tuple(F.neg(c) for c in self.coeffs),
                             self.zero_prec)

    def __add__(self, other):
        other = self._check(other)
        if self.is_zero() and self.zero_prec == INF:
            return other
        if other.is_zero() and other.zero_prec == INF:
            return self
        A = min(self.abs_prec, other.abs_prec)
        if self.is_zero() and other.is_zero():
            return LaurentScalar.zero(self.p, self.q, A)
        vmin = int(min(self.v, other.v))
        L = int(A) - vmin
        F = self.field
        acc = [0] * max(L, 0)
        for x in (self, other):
            if x.is_zero():
                continue
            off = int(x.v) - vmin
            for i, c in enumerate(x.coeffs):
                if off + i < L:
                    acc[off + i] = F.add(acc[off + i], c)
        for i, c in enumerate(acc):
            if c:
                return LaurentScalar(self.p, self.q, vmin + i, tuple(acc[i:]))
        return LaurentScalar.zero(self.p, self.q, A)

    __radd__ = __add__

    def __sub__(self, other):
        return self + (-self._check(other))

    def __rsub__(self, other):
        return self._check(other) - self

    def __mul__(self, other):
        other = self._check(other)
        if self.is_zero() or other.is_zero():
            if (self.is_zero() and self.zero_prec == INF) or (other.is_zero() and other.zero_prec == INF):
                return LaurentScalar.zero(self.p, self.q)
            if self.is_zero() and other.is_zero():
                return LaurentScalar.zero(self.p, self.q, self.zero_prec + other.zero_prec)
            z, nz = (self, other) if self.is_zero() else (other, self)
            return LaurentScalar.zero(self.p, self.q, z.zero_prec + nz.v)
        N = min(len(self.coeffs), len(other.coeffs))
        F = self.field
        out = [0] * N
        for i in range(N):
            a = self.coeffs[i]
            if not a:
                continue
            for j in range(N - i):
                b = other.coeffs[j]
                if b:
                    out[i + j] = F.add(out[i + j], F.mul(a, b))
        return LaurentScalar(self.p, self.q, self.v + other.v, tuple(out))

    __rmul__ = __mul__

    def inverse(self):
        if self.is_zero():
            raise DivisionByZero("inverse of a Laurent zero")
        F = self.field
        a = self.coeffs
        N = len(a)
        inv0 = F.inv(a[0])
        b = [0] * N
        b[0] = inv0
        for n in range(1, N):
            s = 0
            for k in range(1, n + 1):
                s = F.add(s, F.mul(a[k], b[n - k]))
            b[n] = F.mul(F.neg(s), inv0)
        return LaurentScalar(self.p, self.q, -self.v, tuple(b))

    def __truediv__(self, other):
        other = self._check(other)
        if other.is_zero():
            raise DivisionByZero("Laurent division by zero")
        if self.is_zero():
            if self.zero_prec == INF:
                return self
            return LaurentScalar.zero(self.p, self.q, self.zero_prec - other.v)
        return self * other.inverse()

    def __rtruediv__(self, other):
        return self._check(other) / self

    def __pow__(self, k: int):
        if k < 0:
            return self.inverse() ** (-k)
        n = len(self.coeffs) if not self.is_zero() else DEFAULT_PRECISION
        out = LaurentScalar.from_rational(1, self.p, n, self.q)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def __eq__(self, other):
        if isinstance(other, (int, Fraction)):
            other = self._check(other)
        if not isinstance(other, LaurentScalar):
            return NotImplemented
        if self.is_zero() or other.is_zero():
            return self.is_zero() and other.is_zero()
        if self.v != other.v:
            return False
        N = min(len(self.coeffs), len(other.coeffs))
        return self.coeffs[:N] == other.coeffs[:N]

    def __hash__(self):
        return hash((self.p, self.q, self.v))

    def residue(self, n: int) -> int:
        """Integer code sum a_i q^i of this (integral) element mod t^n."""
        if self.is_zero():
            if self.zero_prec < n:
                raise PrecisionExhausted(f"zero known only mod t^{self.zero_prec}")
            return 0
        if self.v < 0:
            raise ValueError("non-integral Laurent series has no residue")
        if self.abs_prec < n:
            raise PrecisionExhausted(f"series known only mod t^{self.abs_prec}")
        out = 0
        for i, c in enumerate(self.coeffs):
            k = int(self.v) + i
            if k >= n:
                break
            out += c * self.q ** k
        return out

    @classmethod
    def from_residue(cls, r: int, p: int, n: int, q: int | None = None):
        q = q or p
        cs = [(r // q ** i) % q for i in range(n)]
        return cls.from_coeffs(cs, p, 0, q, n)

    def __repr__(self):
        if self.is_zero():
            return f"LaurentScalar(0 + O(t^{self.zero_prec}))"
        return f"LaurentScalar(t^{self.v}*{list(self.coeffs)} over F_{self.q})"


# --------------------------------------------------------------- RealScalar


@dataclass(frozen=True)
class RealScalar:
    value: float

    @classmethod
    def from_rational(cls, x, *_args, **_kw):
        return cls(float(x))

    def _v(self, other):
        return other.value if isinstance(other, RealScalar) else float(other)

    def norm(self) -> NormValue:
        return NormValue.real(abs(self.value))

    def is_zero(self) -> bool:
        return self.value == 0.0

    def __neg__(self):
        return RealScalar(-self.value)

    def __add__(self, o):
        return RealScalar(self.value + self._v(o))

    __radd__ = __add__

    def __sub__(self, o):
        return RealScalar(self.value - self._v(o))

    def __rsub__(self, o):
        return RealScalar(self._v(o) - self.value)

    def __mul__(self, o):
        return RealScalar(self.value * self._v(o))

    __rmul__ = __mul__

    def __truediv__(self, o):
        d = self._v(o)
        if d == 0.0:
            raise DivisionByZero("real division by zero")
        return RealScalar(self.value / d)

    def __rtruediv__(self, o):
        return RealScalar(self._v(o)) / self

    def __pow__(self, k):
        return RealScalar(self.value ** k)

    def inverse(self):
        return RealScalar(1.0) / self

    def __eq__(self, o):
        if isinstance(o, (RealScalar, int, float, Fraction)):
            return self.value == self._v(o)
        return NotImplemented

    def __hash__(self):
        return hash(self.value)

    def __float__(self):
        return self.value


FieldScalar = PadicScalar | LaurentScalar | RealScalar


# ----------------------------------------------------------------- helpers


def arith(a, b, op: str):
    """Apply one field operation; an inexact zero result is an error here."""
    if type(a) is not type(b):
        raise ValueError("arith needs scalars of the same backend")
    if op == "add":
        r = a + b
    elif op == "sub":
        r = a - b
    elif op == "mul":
        r = a * b
    elif op == "div":
        r = a / b
    else:
        raise ValueError(f"unknown op {op!r}")
    if isinstance(r, (PadicScalar, LaurentScalar)) and r.is_zero() and r.N != INF:
        raise PrecisionExhausted(f"result of {op} is zero to precision {r.N}")
    return r


def vec_norm(xs: Sequence) -> NormValue:
    """Max norm of a vector."""
    if len(xs) == 0:
        raise ValueError("empty vector")
    norms = [x.norm() for x in xs]
    return max(norms)


def matrix_solve(A: Sequence[Sequence], b: Sequence) -> list:
    """Solve A x = b by elimination with max-norm pivoting."""
    n = len(A)
    if any(len(row) != n for row in A) or len(b) != n:
        raise ValueError("matrix_solve needs a square system")
    M = [list(row) + [b[i]] for i, row in enumerate(A)]
    for col in range(n):
        piv = max(range(col, n), key=lambda i: M[i][col].norm())
        if M[piv][col].is_zero():
            raise SingularAtPrecision(f"no usable pivot in column {col}")
        M[col], M[piv] = M[piv], M[col]
        inv = M[col][col].inverse()
        for i in range(col + 1, n):
            if M[i][col].is_zero():
                continue
            f = M[i][col] * inv
            M[i] = [M[i][j] - f * M[col][j] for j in range(n + 1)]
    x = [None] * n
    for i in range(n - 1, -1, -1):
        s = M[i][n]
        for j in range(i + 1, n):
            s = s - M[i][j] * x[j]
        x[i] = s * M[i][i].inverse()
    return x
