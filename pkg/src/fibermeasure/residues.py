"""Residue rings R/P^n for the ultrametric backends.

Both Z_p/p^n and F_q[t]/t^n encode an element as an integer: the p-adic
residue itself, or sum a_i q^i for the coefficients a_i of t^i.  With this
encoding the cell structure (children base + d*q^k, trailing-zero
valuation) is the same for both; only evaluation differs.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import kernels
from .fields import LaurentScalar, PadicScalar, finite_field
from .poly import MultiPoly


class PolySystem:
    """A list of polynomials flattened for batched evaluation.

    If tvar is given, that variable stands for the uniformizer (p or t)
    and is folded into the coefficients.
    """

    def __init__(self, polys: Sequence[MultiPoly], tvar: int | None = None):
        polys = list(polys)
        m_full = polys[0].m if polys else 0
        keep = [i for i in range(m_full) if i != tvar]
        coefs, exps, tpow, idx = [], [], [], []
        for k, f in enumerate(polys):
            for e, c in f.sorted_terms():
                coefs.append(c)
                exps.append([e[i] for i in keep])
                tpow.append(e[tvar] if tvar is not None else 0)
                idx.append(k)
        self.polys = polys
        self.m = len(keep)
        self.n_out = len(polys)
        self.coefs = coefs
        self.exps = np.array(exps, dtype=np.int64).reshape(len(coefs), self.m)
        self.tpow = tpow
        self.out_idx = np.array(idx, dtype=np.int64)
        self._cache: dict = {}

    def __len__(self):
        return self.n_out


def is_integral(c: Fraction, p: int) -> bool:
    return Fraction(c).denominator % p != 0


class PadicRing:
    """Z_p / p^n."""

    kind = "padic"

    def __init__(self, p: int):
        self.p = p
        self.q = p
        self.char = 0

    def __repr__(self):
        return f"PadicRing({self.p})"

    def modulus(self, n: int) -> int:
        return self.p ** n

    def uniformizer_power(self, k: int):
        return Fraction(self.p) ** k

    def valuation_of(self, c) -> float:
        from .fields import valuation_rational

        return valuation_rational(c, self.p)

    def coef_residue(self, c: Fraction, tpow: int, n: int) -> int:
        M = self.p ** n
        c = Fraction(c) * Fraction(self.p) ** tpow
        if c.denominator % self.p == 0:
            raise ValueError(f"coefficient {c} is not integral at {self.p}")
        return (c.numerator * pow(c.denominator, -1, M)) % M if M > 1 else 0

    def coef_array(self, system: PolySystem, n: int):
        key = ("c", n)
        if key not in system._cache:
            M = self.modulus(n)
            vals = [self.coef_residue(c, t, n) for c, t in zip(system.coefs, system.tpow)]
            dt = np.int64 if M < (1 << 62) else object
            system._cache[key] = np.array(vals, dtype=dt)
        return system._cache[key]

    def eval(self, system: PolySystem, points, n: int):
        """Values of every polynomial at every point, mod p^n; shape (S, n_out)."""
        M = self.modulus(n)
        pts = np.asarray(points)
        if pts.ndim == 1:
            pts = pts.reshape(1, -1)
        if system.n_out == 0 or len(system.coefs) == 0:
            return np.zeros((len(pts), system.n_out), dtype=np.int64)
        return kernels.eval_mod(self.coef_array(system, n), system.exps, system.out_idx,
                                system.n_out, pts, M)

    def count_zeros(self, system: PolySystem, n: int, sphere: bool = False) -> int:
        M = self.modulus(n)
        return kernels.count_zeros(self.coef_array(system, n), system.exps, system.out_idx,
                                   system.n_out, M, system.m, self.q, sphere)

    def valuations(self, arr, cap: int):
        a = np.asarray(arr)
        flat = a.reshape(-1)
        return kernels.valuations(flat, self.q, cap).reshape(a.shape)

    def to_scalar(self, code: int, n: int) -> PadicScalar:
        return PadicScalar.from_residue(int(code), self.p, n)

    def from_scalar(self, x, n: int) -> int:
        if isinstance(x, PadicScalar):
            return x.residue(n)
        return self.coef_residue(Fraction(x), 0, n)

    def scalar_from_rational(self, c, N: int):
        return PadicScalar.from_rational(c, self.p, N)


class LaurentRing:
    """F_q[t] / t^n with q = p^e."""

    kind = "laurent"

    def __init__(self, p: int, e: int = 1):
        self.p = p
        self.e = e
        self.q = p ** e
        self.char = p
        self.F = finite_field(p, e)

    def __repr__(self):
        return f"LaurentRing(p={self.p}, q={self.q})"

    def modulus(self, n: int) -> int:
        return self.q ** n

    def valuation_of(self, c) -> float:
        c = Fraction(c)
        if c == 0 or c.numerator % self.p == 0:
            return math.inf
        if c.denominator % self.p == 0:
            raise ValueError(f"{c} has no image in characteristic {self.p}")
        return 0

    def coef_residue(self, c: Fraction, tpow: int, n: int) -> int:
        c = Fraction(c)
        if c.denominator % self.p == 0:
            raise ValueError(f"{c} has no image in characteristic {self.p}")
        a = (c.numerator * pow(c.denominator, -1, self.p)) % self.p
        if tpow < 0:
            raise ValueError("negative power of t in a coefficient")
        if tpow >= n:
            return 0
        return a * self.q ** tpow

    # digit arrays: (..., n) of F_q codes
    def _digits(self, codes, n: int):
        codes = np.asarray(codes, dtype=object if self.q ** n >= (1 << 62) else np.int64)
        out = np.zeros(codes.shape + (n,), dtype=np.int64)
        rest = codes
        for i in range(n):
            out[..., i] = (rest % self.q).astype(np.int64)
            rest = rest // self.q
        return out

    def _undigits(self, D, n: int):
        big = self.q ** n >= (1 << 62)
        out = np.zeros(D.shape[:-1], dtype=object if big else np.int64)
        for i in range(n - 1, -1, -1):
            out = out * self.q + (D[..., i].astype(object) if big else D[..., i])
        return out

    def _fmul(self, a, b):
        if self.e == 1:
            return (a * b) % self.p
        return self.F._mul[a, b]

    def _fadd(self, a, b):
        if self.e == 1:
            return (a + b) % self.p
        return self.F._add[a, b]

    def _smul(self, A, B, n: int):
        out = np.zeros_like(A)
        for i in range(n):
            ai = A[..., i]
            if not ai.any():
                continue
            for j in range(n - i):
                out[..., i + j] = self._fadd(out[..., i + j], self._fmul(ai, B[..., j]))
        return out

    def eval(self, system: PolySystem, points, n: int):
        pts = np.asarray(points)
        if pts.ndim == 1:
            pts = pts.reshape(1, -1)
        S = len(pts)
        D = self._digits(pts, n)  # (S, m, n)
        out = np.zeros((S, system.n_out, n), dtype=np.int64)
        one = np.zeros((S, n), dtype=np.int64)
        if n:
            one[:, 0] = 1
        pw: dict = {}

        def power(j, k):
            if (j, k) not in pw:
                if k == 0:
                    pw[(j, k)] = one
                elif k == 1:
                    pw[(j, k)] = D[:, j, :]
                else:
                    h = power(j, k // 2)
                    sq = self._smul(h, h, n)
                    pw[(j, k)] = self._smul(sq, D[:, j, :], n) if k % 2 else sq
            return pw[(j, k)]

        for t, c in enumerate(system.coefs):
            code = self.coef_residue(c, system.tpow[t], n)
            if code == 0:
                continue
            cd = self._digits(np.array([code]), n)[0]
            term = np.broadcast_to(cd, (S, n)).copy()
            for j, k in enumerate(system.exps[t]):
                if k:
                    term = self._smul(term, power(j, int(k)), n)
            o = int(system.out_idx[t])
            out[:, o, :] = self._fadd(out[:, o, :], term)
        return self._undigits(out, n)

    def count_zeros(self, system: PolySystem, n: int, sphere: bool = False,
                    chunk: int = 1 << 14) -> int:
        M = self.modulus(n)
        m = system.m
        total = M ** m
        count = 0
        for start in range(0, total, chunk):
            idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
            pts = np.empty((len(idx), m), dtype=np.int64)
            rest = idx
            for j in range(m - 1, -1, -1):
                pts[:, j] = rest % M
                rest = rest // M
            if sphere:
                pts = pts[np.any(pts % self.q != 0, axis=1)]
                if len(pts) == 0:
                    continue
            vals = self.eval(system, pts, n)
            count += int(np.sum(np.all(vals == 0, axis=1)))
        return count

    def valuations(self, arr, cap: int):
        a = np.asarray(arr)
        return kernels.valuations(a.reshape(-1), self.q, cap).reshape(a.shape)

    def to_scalar(self, code: int, n: int) -> LaurentScalar:
        return LaurentScalar.from_residue(int(code), self.p, n, self.q)

    def from_scalar(self, x, n: int) -> int:
        if isinstance(x, LaurentScalar):
            return x.residue(n)
        return self.coef_residue(Fraction(x), 0, n)

    def scalar_from_rational(self, c, N: int):
        return LaurentScalar.from_rational(c, self.p, N, self.q)


def make_ring(kind: str, p: int, e: int = 1):
    if kind == "padic":
        return PadicRing(p)
    if kind == "laurent":
        return LaurentRing(p, e)
    raise ValueError(f"no residue ring for backend {kind!r}")
