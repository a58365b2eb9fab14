"""Newton/Hensel lifting, zero-locus cell trees and distance to a zero locus."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (DepthExceeded, EmptyLocus, NoContraction, PrecisionExhausted,
                     SingularAtPrecision)
from .fields import (LaurentScalar, NormValue, PadicScalar, RealScalar, matrix_solve,
                     vec_norm)
from .poly import MultiPoly, PolyMap, evaluate, jacobian_minor, partial
from .residues import PolySystem

CERTIFIED = "certified-zero-bearing"
EMPTY = "certified-empty"
UNRESOLVED = "unresolved"


@dataclass(frozen=True)
class Cell:
    """base + P^depth R^m inside pi^(-scale) R^m; base entries are residue codes."""

    base: tuple
    depth: int
    scale: int = 0

    def volume(self, q: int) -> Fraction:
        m = len(self.base)
        return Fraction(q) ** (m * (self.scale - self.depth))

    def diameter(self, q: int) -> Fraction:
        return Fraction(q) ** (self.scale - self.depth)

    def children(self, q: int):
        step = q ** self.depth
        m = len(self.base)
        for code in range(q ** m):
            digits = [(code // q ** i) % q for i in range(m - 1, -1, -1)]
            yield Cell(tuple(b + d * step for b, d in zip(self.base, digits)),
                       self.depth + 1, self.scale)

    def contains(self, point: Sequence[int], q: int) -> bool:
        M = q ** self.depth
        return all((a - b) % M == 0 for a, b in zip(point, self.base))


@dataclass
class LiftCertificate:
    point: list
    residual_norm: NormValue
    minor_norm: NormValue
    chart: tuple
    contraction: NormValue
    iterations: int
    displacement: NormValue | None = None


@dataclass
class ZeroTree:
    root: Cell
    max_depth: int
    q: int
    certified: list = field(default_factory=list)
    empty: list = field(default_factory=list)
    unresolved: list = field(default_factory=list)

    def status(self, cell: Cell) -> str:
        for lst, s in ((self.certified, CERTIFIED), (self.unresolved, UNRESOLVED)):
            if cell in lst:
                return s
        return EMPTY

    def leaves(self):
        """Depth-max_depth cells that may meet the zero locus."""
        return sorted(self.certified + self.unresolved, key=lambda c: c.base)

    def is_empty(self) -> bool:
        return not self.certified and not self.unresolved

    def to_jsonl(self) -> list[dict]:
        rows = []
        for status, lst in ((CERTIFIED, self.certified), (UNRESOLVED, self.unresolved),
                            (EMPTY, self.empty)):
            for c in sorted(lst, key=lambda c: (c.depth, c.base)):
                rows.append({"base": list(c.base), "depth": c.depth, "status": status})
        return rows


# ------------------------------------------------------------------ helpers


def _scalar_kind(x):
    for v in x:
        if isinstance(v, (PadicScalar, LaurentScalar, RealScalar, float)):
            return v
    return None


def _zero_like(sample):
    if isinstance(sample, PadicScalar):
        return PadicScalar.zero(sample.p)
    if isinstance(sample, LaurentScalar):
        return LaurentScalar.zero(sample.p, sample.q)
    return RealScalar(0.0)


def _to_backend(x: Sequence, backend):
    """Coerce rationals to backend scalars, where backend is (kind, p, N, q)."""
    kind, p, N, q = backend
    out = []
    for v in x:
        if isinstance(v, (PadicScalar, LaurentScalar, RealScalar)):
            out.append(v)
        elif kind == "padic":
            out.append(PadicScalar.from_rational(v, p, N))
        elif kind == "laurent":
            out.append(LaurentScalar.from_rational(v, p, N, q))
        else:
            out.append(RealScalar(float(v)))
    return out


def _norm_vec(vals):
    return vec_norm(vals)


# --------------------------------------------------------------- hensel_lift


def hensel_lift(F: PolyMap, J: Sequence[int], x0: Sequence, target: int = 20,
                backend: tuple | None = None, max_iter: int = 200,
                real_tol: float = 1e-12) -> LiftCertificate:
    """Lift x0 to a zero of F by Newton iteration in the chart variables J.

    Ultrametric: requires |F(x0)| < |det d_J F(x0)|^2 and stops once every
    component is 0 mod P^target.  Real: stops when |F| < real_tol.
    backend is ("padic", p, N, None), ("laurent", p, N, q) or ("real",...);
    it can be omitted when x0 already holds backend scalars.
    """
    J = tuple(J)
    sample = _scalar_kind(x0)
    if backend is None:
        if sample is None:
            raise ValueError("backend needed for rational starting points")
        if isinstance(sample, PadicScalar):
            backend = ("padic", sample.p, None, None)
        elif isinstance(sample, LaurentScalar):
            backend = ("laurent", sample.p, None, sample.q)
        else:
            backend = ("real", 0, 0, None)
    kind, p = backend[0], backend[1]
    if kind == "real":
        return _real_newton(F, J, [float(v) for v in x0], real_tol, max_iter)

    char = p if kind == "laurent" else 0
    jac = [[partial(f, j, char) for j in J] for f in F.polys]
    minor = jacobian_minor(F, J, char)
    # generous working precision: the determinant costs delta digits per solve
    x_rat = list(x0)
    probe = _to_backend(x_rat, (kind, p, target + 8, backend[3]))
    det0 = evaluate(minor, probe)
    if det0.is_zero():
        raise NoContraction("chart minor vanishes at the starting point")
    delta = int(det0.valuation())
    N = target + 2 * max(delta, 0) + 8
    x = _to_backend(x_rat, (kind, p, N, backend[3]))
    fx = [evaluate(f, x) for f in F.polys]
    det = evaluate(minor, x)
    res = _norm_vec(fx)
    dn = det.norm()
    contraction = res / (dn * dn) if not res.is_zero() else res
    if not (res < dn * dn):
        raise NoContraction(f"|F(x0)| = {res} is not below |det|^2 = {dn * dn}")
    x_start = list(x)
    it = 0
    while True:
        vals = [v.valuation() for v in fx]
        if all(v >= target for v in vals):
            break
        if it >= max_iter:
            raise PrecisionExhausted("Newton iteration did not reach the target")
        A = [[evaluate(g, x) for g in row] for row in jac]
        try:
            step = matrix_solve(A, fx)
        except SingularAtPrecision as e:
            raise PrecisionExhausted(str(e)) from e
        for k, j in enumerate(J):
            x[j] = x[j] - step[k]
        fx = [evaluate(f, x) for f in F.polys]
        it += 1
    disp = vec_norm([a - b for a, b in zip(x, x_start)])
    return LiftCertificate(x, _norm_vec(fx), evaluate(minor, x).norm(), J, contraction, it, disp)


def _real_newton(F: PolyMap, J, x, tol, max_iter):
    jac = [[partial(f, j) for j in J] for f in F.polys]
    minor = jacobian_minor(F, J)
    x = list(x)
    x0 = list(x)
    f0 = np.array([evaluate(f, x) for f in F.polys], dtype=float)
    r0 = float(np.max(np.abs(f0)))
    prev = math.inf
    for it in range(max_iter):
        fx = np.array([evaluate(f, x) for f in F.polys], dtype=float)
        r = float(np.max(np.abs(fx)))
        if r < tol:
            d = float(np.max(np.abs(np.array(x) - np.array(x0))))
            return LiftCertificate([RealScalar(float(v)) for v in x], NormValue.real(r),
                                   NormValue.real(abs(evaluate(minor, x))), tuple(J),
                                   NormValue.real(r0), it, NormValue.real(d))
        if it > 3 and r > prev:
            break
        prev = r
        A = np.array([[evaluate(g, x) for g in row] for row in jac], dtype=float)
        try:
            step = np.linalg.solve(A, fx)
        except np.linalg.LinAlgError:
            break
        for k, j in enumerate(J):
            x[j] -= step[k]
    raise NoContraction("real Newton iteration failed to converge")


# ---------------------------------------------------------------- zero cells


def _rescale_to_ring(f: MultiPoly, ring, scale: int) -> MultiPoly:
    """pi^s f(pi^-scale u) with s chosen so the result is integral."""
    from .poly import compose

    if scale:
        pw = ring.uniformizer_power(-scale) if hasattr(ring, "uniformizer_power") else None
        if pw is None:
            raise ValueError("rescaling needs a p-adic ring")
        f = compose(f, [MultiPoly.var(i, f.m).scale(pw) for i in range(f.m)])
    vmin = min((ring.valuation_of(c) for c in f.terms.values()), default=0)
    if vmin != 0 and vmin != math.inf and hasattr(ring, "uniformizer_power"):
        f = f.scale(ring.uniformizer_power(-vmin))
    return f


class _Evaluator:
    """Evaluates f and its gradient at residue points."""

    def __init__(self, f: MultiPoly, ring):
        self.f = f
        self.ring = ring
        self.m = f.m
        self.sys = PolySystem([f] + [partial(f, i, ring.char) for i in range(f.m)])

    def values(self, points, n):
        """Return (v(f), [v(df/dx_i)]) per point, valuations capped at n."""
        vals = self.ring.eval(self.sys, points, n)
        return self.ring.valuations(vals, n)

    def exact_zero(self, point) -> bool:
        if self.ring.kind == "padic":
            return evaluate(self.f, [Fraction(int(a)) for a in point]) == 0
        sc = [self.ring.to_scalar(a, 64) for a in point]
        return evaluate(self.f, sc).is_zero()


def _classify(vf, vg, k, N):
    """Return EMPTY, CERTIFIED or None for a cell of depth k.

    vf: valuation of f at the base; vg: valuations of the partials.
    Empty: |f| > max(|grad f| q^-k, q^-2k).  Certified: single-variable
    Hensel from the base along some coordinate lands inside the cell.
    """
    g = min(vg) if len(vg) else math.inf
    if vf < min(g + k, 2 * k):
        return EMPTY
    for d in vg:
        if vf > 2 * d and vf - d >= k:
            return CERTIFIED
    return None


def zero_cells(f: MultiPoly, ring, depth: int, region: Cell | None = None,
               strict: bool = False) -> ZeroTree:
    """Partition the region into certified-empty cells and depth-N cells that
    are certified to contain a zero or left unresolved.

    f must have integral coefficients on R^m (use region.scale for balls
    of radius q^t; the polynomial is rescaled internally).
    """
    m = f.m
    region = region or Cell((0,) * m, 0, 0)
    g = _rescale_to_ring(f, ring, region.scale) if region.scale else f
    ev = _Evaluator(g, ring)
    q = ring.q
    # cap for valuations: enough to see 2*depth plus the Hensel slack
    W = 2 * depth + 2
    tree = ZeroTree(region, depth, q)
    level = [region]
    while level:
        k = level[0].depth
        pts = np.array([c.base for c in level], dtype=np.int64 if q ** W < (1 << 62) else object)
        V = ev.values(pts, W)
        nxt = []
        for c, row in zip(level, V):
            vf, vg = int(row[0]), [int(v) for v in row[1:]]
            if vf >= W and ev.exact_zero(c.base):
                status = CERTIFIED
            else:
                status = _classify(vf, vg, k, depth)
            if status == EMPTY:
                tree.empty.append(c)
            elif k == depth:
                if status == CERTIFIED:
                    tree.certified.append(c)
                else:
                    tree.unresolved.append(c)
            else:
                nxt.extend(c.children(q))
        level = nxt
    if strict and tree.unresolved:
        raise DepthExceeded(f"{len(tree.unresolved)} unresolved cells at depth {depth}")
    return tree


# ------------------------------------------------------------ dist_to_zero


@dataclass(frozen=True)
class Distance:
    """Ultrametric distance q^-level; exact=False means only an upper bound."""

    norm: NormValue
    exact: bool
    level: float

    def __float__(self):
        return float(self.norm)


def _cell_has_zero(ev, ring, base, k, max_depth):
    """Search the cell base + P^k R^m for a certified zero (bounded descent)."""
    W = 2 * max_depth + 2
    q = ring.q
    level = [Cell(tuple(base), k)]
    budget = 20000
    while level and budget > 0:
        kk = level[0].depth
        pts = np.array([c.base for c in level], dtype=np.int64 if q ** W < (1 << 62) else object)
        V = ev.values(pts, W)
        nxt = []
        for c, row in zip(level, V):
            vf, vg = int(row[0]), [int(v) for v in row[1:]]
            if vf >= W and ev.exact_zero(c.base):
                return True
            st = _classify(vf, vg, kk, max_depth)
            if st == CERTIFIED:
                return True
            if st is None and kk < max_depth:
                nxt.extend(c.children(q))
        budget -= len(level)
        level = nxt
    return False


def dist_to_zero(x: Sequence, f: MultiPoly, ring, max_depth: int = 12) -> Distance:
    """Distance from an integral point x to Z(f) within R^m."""
    q = ring.q
    W = 2 * max_depth + 2
    M = ring.modulus(W)
    base = [ring.from_scalar(v, W) % M if not isinstance(v, (int, np.integer)) else int(v) % M
            for v in x]
    ev = _Evaluator(f, ring)
    if ev.exact_zero(base):
        return Distance(NormValue.zero_of(q), True, math.inf)
    row = ev.values(np.array([base], dtype=object if M >= (1 << 62) else np.int64), W)[0]
    vf, vg = int(row[0]), [int(v) for v in row[1:]]
    # largest level whose cell around x is not certified empty
    j = 0
    while j <= max_depth:
        if _classify(vf, vg, j, max_depth) == EMPTY:
            break
        j += 1
    if j == 0:
        raise EmptyLocus("no zero of f in R^m near the point")
    if j > max_depth:
        return Distance(NormValue.ultra(q, max_depth), False, max_depth)
    # cells at levels >= j are empty; find the deepest level < j with a zero
    for lev in range(j - 1, -1, -1):
        # Hensel from x itself, else descend inside the cell
        direct = any(vf > 2 * d and vf - d >= lev for d in vg)
        if direct or _cell_has_zero(ev, ring, [b % ring.modulus(lev) if lev else 0 for b in base],
                                    lev, max_depth):
            return Distance(NormValue.ultra(q, lev), lev == j - 1, lev)
    raise EmptyLocus("no certified zero found in R^m")
