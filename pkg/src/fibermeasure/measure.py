"""The canonical fiber measure on {F = c} over Z_p-type rings.

Method.  A ball of radius q^t is mapped onto R^m by x = pi^-t u, and each
component is rescaled to be integral, G_i = pi^s_i (F_i(pi^-t u) - c_i).
Then mu_{F,c}(ball) = q^(t m - sum s_i) * mu_{G,0}(R^m).

On R^m the measure is a sum over charts J (r of the m coordinates, the
others called y).  A fiber point belongs to the lexicographically first
chart that maximizes |d_J G|; its density in y is |d_J G|^-1.  For each
chart we descend two interleaved trees: y-cells of depth n and, inside
each, z-cells of depth k <= n.  A (y-cell, z-cell) node is

* pruned when some |G_i| exceeds its possible variation on the node,
* discarded when the chart assignment is constant on it and is not J,
* certified when Hensel's lemma gives exactly one zero z(y) in the
  z-cell for every y in the y-cell, all with |d_J G| = q^-delta; it then
  contributes vol(y-cell) * q^delta,
* otherwise split in z, or in y once k = n.

Everything is exact: contributions are integers over q^(max_depth (m-r)).
"""

from __future__ import annotations

import itertools
import math
from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import (BudgetExceeded, DepthInsufficient, SingularCells, UnresolvedFiber)
from .lift import Cell, hensel_lift
from .poly import MultiPoly, PolyMap, chart_indices, determinant, partial
from .residues import PadicRing, PolySystem

NORMALIZATION = ("Haar measure with vol(R^m) = 1 on k^m and vol(R^r) = 1 on k^r; "
                 "fiber measure = lim q^(n r) vol{x : F(x) = c mod P^n}")
REAL_NORMALIZATION = "Lebesgue measure on R^m and R^r; fiber density 1/|d_J F| (coarea)"


@dataclass(frozen=True)
class Region:
    """Ultrametric: the ball |x| <= q^t, or the annulus q^inner < |x| <= q^t.

    Real: the ball of max-norm radius `radius` (annulus above `inner_radius`);
    `coords` restricts the norm to a subset of coordinates and the remaining
    coordinates are limited to |x_i| <= extent.
    """

    t: int = 0
    inner: int | None = None
    radius: float | None = None
    inner_radius: float | None = None
    coords: tuple | None = None
    extent: float | None = None

    def spheres(self) -> list[int]:
        if self.inner is None:
            return []
        if self.inner >= self.t:
            raise ValueError("annulus needs inner < t")
        return list(range(self.inner + 1, self.t + 1))


@dataclass
class FiberPoint:
    point: list
    chart: tuple
    minor_norm: object
    certificate: object
    ycell: Cell


@dataclass
class MeasureEstimate:
    value: Fraction | float
    depth: int
    error_bound: Fraction | float = 0
    charts: dict = field(default_factory=dict)
    normalization: str = NORMALIZATION
    stderr: float | None = None
    flags: list = field(default_factory=list)
    max_fiber: int = 0
    bezout: int = 0
    max_delta: int = 0
    unresolved: int = 0
    nodes: int = 0

    def to_dict(self) -> dict:
        def fmt(v):
            return str(v) if isinstance(v, Fraction) else v

        return {
            "value": fmt(self.value),
            "value_float": float(self.value),
            "depth": self.depth,
            "error_bound": fmt(self.error_bound),
            "charts": {",".join(map(str, k)): fmt(v) for k, v in self.charts.items()},
            "normalization": self.normalization,
            "stderr": self.stderr,
            "flags": list(self.flags),
            "max_fiber": self.max_fiber,
            "bezout": self.bezout,
            "max_delta": self.max_delta,
            "unresolved": self.unresolved,
        }


# -------------------------------------------------------------- rescaling


def integral_rescale(f: MultiPoly, c, t: int, ring) -> tuple[MultiPoly, int]:
    """Return (G, s) with G = pi^s (f(pi^-t u) - c) integral, primitive.

    G has one extra last variable standing for the uniformizer; p-adic
    coefficients absorb it directly.  s is None when G vanishes identically.
    """
    m = f.m
    g = f - Fraction(c)
    items = []
    for e, coef in g.terms.items():
        w = ring.valuation_of(coef)
        if w == math.inf:
            continue
        items.append((e, coef, int(w) - t * sum(e)))
    if not items:
        return MultiPoly(m + 1), None
    s = -min(w for _, _, w in items)
    terms = {}
    for e, coef, w in items:
        k = w + s  # >= 0
        if ring.kind == "padic":
            # coef * p^(s - t|e|), the p-power stays in the coefficient
            terms[tuple(e) + (0,)] = coef * Fraction(ring.p) ** (s - t * sum(e))
        else:
            terms[tuple(e) + (k,)] = coef
    return MultiPoly(m + 1, terms), s


class _Prepared:
    """Rescaled system for one ball or sphere: G, partials, minors."""

    def __init__(self, F: PolyMap, c: Sequence, t: int, ring):
        self.ring = ring
        self.m = F.m
        self.r = F.r
        G, ss = [], []
        for f, ci in zip(F.polys, c):
            g, s = integral_rescale(f, ci, t, ring)
            G.append(g)
            ss.append(s)
        self.degenerate = any(s is None for s in ss)
        self.s = [0 if s is None else s for s in ss]
        self.factor = Fraction(ring.q) ** (t * self.m - sum(self.s))
        self.G = G
        m, r = self.m, self.r
        char = ring.char
        self.charts = chart_indices(m, r)
        parts = [[partial(g, j, char) for j in range(m)] for g in G]
        minors = [determinant([[parts[i][j] for j in J] for i in range(r)]) for J in self.charts]
        self.system = PolySystem(G + [p for row in parts for p in row] + minors, tvar=m)
        self.g_system = PolySystem(G, tvar=m)
        self.parts = parts


# ------------------------------------------------------------------ engine


@dataclass
class _EngineResult:
    total: Fraction
    charts: dict
    error: Fraction
    max_fiber: int
    max_delta: int
    unresolved: int
    nodes: int


def _grid(q: int, dim: int) -> np.ndarray:
    if dim == 0:
        return np.zeros((1, 0), dtype=np.int64)
    g = np.array(list(itertools.product(range(q), repeat=dim)), dtype=np.int64)
    return g.reshape(-1, dim)


def _run_engine(prep: _Prepared, sphere: bool, seed_depth: int, max_depth: int,
                guard: int = 0, node_budget: int = 5_000_000,
                only_chart: int | None = None, fixed_y=None,
                collect: list | None = None) -> _EngineResult:
    ring = prep.ring
    q, m, r = ring.q, prep.m, prep.r
    my = m - r
    charts = prep.charts
    nC = len(charts)
    dtype = np.int64 if q ** (max_depth + 1) < (1 << 62) else object
    denom_exp = max_depth * my
    totals = [0] * nC
    err = 0
    max_delta = 0
    unresolved = 0
    nodes = 0
    fiber_counts = [defaultdict(int) for _ in range(nC)]

    for jidx, J in enumerate(charts):
        if only_chart is not None and jidx != only_chart:
            continue
        ycols = [j for j in range(m) if j not in J]
        zcols = list(J)
        n0 = max(seed_depth, 1 if sphere else 0, 1)
        k0 = 1 if sphere else 0
        if fixed_y is not None:
            Y = np.array([fixed_y[0]], dtype=dtype).reshape(1, my)
            n0 = fixed_y[1]
        else:
            Y = _grid(q ** n0, my).astype(dtype)
        Z = _grid(q, r).astype(dtype) if k0 else np.zeros((1, r), dtype=dtype)
        Yr = np.repeat(Y, len(Z), axis=0)
        Zr = np.tile(Z, (len(Y), 1))
        if sphere:
            unit = np.zeros(len(Yr), dtype=bool)
            for A in (Yr, Zr):
                for j in range(A.shape[1]):
                    unit |= (A[:, j] % q) != 0
            Yr, Zr = Yr[unit], Zr[unit]
        queue = {(n0, k0): [(Yr, Zr)]}
        while queue:
            key = min(queue)
            n, k = key
            Ys = np.concatenate([a for a, _ in queue[key]])
            Zs = np.concatenate([b for _, b in queue.pop(key)])
            if len(Ys) == 0:
                continue
            nodes += len(Ys)
            if nodes > node_budget:
                raise BudgetExceeded(f"measure engine exceeded {node_budget} nodes")
            X = np.empty((len(Ys), m), dtype=dtype)
            X[:, ycols] = Ys
            X[:, zcols] = Zs
            vals = ring.eval(prep.system, X, n)
            V = np.asarray(ring.valuations(vals, n), dtype=np.int64)
            vh = V[:, :r]
            gp = V[:, r:r + r * m].reshape(-1, r, m)[:, :, zcols]
            g = gp.min(axis=2)  # (S, r)
            dK = V[:, r + r * m:]
            dstar = dK.min(axis=1)
            jstar = dK.argmin(axis=1)
            dJ = dK[:, jidx]
            lim = np.minimum(np.minimum(k + g, 2 * k), n)
            prune = np.any(vh < lim, axis=1)
            settled = dstar < min(k, n)
            discard = ~prune & settled & (jstar != jidx)
            vmin = vh.min(axis=1)
            cert = (~prune & settled & (jstar == jidx) & (vmin > 2 * dJ) & (vmin - dJ >= k)
                    & (dJ < n - guard))
            rest = ~(prune | discard | cert)
            if cert.any():
                deltas = dJ[cert]
                max_delta = max(max_delta, int(deltas.max()))
                uniq, cnt = np.unique(deltas, return_counts=True)
                for d, ct in zip(uniq, cnt):
                    totals[jidx] += int(ct) * q ** (int(d) + (max_depth - n) * my)
                for yrow in Ys[cert]:
                    fiber_counts[jidx][(n, tuple(int(v) for v in yrow))] += 1
                if collect is not None:
                    Xc = X[cert]
                    for row, d in zip(Xc, deltas):
                        collect.append((jidx, n, tuple(int(v) for v in row), int(d)))
            if not rest.any():
                continue
            Yn, Zn = Ys[rest], Zs[rest]
            if k < n:
                grid = _grid(q, r).astype(dtype) * q ** k
                Zc = (np.repeat(Zn, len(grid), axis=0) + np.tile(grid, (len(Zn), 1)))
                Yc = np.repeat(Yn, len(grid), axis=0)
                queue.setdefault((n, k + 1), []).append((Yc, Zc))
            elif n < max_depth and fixed_y is None:
                grid = _grid(q, my).astype(dtype) * q ** n
                Yc = (np.repeat(Yn, len(grid), axis=0) + np.tile(grid, (len(Yn), 1)))
                Zc = np.repeat(Zn, len(grid), axis=0)
                queue.setdefault((n + 1, k), []).append((Yc, Zc))
            else:
                unresolved += len(Yn)
                err += len(Yn) * q ** ((max_depth - n) * my)

    denom = Fraction(q) ** denom_exp
    chart_vals = {J: Fraction(totals[i]) / denom for i, J in enumerate(charts)}
    total = sum(chart_vals.values(), Fraction(0))
    return _EngineResult(total, chart_vals, Fraction(err) / denom,
                         _max_fiber(fiber_counts, q), max_delta, unresolved, nodes)


def _max_fiber(fiber_counts, q) -> int:
    """Largest number of certified z-solutions over a single y, per chart."""
    best = 0
    for counts in fiber_counts:
        if not counts:
            continue
        depths = sorted({n for n, _ in counts})
        for (n, y), c in counts.items():
            tot = c
            for n2 in depths:
                if n2 >= n:
                    break
                M = q ** n2
                tot += counts.get((n2, tuple(v % M for v in y)), 0)
            best = max(best, tot)
    return best


# ---------------------------------------------------------------- public ops


def _as_vector(c, r):
    if isinstance(c, (int, Fraction, str)):
        c = [c]
    c = [Fraction(v) for v in c]
    if len(c) != r:
        raise ValueError(f"value c must have {r} components")
    return c


def _pieces(region: Region):
    """(scale, sphere?) pieces whose union is the region, disjointly."""
    if region.inner is None:
        return [(region.t, False)]
    return [(s, True) for s in region.spheres()]


def canonical_measure(F: PolyMap, c, region: Region | None = None, depth: int = 8,
                      ring=None, seed_depth: int = 1, guard: int = 0,
                      tolerance: Fraction | float | None = None,
                      strict_singular: bool = False,
                      node_budget: int = 5_000_000) -> MeasureEstimate:
    """Exact fiber measure of {F = c} inside an ultrametric ball or annulus."""
    ring = ring or PadicRing(5)
    region = region or Region()
    c = _as_vector(c, F.r)
    total = Fraction(0)
    err = Fraction(0)
    charts: dict = defaultdict(Fraction)
    est = MeasureEstimate(Fraction(0), depth, bezout=F.bezout)
    for t, sphere in _pieces(region):
        prep = _Prepared(F, c, t, ring)
        if prep.degenerate:
            est.flags.append(f"component identically equal to c at scale {t}")
            continue
        res = _run_engine(prep, sphere, min(seed_depth, depth), depth, guard, node_budget)
        total += prep.factor * res.total
        err += prep.factor * res.error
        for J, v in res.charts.items():
            charts[J] += prep.factor * v
        est.max_fiber = max(est.max_fiber, res.max_fiber)
        est.max_delta = max(est.max_delta, res.max_delta)
        est.unresolved += res.unresolved
        est.nodes += res.nodes
    est.value = total
    est.error_bound = err
    est.charts = dict(charts)
    if est.unresolved:
        est.flags.append("SingularCells: unresolved cells at maximal depth")
        if strict_singular:
            raise SingularCells(f"{est.unresolved} unresolved cells at depth {depth}")
    if tolerance is not None and err > Fraction(tolerance):
        raise DepthInsufficient(f"error bound {err} exceeds tolerance {tolerance}")
    return est


def point_count_density(F: PolyMap, c, region: Region | None = None, N: int = 2,
                        ring=None, budget: int = 2 * 10 ** 8) -> Fraction:
    """#{x mod P^N in region : F(x) = c mod P^N} / q^(N(m-r)), scaled to the region."""
    ring = ring or PadicRing(5)
    region = region or Region()
    c = _as_vector(c, F.r)
    total = Fraction(0)
    for t, sphere in _pieces(region):
        prep = _Prepared(F, c, t, ring)
        if prep.degenerate:
            raise ValueError("a component is identically equal to c")
        if ring.q ** (N * F.m) > budget:
            raise BudgetExceeded(f"q^(N m) = {ring.q ** (N * F.m)} exceeds budget {budget}")
        cnt = ring.count_zeros(prep.g_system, N, sphere)
        total += prep.factor * Fraction(cnt, ring.q ** (N * (F.m - F.r)))
    return total


def residue_minor_depth(F: PolyMap, c, N: int, ring=None, region: Region | None = None,
                        chunk: int = 1 << 15, budget: int = 2 * 10 ** 7) -> int:
    """max over residue solutions x mod P^N of min_J v(d_J(x)), capped at N.

    This is the valuation that controls when the point count has converged:
    solutions mod P^N with every minor divisible by P^delta only stabilise
    once N > 2 delta.  Returns -1 when there are no residue solutions.
    """
    ring = ring or PadicRing(5)
    region = region or Region()
    c = _as_vector(c, F.r)
    q, m = ring.q, F.m
    best = -1
    for t, sphere in _pieces(region):
        prep = _Prepared(F, c, t, ring)
        M = ring.modulus(N)
        total = M ** m
        if total > budget:
            raise BudgetExceeded(f"{total} residues exceed the budget {budget}")
        r = F.r
        for start in range(0, total, chunk):
            idx = np.arange(start, min(start + chunk, total), dtype=np.int64)
            pts = np.empty((len(idx), m), dtype=np.int64)
            rest = idx
            for j in range(m - 1, -1, -1):
                pts[:, j] = rest % M
                rest = rest // M
            if sphere:
                pts = pts[np.any(pts % q != 0, axis=1)]
                if len(pts) == 0:
                    continue
            vals = ring.eval(prep.system, pts, N)
            sol = np.all(np.asarray(vals[:, :r]) == 0, axis=1)
            if not sol.any():
                continue
            V = np.asarray(ring.valuations(vals[sol][:, r + r * m:], N), dtype=np.int64)
            best = max(best, int(V.min(axis=1).max()))
    return best


def oracle_depth(F: PolyMap, c, ring=None, region: Region | None = None, n_max: int = 8,
                 budget: int = 2 * 10 ** 7) -> int:
    """Smallest N with N >= 2 * residue_minor_depth(N) + 1 (None if over budget)."""
    ring = ring or PadicRing(5)
    for N in range(1, n_max + 1):
        if ring.q ** (N * F.m) > budget:
            return None
        d = residue_minor_depth(F, c, N, ring, region, budget=budget)
        if N >= 2 * max(d, 0) + 1:
            return N
    return None


def fiber_solutions(F: PolyMap, c, J: Sequence[int], ycell: Cell, ring=None,
                    depth: int | None = None, lift_target: int = 20) -> list[FiberPoint]:
    """Fiber points over the base of a projected cell, assigned to chart J.

    The z-coordinates are resolved by cell descent down to the cell depth and
    each certified branch is lifted by Newton iteration at the base y.
    """
    ring = ring or PadicRing(5)
    c = _as_vector(c, F.r)
    J = tuple(J)
    prep = _Prepared(F, c, 0, ring)
    n = ycell.depth if depth is None else depth
    jidx = prep.charts.index(J)
    res_points = []
    q, m, r = ring.q, F.m, F.r
    ycols = [j for j in range(m) if j not in J]
    # replay the z-descent for one y-cell, collecting certified z-cells
    dtype = np.int64 if q ** (n + 1) < (1 << 62) else object
    Zs = np.zeros((1, r), dtype=dtype)
    k = 0
    found = []
    while len(Zs):
        X = np.empty((len(Zs), m), dtype=dtype)
        X[:, ycols] = np.array(ycell.base, dtype=dtype).reshape(1, -1)
        X[:, list(J)] = Zs
        V = np.asarray(ring.valuations(ring.eval(prep.system, X, n), n), dtype=np.int64)
        vh = V[:, :r]
        g = V[:, r:r + r * m].reshape(-1, r, m)[:, :, list(J)].min(axis=2)
        dK = V[:, r + r * m:]
        dstar, jstar, dJ = dK.min(axis=1), dK.argmin(axis=1), dK[:, jidx]
        prune = np.any(vh < np.minimum(np.minimum(k + g, 2 * k), n), axis=1)
        settled = dstar < min(k, n)
        discard = ~prune & settled & (jstar != jidx)
        vmin = vh.min(axis=1)
        cert = ~prune & settled & (jstar == jidx) & (vmin > 2 * dJ) & (vmin - dJ >= k)
        rest = ~(prune | discard | cert)
        for z, d in zip(Zs[cert], dJ[cert]):
            found.append((tuple(int(v) for v in z), int(d)))
        if rest.any() and k >= n:
            raise UnresolvedFiber(f"{int(rest.sum())} z-cells unresolved at depth {n}")
        grid = _grid(q, r).astype(dtype) * q ** k
        Zn = Zs[rest]
        Zs = np.repeat(Zn, len(grid), axis=0) + np.tile(grid, (len(Zn), 1))
        k += 1
    if len(found) > F.bezout:
        raise AssertionError(f"{len(found)} fiber points exceed the Bezout bound {F.bezout}")
    for z, d in found:
        x = [0] * m
        for j, v in zip(ycols, ycell.base):
            x[j] = ring.to_scalar(v, lift_target + 2 * n + 8)
        for j, v in zip(J, z):
            x[j] = ring.to_scalar(v, lift_target + 2 * n + 8)
        Fc = PolyMap([f - ci for f, ci in zip(F.polys, c)])
        cert = hensel_lift(Fc, J, x, target=lift_target)
        res_points.append(FiberPoint(cert.point, J, cert.minor_norm, cert, ycell))
    return res_points


# ------------------------------------------------------------------ growth


@dataclass
class GrowthSeries:
    ts: list
    measures: list
    slope: float
    intercept: float
    reference_slope: int
    gamma_fit: float
    residual: float
    q: int
    window: tuple = ()
    estimates: list = field(default_factory=list)

    def rows(self):
        return list(zip(self.ts, self.measures))

    def to_dict(self) -> dict:
        return {
            "t": list(self.ts),
            "measure": [str(v) if isinstance(v, Fraction) else v for v in self.measures],
            "slope": self.slope,
            "intercept": self.intercept,
            "reference_slope": self.reference_slope,
            "gamma_fit": self.gamma_fit,
            "residual": self.residual,
            "window": list(self.window),
        }


def fit_log_slope(ts, values, q, window=None):
    """Least-squares slope of log_q(value) against t over the window."""
    pts = [(t, v) for t, v in zip(ts, values) if v > 0
           and (window is None or window[0] <= t <= window[1])]
    if len(pts) < 2:
        return float("nan"), float("nan"), float("nan")
    x = np.array([t for t, _ in pts], dtype=float)
    y = np.array([math.log(float(v)) / math.log(q) for _, v in pts])
    A = np.vstack([x, np.ones_like(x)]).T
    (a, b), *_ = np.linalg.lstsq(A, y, rcond=None)
    resid = float(np.sqrt(np.mean((A @ np.array([a, b]) - y) ** 2)))
    return float(a), float(b), resid


def growth_series(F: PolyMap, c, t_max: int, depth: int = 8, ring=None,
                  window: tuple | None = None, **kw) -> GrowthSeries:
    """mu(B_{q^t}) for t = 0..t_max, built as B_1 plus the spheres 1..t."""
    ring = ring or PadicRing(5)
    base = canonical_measure(F, c, Region(t=0), depth, ring, **kw)
    ests = [base]
    measures = [base.value]
    for s in range(1, t_max + 1):
        sph = canonical_measure(F, c, Region(t=s, inner=s - 1), depth, ring, **kw)
        ests.append(sph)
        measures.append(measures[-1] + sph.value)
    ts = list(range(t_max + 1))
    if window is None:
        window = (1, t_max) if t_max >= 2 else (0, t_max)
    slope, icpt, resid = fit_log_slope(ts, measures, ring.q, window)
    ref = F.m - F.r
    return GrowthSeries(ts, measures, slope, icpt, ref, slope - ref, resid, ring.q,
                        tuple(window), ests)


# -------------------------------------------------------------- temperedness


@dataclass
class TemperedReport:
    alpha: float
    terms: list
    partial_sums: list
    verdict: str
    ratio: float
    note: str = "resolution-bounded evidence over the observed window, not a proof"

    def to_dict(self):
        return {"alpha": self.alpha, "terms": self.terms, "partial_sums": self.partial_sums,
                "verdict": self.verdict, "tail_ratio": self.ratio, "note": self.note}


def tempered_report(series: GrowthSeries | Sequence, alpha: float, q: float | None = None,
                    toward_zero: bool = False) -> TemperedReport:
    """Partial sums of sum_t mu(annulus t) (1 + q^(2t))^-alpha.

    Convergent when the last terms shrink geometrically (ratio < 1).
    With toward_zero, the input is a list of per-annulus masses shrinking
    toward the origin with weight 1, and the same tail test applies.
    """
    if isinstance(series, GrowthSeries):
        q = series.q
        ann = [float(series.measures[0])] + [float(b - a) for a, b in
                                             zip(series.measures, series.measures[1:])]
        ts = series.ts
    else:
        ann = [float(v) for v in series]
        ts = list(range(len(ann)))
        q = q or 2.0
    if toward_zero:
        terms = ann
    else:
        terms = [a * (1.0 + float(q) ** (2 * t)) ** (-alpha) for a, t in zip(ann, ts)]
    sums = list(itertools.accumulate(terms))
    tail = [x for x in terms[-3:] if x > 0]
    ratios = [b / a for a, b in zip(tail, tail[1:]) if a > 0]
    ratio = max(ratios) if ratios else 0.0
    verdict = "convergent" if (not ratios or ratio < 0.9) else "divergent"
    return TemperedReport(alpha, terms, sums, verdict, ratio)
