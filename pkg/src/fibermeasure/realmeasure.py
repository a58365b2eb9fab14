"""Fiber measures over R by sampling the projected coordinates of each chart.

For a chart J the fiber is locally a graph over the other m - r
coordinates y, and the measure is sum over fiber points above y of
1/|d_J F| dy.  We sample y on a jittered grid, solve for the J
coordinates (companion eigenvalues when r = 1, seeded Newton otherwise),
keep the points whose lexicographic argmax chart is J, and average.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

import numpy as np

from . import kernels
from .errors import NewtonDivergence
from .measure import REAL_NORMALIZATION, MeasureEstimate, Region, fit_log_slope, GrowthSeries
from .poly import MultiPoly, PolyMap, chart_indices, determinant, partial, to_arrays


class RealSystem:
    """Float evaluation of a list of polynomials in m variables."""

    def __init__(self, polys: Sequence[MultiPoly]):
        self.n_out = len(polys)
        coefs, self.exps, self.out_idx = to_arrays(list(polys))
        self.coef = np.array([float(c) for c in coefs], dtype=np.float64)
        self.m = polys[0].m if polys else 0

    def __call__(self, X: np.ndarray) -> np.ndarray:
        X = np.ascontiguousarray(X, dtype=np.float64)
        if len(self.coef) == 0:
            return np.zeros((len(X), self.n_out))
        return kernels.eval_real(self.coef, self.exps, self.out_idx, self.n_out, X)


def _jittered(rng, S: int, dim: int) -> np.ndarray:
    """S points in [0,1)^dim, one per cell of an n^dim grid when possible."""
    if dim == 0:
        return np.zeros((S, 0))
    n = max(1, int(round(S ** (1.0 / dim))))
    if n ** dim == S:
        grid = np.stack(np.meshgrid(*[np.arange(n)] * dim, indexing="ij"), -1).reshape(-1, dim)
        return (grid + rng.random((S, dim))) / n
    if dim == 1:
        return ((np.arange(S) + rng.random(S)) / S).reshape(-1, 1)
    return rng.random((S, dim))


class _RealProblem:
    def __init__(self, F: PolyMap, c):
        self.F = F
        self.m, self.r = F.m, F.r
        self.c = np.array([float(v) for v in c], dtype=np.float64)
        self.Fsys = RealSystem(list(F.polys))
        self.charts = chart_indices(self.m, self.r)
        parts = [[partial(f, j) for j in range(self.m)] for f in F.polys]
        self.parts = parts
        self.minors = RealSystem([determinant([[parts[i][j] for j in J] for i in range(self.r)])
                                  for J in self.charts])
        self.jac = RealSystem([p for row in parts for p in row])
        self.grad2 = None

    def chart_of(self, X):
        """Lex-first argmax of |d_K F| and the minors at each point."""
        Mv = self.minors(X)
        return np.argmax(np.abs(Mv), axis=1), Mv


def _region_boxes(region: Region, m: int):
    """Per-coordinate half-widths of the sampling box and the norm coordinates."""
    coords = tuple(range(m)) if region.coords is None else tuple(region.coords)
    R = float(region.radius if region.radius is not None else 1.0)
    ext = float(region.extent) if region.extent is not None else R
    half = np.array([R if i in coords else ext for i in range(m)])
    return coords, half, R


def _in_region(X, region: Region, coords, half, R):
    if len(X) == 0:
        return np.zeros(0, dtype=bool)
    nrm = np.max(np.abs(X[:, list(coords)]), axis=1)
    ok = nrm <= R
    if region.inner_radius is not None:
        ok &= nrm >= float(region.inner_radius)
    for i in range(X.shape[1]):
        if i not in coords:
            ok &= np.abs(X[:, i]) <= half[i]
    return ok


def _univariate_split(f: MultiPoly, i: int):
    """f = sum_k a_k(y) x_i^k, with a_k polynomials in the other variables."""
    m = f.m
    d = max((e[i] for e in f.terms), default=0)
    parts = [dict() for _ in range(d + 1)]
    for e, c in f.terms.items():
        rest = e[:i] + e[i + 1:]
        parts[e[i]][rest] = parts[e[i]].get(rest, 0) + c
    return [MultiPoly(m - 1, p) for p in parts]


def _roots_r1(coefs: np.ndarray):
    """Real roots of sum_k coefs[:, k] x^k per row; returns (row index, root)."""
    S, d1 = coefs.shape
    d = d1 - 1
    while d > 0 and np.all(coefs[:, d] == 0):
        d -= 1
    if d == 0:
        return np.zeros(0, dtype=np.int64), np.zeros(0)
    lead = coefs[:, d]
    ok = np.abs(lead) > 1e-300
    rows = np.nonzero(ok)[0]
    if d == 1:
        return rows, -coefs[rows, 0] / coefs[rows, 1]
    comp = np.zeros((len(rows), d, d))
    comp[:, 1:, :-1] = np.eye(d - 1)
    comp[:, :, -1] = -coefs[rows, :d] / lead[rows, None]
    ev = np.linalg.eigvals(comp)
    scale = 1.0 + np.abs(ev)
    real = np.abs(ev.imag) <= 1e-7 * scale
    rr, kk = np.nonzero(real)
    roots = ev.real[rr, kk]
    # polish with Newton on the exact polynomial
    c = coefs[rows[rr], :d + 1]
    for _ in range(3):
        p = np.zeros_like(roots)
        dp = np.zeros_like(roots)
        for k in range(d, -1, -1):
            dp = dp * roots + p
            p = p * roots + c[:, k]
        step = np.where(dp != 0, p / np.where(dp != 0, dp, 1), 0)
        roots = roots - step
    return rows[rr], roots


def real_fiber_measure(F: PolyMap, c, region: Region, samples: int = 10 ** 5, seed: int = 0,
                       weight: Callable[[np.ndarray], np.ndarray] | None = None,
                       newton_seeds: int = 8, divergence_threshold: float = 0.05,
                       strict: bool = False, collect: list | None = None) -> MeasureEstimate:
    """Monte Carlo estimate of the fiber measure (times an optional weight).

    Deterministic for a given seed.  The standard error comes from the
    per-sample contributions and is conservative for the jittered grid.
    """
    c = [float(v) for v in (c if isinstance(c, (list, tuple)) else [c])]
    prob = _RealProblem(F, c)
    m, r = prob.m, prob.r
    coords, half, R = _region_boxes(region, m)
    rng = np.random.default_rng(seed)
    total, var = 0.0, 0.0
    charts = {}
    flags = []
    diverged = 0
    attempts = 0
    for jidx, J in enumerate(prob.charts):
        ycols = [j for j in range(m) if j not in J]
        U = _jittered(rng, samples, m - r)
        S = len(U)
        Y = (2 * U - 1) * half[ycols]
        vol = float(np.prod(2 * half[ycols])) if ycols else 1.0
        contrib = np.zeros(S)
        if r == 1:
            i = J[0]
            split = _univariate_split(F.polys[0] - c[0], i)
            A = RealSystem(split)(Y) if ycols else np.array([[float(p.constant_term()) for p in split]])
            if not ycols:
                A = np.repeat(A, S, axis=0)
            rows, roots = _roots_r1(A)
            X = np.empty((len(rows), m))
            X[:, ycols] = Y[rows]
            X[:, i] = roots
        else:
            X, rows, nd, na = _newton_r(prob, J, ycols, Y, half, rng, newton_seeds)
            diverged += nd
            attempts += na
        if len(rows):
            keep = _in_region(X, region, coords, half, R)
            jstar, Mv = prob.chart_of(X)
            keep &= jstar == jidx
            w = 1.0 / np.abs(Mv[keep, jidx])
            if weight is not None:
                w = w * weight(X[keep])
            np.add.at(contrib, rows[keep], w)
            if collect is not None:
                collect.append(X[keep])
        contrib *= vol
        est = float(contrib.mean()) if S else 0.0
        se2 = float(contrib.var(ddof=1) / S) if S > 1 else 0.0
        charts[J] = est
        total += est
        var += se2
    if attempts and diverged / attempts > divergence_threshold:
        flags.append(f"NewtonDivergence: {diverged}/{attempts} seeds failed")
        if strict:
            raise NewtonDivergence(flags[-1])
    return MeasureEstimate(total, 0, error_bound=math.sqrt(var), charts=charts,
                           normalization=REAL_NORMALIZATION, stderr=math.sqrt(var),
                           flags=flags, bezout=F.bezout)


def _newton_r(prob: _RealProblem, J, ycols, Y, half, rng, nseeds, iters: int = 40,
              tol: float = 1e-11):
    """Seeded Newton for the r x r system in the chart variables, per sample."""
    m, r = prob.m, prob.r
    S = len(Y)
    X = np.empty((S * nseeds, m))
    X[:, ycols] = np.repeat(Y, nseeds, axis=0)
    X[:, list(J)] = (2 * rng.random((S * nseeds, r)) - 1) * half[list(J)]
    rows = np.repeat(np.arange(S), nseeds)
    for _ in range(iters):
        Fv = prob.Fsys(X) - prob.c
        Jm = prob.jac(X).reshape(-1, r, m)[:, :, list(J)]
        try:
            step = np.linalg.solve(Jm, Fv[..., None])[..., 0]
        except np.linalg.LinAlgError:
            det = np.linalg.det(Jm)
            good = np.abs(det) > 1e-300
            step = np.zeros_like(Fv)
            step[good] = np.linalg.solve(Jm[good], Fv[good][..., None])[..., 0]
        X[:, list(J)] -= step
        X = np.where(np.isfinite(X), X, 1e300)
    res = np.max(np.abs(prob.Fsys(X) - prob.c), axis=1)
    conv = res < tol * (1 + np.max(np.abs(X), axis=1))
    # a failed seed only counts as divergence where the sample has a root
    solved = np.zeros(S, dtype=bool)
    solved[rows[conv]] = True
    live = solved[rows]
    n_div = int((live & ~conv).sum())
    n_att = int(live.sum())
    X, rows = X[conv], rows[conv]
    # deduplicate roots reached from several seeds
    key = np.round(X[:, list(J)], 8)
    _, first = np.unique(np.column_stack([rows, key]), axis=0, return_index=True)
    first = np.sort(first)
    return X[first], rows[first], n_div, n_att


def real_annulus_series(F: PolyMap, c, js: Sequence[int], samples: int, seed: int = 0,
                        coords=None, extent_factor: float = 2.0, base: float = 2.0):
    """Measures of the annuli base^-(j+1) <= |x|_coords <= base^-j."""
    out = []
    for j in js:
        R = base ** (-j)
        reg = Region(radius=R, inner_radius=R / base, coords=coords,
                     extent=extent_factor * R if coords is not None else None)
        out.append(real_fiber_measure(F, c, reg, samples, seed + j))
    return out


def real_growth_series(F: PolyMap, c, t_max: int, samples: int, seed: int = 0,
                       base: float = 2.0) -> GrowthSeries:
    """mu(B_R) for R = base^t, t = 0..t_max, as B_1 plus annuli."""
    first = real_fiber_measure(F, c, Region(radius=1.0), samples, seed)
    ests = [first]
    vals = [first.value]
    for t in range(1, t_max + 1):
        a = real_fiber_measure(F, c, Region(radius=base ** t, inner_radius=base ** (t - 1)),
                               samples, seed + t)
        ests.append(a)
        vals.append(vals[-1] + a.value)
    ts = list(range(t_max + 1))
    window = (1, t_max) if t_max >= 2 else (0, t_max)
    slope, icpt, resid = fit_log_slope(ts, vals, base, window)
    ref = F.m - F.r
    return GrowthSeries(ts, vals, slope, icpt, ref, slope - ref, resid, base, window, ests)
