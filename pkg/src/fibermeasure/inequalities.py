"""Empirical probes: Lojasiewicz-type exponent fits, gradient lower bounds,
critical cells and values, stability windows, and the worked examples.

Exponent fits use the lower envelope of the log-log data.  A linear program
chooses (log C, alpha, beta) maximizing the summed fitted values subject to
the fitted line lying below every sample; C is then reset to the exact
minimum ratio, so a fit holds on every sample it was computed from.
Ultrametric data are integers in log_q units, the exponents are
rationalized and every check is exact.  Real data use natural logs and are
labelled "sampled".
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .errors import BudgetExceeded, EmptyLocus, StabilityUnknown
from .fields import LaurentScalar, PadicScalar, valuation_rational
from .forms import build_norm_form
from .lift import _rescale_to_ring, dist_to_zero, zero_cells
from .measure import _Prepared, _as_vector, _run_engine
from .poly import (MultiPoly, PolyMap, chart_indices, compose, determinant, euler_residual,
                   evaluate, partial)
from .residues import LaurentRing, PadicRing, PolySystem

FIT_METHOD = ("lower-envelope LP on log data (maximize summed fitted values below every "
              "sample), C = exact minimum ratio")
STABLE = "stably-non-critical-at-resolution"
INCONCLUSIVE = "inconclusive"


# ------------------------------------------------------------------ fitting


@dataclass
class ExponentFit:
    """|f| >= C dist^alpha / max(1, |x|)^beta, stored in log units.

    Each row is (w, u, s) = (log|f|, log dist, log max(1, |x|)); u is None
    in the empty-locus branch.  log_C is in base `base`.
    """

    kind: str
    alpha: Fraction | float | None
    beta: Fraction | float | None
    log_C: Fraction | float
    base: float
    rows: list
    points: list
    label: str
    branch: str = "zero-locus"
    margin: Fraction | float = 0
    residual: float = 0.0
    flags: list = field(default_factory=list)
    method: str = FIT_METHOD
    skipped: int = 0

    @property
    def C(self) -> float:
        return float(self.base) ** float(self.log_C)

    def slack(self, row):
        w, u, s = row
        a = self.alpha or 0
        b = self.beta or 0
        return w - self.log_C - (a * u if u is not None else 0) + b * s

    def violation_rate(self, rows) -> float:
        if not rows:
            return 0.0
        tol = 0 if self.label == "exact" else 1e-9
        bad = sum(1 for row in rows if self.slack(row) < -tol)
        return bad / len(rows)

    def to_dict(self) -> dict:
        def fmt(v):
            return str(v) if isinstance(v, Fraction) else v

        return {
            "kind": self.kind,
            "alpha": fmt(self.alpha),
            "beta": fmt(self.beta),
            "log_C": fmt(self.log_C),
            "C": self.C,
            "base": self.base,
            "branch": self.branch,
            "label": self.label,
            "margin": fmt(self.margin),
            "residual": self.residual,
            "samples": len(self.rows),
            "skipped": self.skipped,
            "flags": list(self.flags),
            "method": self.method,
        }

    def csv_rows(self):
        """(point..., |f|, dist, |x|) per sample."""
        out = []
        b = float(self.base)
        for pt, (w, u, s) in zip(self.points, self.rows):
            out.append(list(pt) + [b ** float(w), None if u is None else b ** float(u),
                                   b ** float(s)])
        return out


def fit_envelope(rows, use_alpha: bool, use_beta: bool, exact: bool, eps: float = 1e-6):
    """Return (alpha, beta, log_C, residual) for the lower envelope of rows."""
    if not rows:
        raise ValueError("no samples to fit")
    W = np.array([float(w) for w, _, _ in rows])
    U = np.array([0.0 if u is None else float(u) for _, u, _ in rows])
    S = np.array([float(s) for _, _, s in rows])
    n = len(rows)
    cost = np.array([-1.0, -U.mean() + eps, S.mean() + eps])
    A = np.column_stack([np.ones(n), U, -S])
    bounds = [(None, None), (0, None) if use_alpha else (0, 0), (0, None) if use_beta else (0, 0)]
    res = linprog(cost, A_ub=A, b_ub=W, bounds=bounds, method="highs")
    if res.status != 0:
        raise ValueError(f"envelope fit failed: {res.message}")
    _, a, b = res.x
    if exact:
        a = Fraction(a).limit_denominator(64) if use_alpha else None
        b = Fraction(b).limit_denominator(64) if use_beta else None
        aa, bb = a or 0, b or 0
        gaps = [Fraction(w) - aa * Fraction(u if u is not None else 0) + bb * Fraction(s)
                for w, u, s in rows]
    else:
        a = max(float(a), 0.0) if use_alpha else None
        b = max(float(b), 0.0) if use_beta else None
        aa, bb = a or 0.0, b or 0.0
        gaps = list(W - aa * U + bb * S)
    log_C = min(gaps)
    residual = float(np.mean([float(g - log_C) for g in gaps]))
    return a, b, log_C, residual


def _finish(kind, rows, points, label, base, use_alpha, use_beta, branch, flags, skipped):
    exact = label == "exact"
    a, b, lc, resid = fit_envelope(rows, use_alpha, use_beta, exact)
    fit = ExponentFit(kind, a, b, lc, base, rows, points, label, branch, 0, resid,
                      list(flags), skipped=skipped)
    fit.margin = min(fit.slack(r) for r in rows)
    return fit


def _validated(kind, draw, label, base, use_alpha, use_beta, exhaustive, max_refits=3):
    """Fit, then check on a fresh sample; refit on the union when >= 1% violate."""
    rows, pts, branch, flags, skipped = draw(0)
    fit = _finish(kind, rows, pts, label, base, use_alpha, use_beta, branch, flags, skipped)
    if exhaustive:
        fit.flags.append("exhaustive sample: no fresh-sample validation needed")
        return fit
    for k in range(1, max_refits + 1):
        r2, p2, _, _, s2 = draw(k)
        rate = fit.violation_rate(r2)
        if rate < 0.01:
            fit.flags.append(f"fresh-sample violation rate {rate:.4f}")
            return fit
        rows, pts = rows + r2, pts + p2
        fit = _finish(kind, rows, pts, label, base, use_alpha, use_beta, branch,
                      flags + [f"refit {k}: fresh-sample violation rate {rate:.4f}"],
                      skipped + s2)
    return fit


# ------------------------------------------------------------ ultrametric


def _f_valuation(f: MultiPoly, ring, point, W: int) -> float:
    """v(f(x)) for an integral residue point (capped at W for Laurent rings)."""
    if ring.kind == "padic":
        return valuation_rational(evaluate(f, [Fraction(int(a)) for a in point]), ring.p)
    vals = ring.eval(PolySystem([f]), np.array([point], dtype=object), W)
    v = int(ring.valuations(vals, W)[0][0])
    return math.inf if v >= W else v


def _residue_sample(rng, q: int, depth: int, m: int, samples: int, primitive: bool = False):
    """All residues mod P^depth (or the primitive ones) when few, else a random sample."""
    M = q ** depth
    total = M ** m
    if total <= samples:
        pts = [tuple(p) for p in itertools.product(range(M), repeat=m)]
        if primitive:
            pts = [p for p in pts if any(v % q for v in p)]
        return pts, True
    pts = []
    while len(pts) < samples:
        p = tuple(int(v) for v in rng.integers(0, M, size=m))
        if primitive and not any(v % q for v in p):
            continue
        pts.append(p)
    return pts, False


def h1_probe(f: MultiPoly, ring=None, depth: int = 4, samples: int = 400, seed: int = 0,
             max_depth: int | None = None) -> ExponentFit:
    """Fit |f(x)| >= C dist(x, Z(f))^alpha over x in R^m."""
    ring = ring or PadicRing(5)
    max_depth = max_depth or depth + 4
    W = 2 * max_depth + 2
    g = _rescale_to_ring(f, ring, 0)
    q = ring.q
    state = {"branch": None}

    def draw(k):
        rng = np.random.default_rng(seed + 7919 * k)
        pts, _ = _residue_sample(rng, q, depth, f.m, samples)
        rows, used, skipped, upper = [], [], 0, 0
        for x in pts:
            vf = _f_valuation(f, ring, x, W)
            if state["branch"] == "empty-locus":
                rows.append((-Fraction(vf), None, 0))
                used.append(x)
                continue
            try:
                d = dist_to_zero(list(x), g, ring, max_depth)
            except EmptyLocus:
                if rows:
                    skipped += 1
                    continue
                state["branch"] = "empty-locus"
                rows.append((-Fraction(vf), None, 0))
                used.append(x)
                continue
            state["branch"] = state["branch"] or "zero-locus"
            if d.level == math.inf:
                skipped += 1  # on Z(f): the inequality holds trivially
                continue
            upper += not d.exact
            rows.append((-Fraction(vf), -Fraction(d.level), 0))
            used.append(x)
        flags = [f"{upper} distances are upper bounds (resolution floor)"] if upper else []
        return rows, used, state["branch"], flags, skipped

    exhaustive = q ** (depth * f.m) <= samples
    rows0 = draw(0)
    use_alpha = rows0[2] != "empty-locus"
    return _validated("h1", lambda k: rows0 if k == 0 else draw(k), "exact", q, use_alpha, False,
                      exhaustive)


def h2_probe(f: MultiPoly, ring=None, t_max: int = 3, samples: int = 200, depth: int = 3,
             seed: int = 0, max_depth: int | None = None) -> ExponentFit:
    """Fit |f(x)| >= C dist^alpha / max(1, |x|)^beta over |x| <= q^t_max.

    ring="real" samples max-norm shells 2^(t-1) < |x| <= 2^t instead.
    """
    if ring == "real":
        return _h2_real(f, t_max, samples, seed)
    ring = ring or PadicRing(5)
    if ring.kind != "padic":
        raise NotImplementedError("h2_probe supports the p-adic and real backends")
    p, q, m = ring.p, ring.q, f.m
    T = t_max
    max_depth = max_depth or depth + T + 4
    gT = _rescale_to_ring(f, ring, T)
    tree = zero_cells(gT, ring, min(max_depth, depth + T))
    empty = not tree.certified and not tree.unresolved
    branch = "empty-locus" if empty else "zero-locus"
    flags = [f"no zero of f within radius q^{T}"] if empty else []

    def draw(k):
        rng = np.random.default_rng(seed + 7919 * k)
        rows, used, skipped, upper = [], [], 0, 0
        for t in range(0, T + 1):
            pts, _ = _residue_sample(rng, q, depth, m, samples, primitive=t > 0)
            for u in pts:
                x = [Fraction(v, p ** t) for v in u]
                vf = valuation_rational(evaluate(f, x), p)
                s = t if t > 0 else 0
                if empty:
                    rows.append((-Fraction(vf), None, s))
                    used.append(tuple(x))
                    continue
                uT = [v * p ** (T - t) for v in u]
                try:
                    d = dist_to_zero(uT, gT, ring, max_depth)
                except EmptyLocus:
                    skipped += 1
                    continue
                if d.level == math.inf:
                    skipped += 1
                    continue
                upper += not d.exact
                rows.append((-Fraction(vf), Fraction(T) - Fraction(d.level), s))
                used.append(tuple(x))
        fl = flags + ([f"{upper} distances are upper bounds"] if upper else [])
        return rows, used, branch, fl, skipped

    exhaustive = q ** (depth * m) <= samples
    return _validated("h2", draw, "exact", q, not empty, True, exhaustive)


def lemma_distance_check(fit: ExponentFit, witness_norm: float = 1.0) -> bool:
    """dist(x, Z(f)) <= A |x| with A = 1 + max(1, |witness zero|) on |x| >= 1 samples."""
    A = 1 + max(1.0, witness_norm)
    b = float(fit.base)
    for w, u, s in fit.rows:
        if u is None or s <= 0:
            continue
        if b ** float(u) > A * b ** float(s) * (1 + 1e-12):
            return False
    return True


# ------------------------------------------------------------------ real


def _project_real(fs, gs, X, iters: int = 60):
    """Gradient-Newton projection of each row of X onto {f = 0}."""
    Y = X.copy()
    for _ in range(iters):
        fv = fs(Y)[:, 0]
        G = gs(Y)
        n2 = np.sum(G * G, axis=1)
        step = np.where(n2 > 1e-300, fv / np.where(n2 > 1e-300, n2, 1), 0.0)
        Y = Y - step[:, None] * G
        Y = np.where(np.isfinite(Y), Y, 1e300)
    fv = np.abs(fs(Y)[:, 0])
    scale = 1.0 + np.max(np.abs(Y), axis=1) ** max(1, 1)
    ok = fv < 1e-10 * scale
    return Y, ok


def _shell(rng, n: int, m: int, lo: float, hi: float):
    out = []
    while sum(len(a) for a in out) < n:
        X = (2 * rng.random((2 * n, m)) - 1) * hi
        nr = np.max(np.abs(X), axis=1)
        out.append(X[nr > lo] if lo > 0 else X)
    return np.concatenate(out)[:n]


def _h2_real(f: MultiPoly, t_max: int, samples: int, seed: int) -> ExponentFit:
    from .realmeasure import RealSystem

    fs = RealSystem([f])
    gs = RealSystem([partial(f, i) for i in range(f.m)])

    def draw(k):
        rng = np.random.default_rng(seed + 7919 * k)
        rows, used, skipped, conv_any = [], [], 0, False
        pending = []
        for t in range(0, t_max + 1):
            lo, hi = (0.0, 1.0) if t == 0 else (2.0 ** (t - 1), 2.0 ** t)
            X = _shell(rng, samples, f.m, lo, hi)
            Y, ok = _project_real(fs, gs, X)
            conv_any |= bool(ok.any())
            fv = np.abs(fs(X)[:, 0])
            nr = np.max(np.abs(X), axis=1)
            dist = np.max(np.abs(X - Y), axis=1)
            pending.append((X, fv, nr, dist, ok))
        for X, fv, nr, dist, ok in pending:
            for i in range(len(X)):
                if fv[i] == 0:
                    skipped += 1
                    continue
                s = math.log(max(1.0, nr[i]))
                if not conv_any:
                    rows.append((math.log(fv[i]), None, s))
                elif ok[i] and dist[i] > 0:
                    rows.append((math.log(fv[i]), math.log(dist[i]), s))
                else:
                    skipped += 1
                    continue
                used.append(tuple(float(v) for v in X[i]))
        branch = "zero-locus" if conv_any else "empty-locus"
        return rows, used, branch, ["Newton projection distances (upper bounds)"], skipped

    first = draw(0)
    return _validated("h2", lambda k: first if k == 0 else draw(k), "sampled", math.e,
                      first[2] == "zero-locus", True, False)


# ------------------------------------------------------ gradient bounds


def _real_minor_norms(F: PolyMap, X: np.ndarray) -> np.ndarray:
    from .realmeasure import _RealProblem

    prob = _RealProblem(F, [0] * F.r)
    return np.max(np.abs(prob.minors(X)), axis=1)


def witness_remark(ns: Sequence[float]) -> np.ndarray:
    """Points (n, -(2n)^(1/3), 1/n) on x^2 z^2 + y^3 z = -1."""
    ns = np.asarray(ns, dtype=np.float64)
    return np.column_stack([ns, -np.cbrt(2 * ns), 1.0 / ns])


def gradient_lower_bound(F: PolyMap, c, ring=None, ts: Sequence[int] = (0, 1, 2, 3),
                         samples: int = 2000, window: int = 1, depth: int = 6, seed: int = 0,
                         witness: np.ndarray | None = None, stability_depth: int = 3,
                         strict: bool = False) -> ExponentFit:
    """Fit |grad_r F(x)| >= C / |x|^gamma over fiber points with |x| >= 1.

    Fiber points come from the measure engine (ultrametric: certified cells
    on the spheres |x| = q^t, where |d_J F| is exact) or from the real
    sampler on the shells 2^(t-1) < |x| <= 2^t, for c and for two values
    inside the window |c' - c| < q^-window (2^-window over R).  The fitted
    exponent is reported as beta.
    """
    flags = []
    if ring == "real":
        return _gradient_real(F, c, ts, samples, window, seed, witness, flags)
    ring = ring or PadicRing(5)
    c = _as_vector(c, F.r)
    verdict = stability_probe(F, c, window, stability_depth, ring)
    if verdict.verdict != STABLE:
        flags.append("StabilityUnknown: stability probe inconclusive")
        if strict:
            raise StabilityUnknown(flags[-1])
    step = Fraction(ring.p) ** (window + 1) if ring.kind == "padic" else None
    values = [c]
    if step is not None:
        values += [[c[0] + step] + c[1:], [c[0] - step] + c[1:]]
    rows, pts = [], []
    rng = np.random.default_rng(seed)
    for cv in values:
        for t in ts:
            prep = _Prepared(F, cv, t, ring)
            if prep.degenerate:
                continue
            got: list = []
            _run_engine(prep, True, 1, depth, collect=got)
            if len(got) > samples:
                idx = rng.choice(len(got), samples, replace=False)
                got = [got[i] for i in sorted(idx)]
            shift = sum(prep.s) - F.r * t
            for _, _, u, d in got:
                v_grad = d - shift
                rows.append((-Fraction(v_grad), None, Fraction(t)))
                pts.append(u)
    if not rows:
        raise EmptyLocus("no fiber points found on the requested spheres")
    fit = _finish("gradient", rows, pts, "exact", ring.q, False, True, "zero-locus", flags, 0)
    return fit


def _gradient_real(F, c, ts, samples, window, seed, witness, flags):
    from .measure import Region
    from .realmeasure import _RealProblem, real_fiber_measure

    c = [float(v) for v in (c if isinstance(c, (list, tuple)) else [c])]
    flags.append("stability not probed on the real backend")
    values = [c]
    if window is not None:
        eps = 2.0 ** (-window - 1)
        values += [[c[0] + eps] + c[1:], [c[0] - eps] + c[1:]]
    chunks = []
    for k, cv in enumerate(values):
        for t in ts:
            reg = Region(radius=2.0 ** t, inner_radius=2.0 ** (t - 1) if t > 0 else None)
            got: list = []
            real_fiber_measure(F, cv, reg, samples, seed + 101 * k + t, collect=got)
            chunks.extend(got)
    X = np.concatenate(chunks) if chunks else np.zeros((0, F.m))
    if witness is not None:
        wt = np.asarray(witness, dtype=np.float64).reshape(-1, F.m)
        prob = _RealProblem(F, c)
        res = np.abs(prob.Fsys(wt) - prob.c)
        if np.any(res > 1e-9 * (1 + np.abs(prob.c))):
            raise ValueError("witness points are not on the fiber")
        X = np.concatenate([X, wt])
    nr = np.max(np.abs(X), axis=1) if len(X) else np.zeros(0)
    X = X[nr >= 1.0]
    if len(X) == 0:
        raise EmptyLocus("no fiber points with |x| >= 1")
    g = _real_minor_norms(F, X)
    nr = np.max(np.abs(X), axis=1)
    keep = g > 0
    rows = [(math.log(a), None, math.log(b)) for a, b in zip(g[keep], nr[keep])]
    pts = [tuple(map(float, x)) for x in X[keep]]
    return _finish("gradient", rows, pts, "sampled", math.e, False, True, "zero-locus", flags,
                   int((~keep).sum()))


@dataclass
class EulerReport:
    holds: bool
    points: int
    min_ratio: Fraction | float
    constant: float
    label: str
    note: str = ""

    def to_dict(self):
        return {"holds": self.holds, "points": self.points,
                "min_ratio": str(self.min_ratio) if isinstance(self.min_ratio, Fraction)
                else self.min_ratio, "constant": self.constant, "label": self.label,
                "note": self.note}


def euler_bound_check(f: MultiPoly, c, ring=None, ts: Sequence[int] = (0, 1, 2, 3),
                      depth: int = 6, samples: int = 2000, seed: int = 0) -> EulerReport:
    """Check |d c| <= C |x| |grad f(x)| at fiber points (C = 1 ultrametric, m over R).

    min_ratio is min |x| |grad f| / |d c| (log_q exponent when exact).
    """
    if not euler_residual(f).is_zero():
        raise ValueError("f must be homogeneous")
    if Fraction(c) == 0:
        raise ValueError("c must be nonzero")
    d = int(f.degree)
    F = PolyMap([f])
    if ring == "real":
        from .measure import Region
        from .realmeasure import real_fiber_measure

        chunks = []
        for t in ts:
            reg = Region(radius=2.0 ** t, inner_radius=2.0 ** (t - 1) if t > 0 else None)
            got: list = []
            real_fiber_measure(F, float(c), reg, samples, seed + t, collect=got)
            chunks.extend(got)
        X = np.concatenate(chunks)
        g = _real_minor_norms(F, X)
        nr = np.max(np.abs(X), axis=1)
        ratio = nr * g / abs(d * float(c))
        C = float(f.m)
        ok = bool(np.all(C * ratio >= 1 - 1e-9))
        return EulerReport(ok, len(X), float(ratio.min()), C, "sampled",
                           "|sum x_i df/dx_i| <= m |x| |grad f| in the max norm")
    ring = ring or PadicRing(5)
    vdc = ring.valuation_of(Fraction(d) * Fraction(c)) if ring.kind == "padic" else (
        math.inf if d % ring.p == 0 else ring.valuation_of(Fraction(c)))
    worst = None
    n = 0
    for t in ts:
        prep = _Prepared(F, [Fraction(c)], t, ring)
        got: list = []
        _run_engine(prep, True, 1, depth, collect=got)
        for _, _, _, dl in got[:samples]:
            v_grad = dl - (prep.s[0] - t)
            # log_q(|x| |grad f| / |d c|) = t - v_grad + v(dc)
            e = (t - v_grad + vdc) if vdc != math.inf else math.inf
            worst = e if worst is None else min(worst, e)
            n += 1
    holds = n > 0 and worst is not None and worst >= 0
    return EulerReport(holds, n, worst if worst is not None else math.inf, 1.0, "exact",
                       "ultrametric Euler identity: |d c| = |sum x_i df/dx_i| <= |x| |grad f|")


# ---------------------------------------------------- critical cells


@dataclass
class StabilityVerdict:
    c: list
    s: int
    depth: int
    verdict: str
    hits: list = field(default_factory=list)

    def to_dict(self):
        return {"c": [str(v) for v in self.c], "s": self.s, "depth": self.depth,
                "verdict": self.verdict, "hits": [list(h) for h in self.hits[:10]]}


@dataclass
class CriticalReport:
    """Cells mod P^depth where every r x r minor vanishes mod P^depth."""

    depth: int
    q: int
    m: int
    r: int
    route: str
    active: tuple
    free: tuple
    active_cells: list
    levels: dict
    cv_cells: set | None = None
    stability: list = field(default_factory=list)

    @property
    def n_cells(self) -> int:
        return len(self.active_cells) * self.q ** (self.depth * len(self.free))

    def iter_cells(self):
        M = self.q ** self.depth
        for a in self.active_cells:
            for rest in itertools.product(range(M), repeat=len(self.free)):
                x = [0] * self.m
                for i, v in zip(self.active, a):
                    x[i] = v
                for i, v in zip(self.free, rest):
                    x[i] = v
                yield tuple(x)

    def to_dict(self, limit: int = 200):
        cells = list(itertools.islice(self.iter_cells(), limit))
        return {
            "depth": self.depth, "q": self.q, "route": self.route,
            "critical_cells": self.n_cells, "levels": self.levels,
            "active_variables": list(self.active), "free_variables": list(self.free),
            "cells_sample": [list(c) for c in cells],
            "critical_value_cells": None if self.cv_cells is None else len(self.cv_cells),
            "cv_sample": None if self.cv_cells is None else [list(v) for v in
                                                              sorted(self.cv_cells)[:limit]],
            "stability": [v.to_dict() for v in self.stability],
            "note": "critical cells lie in R^m; critical-value cells over-approximate",
        }


def _minor_polys(F: PolyMap, ring, tvar):
    xs = [i for i in range(F.m) if i != tvar]
    r = F.r
    char = ring.char
    parts = [[partial(f, j, char) for j in xs] for f in F.polys]
    charts = chart_indices(len(xs), r)
    return xs, [determinant([[parts[i][j] for j in J] for i in range(r)]) for J in charts]


def _codes(arr, dtype):
    return np.asarray(arr, dtype=dtype)


def critical_cells(F: PolyMap, ring=None, depth: int = 3, tvar: int | None = None,
                   route: str = "norm", budget: int = 5 * 10 ** 6,
                   values: bool = True) -> CriticalReport:
    """Critical cells at resolution and their value cells.

    route="norm" descends on g = nu(grad_r F) for the unramified norm form
    nu on C(m, r) variables, keeping cells with v(g) >= R k at level k.
    route="minors" keeps cells where every minor vanishes mod P^k; the two
    agree at every level.  Variables absent from every minor are free and
    are enumerated only for the value cells.
    """
    ring = ring or PadicRing(5)
    q = ring.q
    xs, minors = _minor_polys(F, ring, tvar)
    m = len(xs)
    full_m = F.m
    R = len(minors)
    pos = {v: i for i, v in enumerate(xs)}
    used = set()
    for g in minors:
        for e in g.terms:
            used.update(pos[j] for j in range(full_m) if j != tvar and e[j])
    active = tuple(sorted(used))
    free = tuple(i for i in range(m) if i not in used)
    if route == "norm":
        if ring.kind == "laurent" and math.gcd(R, ring.e) != 1:
            raise ValueError("norm route needs gcd(C(m,r), e) = 1; use route='minors'")
        nu = build_norm_form(ring.p, R).nu if R > 1 else None
        g = compose(nu, minors) if nu is not None else minors[0]
        system = PolySystem([g], tvar)
        weight = R
    elif route == "minors":
        system = PolySystem(minors, tvar)
        weight = 1
    else:
        raise ValueError(f"unknown route {route!r}")
    dtype = np.int64 if q ** (weight * depth + 1) < (1 << 62) else object
    cells = np.zeros((1, m), dtype=dtype)
    levels = {}
    for k in range(0, depth + 1):
        if k > 0 and len(cells):
            n = weight * k
            vals = np.asarray(ring.eval(system, cells, n))
            keep = np.all(vals == 0, axis=1)
            cells = cells[keep]
        levels[k] = len(cells)
        if k == depth or not len(cells):
            break
        digits = np.array(list(itertools.product(range(q), repeat=len(active))), dtype=dtype)
        if len(cells) * len(digits) > budget:
            raise BudgetExceeded(f"critical descent exceeds {budget} cells at level {k + 1}")
        step = np.zeros((len(digits), m), dtype=dtype)
        if active:
            step[:, list(active)] = digits * q ** k
        cells = (np.repeat(cells, len(digits), axis=0) + np.tile(step, (len(cells), 1)))
    for k in range(len(levels), depth + 1):
        levels[k] = 0
    act_cells = [tuple(int(row[i]) for i in active) for row in cells]
    rep = CriticalReport(depth, q, m, F.r, route, active, free, sorted(set(act_cells)), levels)
    if values:
        rep.cv_cells = _value_cells(F, ring, tvar, rep, budget)
    return rep


def _value_cells(F, ring, tvar, rep: CriticalReport, budget: int, chunk: int = 1 << 15):
    if rep.n_cells > budget:
        raise BudgetExceeded(f"{rep.n_cells} critical cells exceed the budget {budget}")
    system = PolySystem(list(F.polys), tvar)
    N = rep.depth
    dtype = np.int64 if rep.q ** (N + 1) < (1 << 62) else object
    out = set()
    buf = []

    def flush():
        if not buf:
            return
        vals = np.asarray(ring.eval(system, np.array(buf, dtype=dtype), N))
        for row in np.unique(vals.astype(dtype), axis=0) if dtype is not object else vals:
            out.add(tuple(int(v) for v in row))
        buf.clear()

    for x in rep.iter_cells():
        buf.append(x)
        if len(buf) >= chunk:
            flush()
    flush()
    return out


def _value_code(ring, v, N: int):
    """Residue code of a value mod P^N, or None when v is not integral."""
    if isinstance(v, (PadicScalar, LaurentScalar)):
        if v.valuation() < 0:
            return None
        return ring.from_scalar(v, N) % ring.modulus(N)
    v = Fraction(v)
    if ring.valuation_of(v) < 0:
        return None
    return ring.coef_residue(v, 0, N)


def stability_probe(F: PolyMap, c, s: int, depth: int = 3, ring=None,
                    report: CriticalReport | None = None, tvar: int | None = None
                    ) -> StabilityVerdict:
    """Does the open ball |c' - c| < q^-s meet a critical-value cell?

    The ball is c + P^(s+1); it meets the cell v + P^N iff c = v mod
    P^min(s+1, N).  Never a negative proof: a hit is only inconclusive.
    """
    ring = ring or PadicRing(5)
    if s < 0:
        raise ValueError("s must be >= 0")
    if isinstance(c, (int, Fraction, str, PadicScalar, LaurentScalar)):
        c = [c]
    c = list(c)
    if report is None:
        report = critical_cells(F, ring, depth, tvar)
    N = report.depth
    if report.cv_cells is None:
        report.cv_cells = _value_cells(F, ring, tvar, report, 5 * 10 ** 6)
    k = min(s + 1, N)
    Mk = ring.modulus(k)
    codes = [_value_code(ring, v, N) for v in c]
    if any(x is None for x in codes):
        verdict = StabilityVerdict(c, s, N, STABLE, [])
    else:
        target = tuple(x % Mk for x in codes)
        hits = [v for v in report.cv_cells if tuple(x % Mk for x in v) == target]
        verdict = StabilityVerdict(c, s, N, STABLE if not hits else INCONCLUSIVE, sorted(hits))
    report.stability.append(verdict)
    return verdict


# --------------------------------------------------------- the examples


def deligne_first(p: int) -> PolyMap:
    """X^(p+1) + X^p Y + Y^p."""
    X, Y = MultiPoly.var(0, 2), MultiPoly.var(1, 2)
    return PolyMap([X ** (p + 1) + X ** p * Y + Y ** p])


def deligne_second(p: int, n: int | None = None) -> tuple[PolyMap, int]:
    """y^n + sum_i t^(i-1) x_i^p on (y, x_1..x_p); the last variable is t."""
    if n is None:
        n = next(k for k in itertools.count(2) if k % p)
    m = p + 2
    t = MultiPoly.var(m - 1, m)
    f = MultiPoly.var(0, m) ** n
    for i in range(1, p + 1):
        f = f + t ** (i - 1) * MultiPoly.var(i, m) ** p
    return PolyMap([f]), m - 1


@dataclass
class DeligneRow:
    N: int
    image_cells: int
    total_cells: int
    density: Fraction
    formula: int
    via_critical: int | None

    def to_dict(self):
        return {"N": self.N, "image_cells": self.image_cells, "total_cells": self.total_cells,
                "density": str(self.density), "formula": self.formula,
                "via_critical_cells": self.via_critical}


@dataclass
class DeligneTable:
    p: int
    rows: list
    stability: list = field(default_factory=list)

    @property
    def strictly_decreasing(self) -> bool:
        d = [r.density for r in sorted(self.rows, key=lambda r: r.N)]
        return all(b < a for a, b in zip(d, d[1:]))

    @property
    def matches(self) -> bool:
        return all(r.image_cells == r.formula and r.via_critical in (None, r.image_cells)
                   for r in self.rows)

    @property
    def no_stable_window(self) -> bool:
        return all(v.verdict == INCONCLUSIVE for v in self.stability)

    def to_dict(self):
        return {"p": self.p, "rows": [r.to_dict() for r in self.rows],
                "strictly_decreasing": self.strictly_decreasing, "matches": self.matches,
                "stability": [v.to_dict() for v in self.stability],
                "no_stable_window": self.no_stable_window}


def frobenius_image_count(p: int, N: int, budget: int = 10 ** 7) -> int:
    """Distinct y^p mod t^N over all y in F_p[t]/t^N (exhaustive)."""
    ring = LaurentRing(p)
    M = ring.modulus(N)
    if M > budget:
        raise BudgetExceeded(f"{M} residues exceed the budget {budget}")
    sys = PolySystem([MultiPoly.var(0, 1) ** p])
    seen = set()
    for start in range(0, M, 1 << 15):
        pts = np.arange(start, min(M, start + (1 << 15)), dtype=np.int64).reshape(-1, 1)
        seen.update(int(v) for v in np.asarray(ring.eval(sys, pts, N))[:, 0])
    return len(seen)


def deligne_example(p: int, Ns: Sequence[int] = (4, 6, 8), budget: int = 5 * 10 ** 6,
                    critical: bool = True, stability_s: Sequence[int] | None = None
                    ) -> DeligneTable:
    """Critical-image densities for X^(p+1) + X^p Y + Y^p over F_p((t)).

    image_cells counts y^p mod t^N exhaustively; via_critical counts the
    value cells of the critical cells found by critical_cells.  Stability is
    probed at c in k^p (c = 0, 1 and t^p) for the first example and at
    c = 1, t, 1 + t for the second example (whose critical image is all of k).
    """
    ring = LaurentRing(p)
    F = deligne_first(p)
    rows, reports = [], {}
    for N in Ns:
        cnt = frobenius_image_count(p, N, budget)
        via = None
        if critical:
            rep = critical_cells(F, ring, N, budget=budget)
            reports[N] = rep
            via = len(rep.cv_cells)
        rows.append(DeligneRow(N, cnt, p ** N, Fraction(cnt, p ** N), p ** (-(-N // p)), via))
    table = DeligneTable(p, rows)
    if critical and reports:
        N = min(reports)
        rep = reports[N]
        ss = list(stability_s) if stability_s is not None else list(range(N))
        for cv in (0, 1, LaurentScalar.t_power(p, p, N + 4)):
            for s in ss:
                table.stability.append(stability_probe(F, cv, s, N, ring, rep))
        F2, tv = deligne_second(p)
        N2 = 3 if p == 2 else 2
        rep2 = critical_cells(F2, ring, N2, tvar=tv, budget=budget)
        one = LaurentScalar.from_rational(1, p, N2 + 4)
        tt = LaurentScalar.t_power(1, p, N2 + 4)
        for cv in (one, tt, one + tt):
            for s in range(N2):
                table.stability.append(stability_probe(F2, cv, s, N2, ring, rep2, tv))
    return table


@dataclass
class ICPReport:
    coefficients: tuple
    label: str
    fit: ExponentFit | None = None
    note: str = ""

    def to_dict(self):
        return {"coefficients": [str(a) for a in self.coefficients], "label": self.label,
                "fit": None if self.fit is None else self.fit.to_dict(), "note": self.note}


def icp_polynomial(a: Sequence) -> MultiPoly:
    """X^2 Z^2 + P4(Y, Z) with P4 = sum a_i Y^(4-i) Z^i, variables (X, Y, Z)."""
    X, Y, Z = (MultiPoly.var(i, 3) for i in range(3))
    f = X ** 2 * Z ** 2
    for i, ai in enumerate(a):
        if Fraction(ai):
            f = f + (Y ** (4 - i) * Z ** i).scale(Fraction(ai))
    return f


def icp_classify(a: Sequence, run_bound: bool = True, samples: int = 1500,
                 ts: Sequence[int] = (0, 1, 2, 3, 4), seed: int = 0, c=1) -> ICPReport:
    """Z^2 + P4 has 0 as an isolated critical point iff a0 or a1 is nonzero."""
    if len(a) != 5:
        raise ValueError("expected five coefficients a0..a4")
    a = tuple(Fraction(v) for v in a)
    if a[0] != 0:
        label, note = "case-I", "gradient bounded below at infinity expected (gamma ~ 0)"
    elif a[1] != 0:
        label, note = "case-II", "potential gamma > 0: data reported without a verdict"
    else:
        return ICPReport(a, "not-ICP", None, "Z^2 divides P4")
    fit = None
    if run_bound:
        F = PolyMap([icp_polynomial(a)])
        fit = gradient_lower_bound(F, [c], "real", ts, samples, window=None, seed=seed)
    return ICPReport(a, label, fit, note)
