"""Batch front end: one subcommand per experiment, JSON report and CSV tables.

Exit codes: 0 success, 1 a configured check (or the suite) failed or the
computation refused its input (e.g. no Hensel contraction), 2 bad
configuration, 3 budget exceeded.
"""

from __future__ import annotations

import argparse
import csv
import itertools
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from fractions import Fraction

from . import kernels
from .config import ExperimentConfig, config_reference
from .errors import BudgetExceeded, CheckFailed, ConfigError, FiberMeasureError
from .measure import (NORMALIZATION, REAL_NORMALIZATION, GrowthSeries, Region,
                      canonical_measure, fit_log_slope, oracle_depth, point_count_density)

SUBCOMMANDS = ("measure", "growth", "density", "lift", "dist", "h1", "h2", "gradbound",
               "critical", "stability", "normform", "deligne", "icp", "suite")
CSV_ROW_CAP = 100_000
# subcommands that do not read [map]
_NO_MAP = {"normform", "deligne", "icp", "suite"}


def _jsonable(v):
    if isinstance(v, Fraction):
        return str(v)
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if hasattr(v, "item") and not isinstance(v, (str, bytes)):
        return v.item()
    return v


def _pmap(fn, items, threads: int):
    """Ordered map; a process pool when threads > 1 (results keep input order)."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(max_workers=threads) as ex:
        return list(ex.map(fn, items))


def emit_plotdata(series: GrowthSeries) -> list[list]:
    """Rows (t, log_q_measure, fitted_line) with a header row first."""
    if series is None or not series.ts:
        raise ValueError("empty series")
    q = float(series.q)
    rows = [["t", "log_q_measure", "fitted_line"]]
    for t, v in zip(series.ts, series.measures):
        lm = math.log(float(v)) / math.log(q) if v > 0 else float("-inf")
        fit = series.slope * t + series.intercept
        rows.append([t, lm, fit])
    return rows


def write_csv(path: str, rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        csv.writer(fh).writerows(rows)


# --------------------------------------------------------------- helpers


def _precision(cfg: ExperimentConfig) -> str:
    fs = cfg.field_spec
    if fs["kind"] == "real":
        return "float64"
    q = fs["p"] ** fs.get("e", 1)
    return f"{fs['kind']} over q = {q}, {fs['N']} digits per scalar"


def _region(cfg: ExperimentConfig) -> Region:
    if cfg.is_real:
        return Region(radius=cfg.get("region", "radius"),
                      inner_radius=cfg.get("region", "inner_radius"))
    return Region(t=cfg.get("region", "t"), inner=cfg.get("region", "inner"))


def _tolerance(cfg):
    tol = cfg.raw("depth", "tolerance")
    return Fraction(tol) if tol else None


def _check_value(cfg, value) -> list[str]:
    exp = cfg.raw("check", "expect")
    if not exp:
        return []
    if isinstance(value, Fraction):
        want = Fraction(exp)
        if value != want:
            return [f"value {value} != expected {want}"]
        return []
    tol = cfg.get("check", "expect_tolerance") or 0.0
    if abs(float(value) - float(exp)) > tol:
        return [f"value {value} differs from {exp} by more than {tol}"]
    return []


def _check_slope(cfg, slope) -> list[str]:
    want = cfg.get("check", "expect_slope")
    if want is None:
        return []
    tol = cfg.get("check", "slope_tolerance")
    if not abs(slope - want) <= tol:
        return [f"slope {slope:.4f} not within {tol} of {want}"]
    return []


def _single(cfg):
    F = cfg.poly_map()
    if F.r != 1:
        raise ConfigError("this subcommand takes a single polynomial")
    return F, F.polys[0]


# ----------------------------------------------------------- subcommands


def cmd_measure(cfg):
    F = cfg.poly_map()
    c = cfg.value(F.r)
    if cfg.is_real:
        from .realmeasure import real_fiber_measure

        est = real_fiber_measure(F, c, _region(cfg), cfg.get("sampling", "samples"),
                                 cfg.get("sampling", "seed"))
    else:
        est = canonical_measure(F, c, _region(cfg), cfg.get("depth", "depth"), cfg.ring(),
                                seed_depth=cfg.get("depth", "seed_depth"),
                                guard=cfg.get("depth", "guard"), tolerance=_tolerance(cfg),
                                node_budget=cfg.get("depth", "budget"))
    return est.to_dict(), {}, _check_value(cfg, est.value), est.error_bound


def _sphere_job(args):
    F, c, s, depth, ring, kw = args
    reg = Region(t=0) if s == 0 else Region(t=s, inner=s - 1)
    return canonical_measure(F, c, reg, depth, ring, **kw)


def cmd_growth(cfg):
    F = cfg.poly_map()
    c = cfg.value(F.r)
    t_max = cfg.get("region", "t_max")
    if cfg.is_real:
        from .realmeasure import real_growth_series

        gs = real_growth_series(F, c, t_max, cfg.get("sampling", "samples"),
                                cfg.get("sampling", "seed"))
        err = math.sqrt(sum((e.stderr or 0.0) ** 2 for e in gs.estimates))
    else:
        ring = cfg.ring()
        kw = {"seed_depth": cfg.get("depth", "seed_depth"), "guard": cfg.get("depth", "guard"),
              "node_budget": cfg.get("depth", "budget")}
        jobs = [(F, c, s, cfg.get("depth", "depth"), ring, kw) for s in range(t_max + 1)]
        ests = _pmap(_sphere_job, jobs, cfg.get("run", "threads"))
        measures, acc = [], Fraction(0)
        for e in ests:
            acc += e.value
            measures.append(acc)
        ts = list(range(t_max + 1))
        window = (1, t_max) if t_max >= 2 else (0, t_max)
        slope, icpt, resid = fit_log_slope(ts, measures, ring.q, window)
        ref = F.m - F.r
        gs = GrowthSeries(ts, measures, slope, icpt, ref, slope - ref, resid, ring.q, window,
                          ests)
        err = sum((e.error_bound for e in ests), Fraction(0))
    out = gs.to_dict()
    alpha = cfg.get("probe", "alpha")
    if alpha is not None:
        from .measure import tempered_report

        out["tempered"] = tempered_report(gs, alpha).to_dict()
    rows = [["t", "measure", "measure_float"]] + [
        [t, str(v), float(v)] for t, v in zip(gs.ts, gs.measures)]
    tables = {"growth.csv": rows, "growth_plot.csv": emit_plotdata(gs)}
    return out, tables, _check_slope(cfg, gs.slope), err


def cmd_density(cfg):
    F = cfg.poly_map()
    c = cfg.value(F.r)
    if cfg.is_real:
        raise ConfigError("density needs an ultrametric backend")
    ring = cfg.ring()
    N = cfg.get("depth", "depth")
    budget = cfg.get("depth", "budget")
    val = point_count_density(F, c, _region(cfg), N, ring, budget=budget)
    out = {"value": val, "value_float": float(val), "N": N,
           "oracle_depth": oracle_depth(F, c, ring, _region(cfg), n_max=N, budget=budget)}
    return out, {}, _check_value(cfg, val), 0


def _backend(cfg):
    fs = cfg.field_spec
    if fs["kind"] == "real":
        return ("real", 0, 0, None)
    return (fs["kind"], fs["p"], fs["N"], fs["p"] ** fs.get("e", 1))


def _show(v):
    if hasattr(v, "to_fraction"):
        try:
            return str(v.to_fraction())
        except FiberMeasureError:
            pass
    if isinstance(v, float):
        return v
    return repr(v)


def cmd_lift(cfg):
    from .lift import hensel_lift
    from .poly import PolyMap, chart_indices, evaluate, jacobian_minor

    F = cfg.poly_map()
    c = cfg.value(F.r)
    G = PolyMap([f - v for f, v in zip(F.polys, c)])
    x0 = cfg.rationals("probe", "point")
    if len(x0) != F.m:
        raise ConfigError(f"[probe] point needs {F.m} coordinates")
    J = tuple(cfg.ints("probe", "chart"))
    if not J:
        # the chart with the largest minor at the start point
        best = None
        for K in chart_indices(F.m, F.r):
            v = abs(evaluate(jacobian_minor(G, K), x0))
            if best is None or v > best[0]:
                best = (v, K)
        J = best[1]
    cert = hensel_lift(G, J, x0, cfg.get("probe", "target"), backend=_backend(cfg))
    digits = cfg.get("probe", "target")
    out = {"point": [_show(v) for v in cert.point], "chart": list(cert.chart),
           "digits": [v.digits(digits) if hasattr(v, "digits") else None for v in cert.point],
           "residual_norm": float(cert.residual_norm), "minor_norm": float(cert.minor_norm),
           "contraction": float(cert.contraction), "iterations": cert.iterations,
           "displacement": None if cert.displacement is None else float(cert.displacement)}
    return out, {}, [], 0


def cmd_dist(cfg):
    from .lift import dist_to_zero

    _, f = _single(cfg)
    if cfg.is_real:
        raise ConfigError("dist needs an ultrametric backend")
    x = cfg.rationals("probe", "point")
    d = dist_to_zero(x, f, cfg.ring(), max_depth=cfg.get("depth", "depth"))
    return {"distance": float(d.norm), "level": d.level, "exact": d.exact}, {}, [], 0


def _fit_tables(fit, name, m):
    head = [f"x{i}" for i in range(m)] + ["abs_f", "dist", "norm_x"]
    return {name: [head] + [[_show(v) if not isinstance(v, (int, float)) else v for v in row]
                            for row in fit.csv_rows()]}


def cmd_h1(cfg):
    from .inequalities import h1_probe

    F, f = _single(cfg)
    if cfg.is_real:
        raise ConfigError("h1 runs on an ultrametric backend")
    fit = h1_probe(f, cfg.ring(), depth=cfg.get("depth", "depth"),
                   samples=cfg.get("sampling", "samples"), seed=cfg.get("sampling", "seed"))
    return fit.to_dict(), _fit_tables(fit, "h1.csv", F.m), [], 0


def cmd_h2(cfg):
    from .inequalities import h2_probe

    F, f = _single(cfg)
    fit = h2_probe(f, cfg.ring(), t_max=cfg.get("region", "t_max"),
                   samples=cfg.get("sampling", "samples"), depth=cfg.get("depth", "depth"),
                   seed=cfg.get("sampling", "seed"))
    return fit.to_dict(), _fit_tables(fit, "h2.csv", F.m), [], 0


def cmd_gradbound(cfg):
    from .inequalities import gradient_lower_bound, witness_remark

    F = cfg.poly_map()
    c = cfg.value(F.r)
    witness = None
    if cfg.raw("probe", "witness") == "remark":
        witness = witness_remark([10.0 ** k for k in range(1, 7)])
    fit = gradient_lower_bound(F, c, cfg.ring(), ts=range(cfg.get("region", "t_max") + 1),
                               samples=cfg.get("sampling", "samples"),
                               window=cfg.get("probe", "window"), depth=cfg.get("depth", "depth"),
                               seed=cfg.get("sampling", "seed"), witness=witness)
    out = fit.to_dict()
    out["gamma"] = out["beta"]
    return out, {}, [], 0


def cmd_critical(cfg):
    from .inequalities import critical_cells

    F = cfg.poly_map()
    if cfg.is_real:
        raise ConfigError("critical runs on an ultrametric backend")
    rep = critical_cells(F, cfg.ring(), depth=cfg.get("depth", "depth"),
                         budget=cfg.get("depth", "budget"))
    head = [f"x{i}" for i in range(F.m)]
    cells = itertools.islice(rep.iter_cells(), CSV_ROW_CAP)
    rows = [head] + [list(map(int, cell)) for cell in cells]
    vals = [[f"c{i}" for i in range(F.r)]] + [list(map(int, v)) for v in
                                              sorted(rep.cv_cells or ())[:CSV_ROW_CAP]]
    return rep.to_dict(), {"critical_cells.csv": rows, "critical_values.csv": vals}, [], 0


def cmd_stability(cfg):
    from .inequalities import stability_probe

    F = cfg.poly_map()
    if cfg.is_real:
        raise ConfigError("stability runs on an ultrametric backend")
    v = stability_probe(F, cfg.value(F.r), cfg.get("probe", "s"),
                        depth=cfg.get("depth", "depth"), ring=cfg.ring())
    return v.to_dict(), {}, [], 0


def cmd_normform(cfg):
    from .forms import build_norm_form, form_norm

    fs = cfg.field_spec
    if fs["kind"] != "padic":
        raise ConfigError("normform is built over Q_p")
    nf = build_norm_form(fs["p"], cfg.get("probe", "degree"))
    out = {"model": _jsonable(nf.model.describe()), "norm_form": str(nf.nu)}
    pt = cfg.rationals("probe", "point")
    if pt:
        if len(pt) != nf.r:
            raise ConfigError(f"[probe] point needs {nf.r} coordinates")
        out["norm_at_point"] = float(form_norm(nf, pt))
    return out, {}, [], 0


def cmd_deligne(cfg):
    from .inequalities import deligne_example

    fs = cfg.field_spec
    if fs["kind"] == "real":
        raise ConfigError("deligne needs a characteristic-p backend")
    tb = deligne_example(fs["p"], tuple(cfg.ints("probe", "truncations")),
                         budget=cfg.get("depth", "budget"))
    d = tb.to_dict()
    rows = [["N", "image_cells", "via_critical", "density"]] + [
        [r.N, r.image_cells, r.via_critical, str(r.density)] for r in tb.rows]
    fails = [] if (tb.matches and tb.strictly_decreasing and tb.no_stable_window) else [
        "critical-image densities do not match or a stable window was found"]
    return d, {"deligne.csv": rows}, fails if cfg.raw("check", "expect") == "pass" else [], 0


def cmd_icp(cfg):
    from .inequalities import icp_classify

    a = cfg.rationals("probe", "icp")
    rep = icp_classify(a, run_bound=True, samples=cfg.get("sampling", "samples"),
                       seed=cfg.get("sampling", "seed"))
    fails = []
    want = cfg.raw("check", "expect_label")
    if want and rep.label != want:
        fails.append(f"label {rep.label} != expected {want}")
    return rep.to_dict(), {}, fails, 0


def _criterion_job(i):
    from .suite import CRITERIA, SuiteContext, run_criterion

    return run_criterion(CRITERIA[i - 1], SuiteContext())


def cmd_suite(cfg):
    from .suite import run_suite

    threads = cfg.get("run", "threads")
    if threads > 1:
        results = _pmap(_criterion_job, range(1, 15), threads)
        for r in results:
            print(r.line(), file=sys.stderr)
    else:
        results = run_suite(echo=lambda s: print(s, file=sys.stderr))
    fails = [f"criterion {r.number} failed" for r in results if not r.passed]
    out = {"criteria": [r.to_dict() for r in results],
           "passed": sum(r.passed for r in results), "total": len(results)}
    rows = [["number", "name", "passed", "seconds", "detail"]] + [
        [r.number, r.name, r.passed, round(r.seconds, 3), r.detail] for r in results]
    return out, {"suite.csv": rows}, fails, 0


HANDLERS = {name: globals()[f"cmd_{name}"] for name in SUBCOMMANDS}


# -------------------------------------------------------------- driver


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI experiment file")
    common.add_argument("--poly", action="append", help="polynomial (repeat for a map)")
    common.add_argument("--c", help="target value, comma-separated")
    common.add_argument("--field", help="padic:p=P,N=D | laurent:p=P,N=D[,e=E] | real")
    common.add_argument("--json", help="write the JSON report to this path")
    common.add_argument("--csv-dir", help="directory for CSV tables")
    common.add_argument("--threads", type=int, help="worker processes")
    common.add_argument("--seed", type=int, help="random seed")
    common.add_argument("--depth", type=int, help="working depth N")
    common.add_argument("--t-max", type=int, help="largest radius exponent")
    common.add_argument("--set", action="append", default=[], metavar="SECTION.KEY=VALUE",
                        help="override any config key")
    ap = argparse.ArgumentParser(prog="fibermeasure", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="cmd", required=True)
    for name in SUBCOMMANDS:
        sub.add_parser(name, parents=[common], help=f"run the {name} experiment")
    sub.add_parser("config-reference", help="print every config key with its default")
    return ap


def load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.from_file(args.config) if args.config else ExperimentConfig.defaults()
    if args.poly:
        cfg.set("map", "polys", ";".join(args.poly))
    simple = [("c", ("value", "c")), ("field", ("field", "spec")), ("json", ("output", "json")),
              ("csv_dir", ("output", "csv_dir")), ("threads", ("run", "threads")),
              ("seed", ("sampling", "seed")), ("depth", ("depth", "depth")),
              ("t_max", ("region", "t_max"))]
    for attr, (s, k) in simple:
        v = getattr(args, attr)
        if v is not None:
            cfg.set(s, k, v)
    for item in args.set:
        key, eq, val = item.partition("=")
        s, dot, k = key.partition(".")
        if not eq or not dot:
            raise ConfigError(f"--set expects SECTION.KEY=VALUE, got {item!r}")
        cfg.set(s.strip(), k.strip(), val)
    return cfg


def run(cmd: str, cfg: ExperimentConfig) -> tuple[dict, int]:
    """Run one subcommand; returns (report, exit status).  Errors propagate."""
    cfg.validate(needs_map=cmd not in _NO_MAP)
    result, tables, fails, err = HANDLERS[cmd](cfg)
    report = {
        "subcommand": cmd,
        "config": cfg.resolved(),
        "normalization": REAL_NORMALIZATION if cfg.is_real else NORMALIZATION,
        "precision": _precision(cfg),
        "depth": cfg.get("depth", "depth"),
        "error_bound": err,
        "backend": kernels.BACKEND,
        "result": result,
        "checks": {"failed": fails, "passed": not fails},
    }
    out_dir = cfg.raw("output", "csv_dir")
    if out_dir and tables:
        os.makedirs(out_dir, exist_ok=True)
        for name, rows in tables.items():
            write_csv(os.path.join(out_dir, name), rows)
        report["csv"] = sorted(tables)
    return _jsonable(report), (1 if fails else 0)


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.cmd == "config-reference":
        sys.stdout.write(config_reference())
        return 0
    try:
        cfg = load_config(args)
        report, status = run(args.cmd, cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except BudgetExceeded as exc:
        print(f"budget exceeded: {exc}", file=sys.stderr)
        return 3
    except CheckFailed as exc:
        print(f"check failed: {exc}", file=sys.stderr)
        return 1
    except FiberMeasureError as exc:
        # a mathematical refusal (no contraction, empty locus, ...) is a failed run
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except NotImplementedError as exc:
        print(f"unsupported: {exc}", file=sys.stderr)
        return 2
    text = json.dumps(report, indent=2, sort_keys=True)
    path = cfg.raw("output", "json")
    if path:
        with open(path, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    for msg in report["checks"]["failed"]:
        print(f"check failed: {msg}", file=sys.stderr)
    return status


if __name__ == "__main__":
    sys.exit(main())
