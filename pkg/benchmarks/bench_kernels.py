"""Compiled kernels against the numpy fallback on the same inputs.

    python3 benchmarks/bench_kernels.py [--repeat 5]

Each row checks that both backends agree (floats up to summation-order
rounding) before timing them.
"""

import argparse
import time

import numpy as np

from fibermeasure import _fallback, kernels
from fibermeasure.poly import PolyMap, to_arrays


def _arrays(texts, M=None):
    F = PolyMap.parse(texts)
    coefs, exps, idx = to_arrays(list(F.polys))
    coef = np.array([int(c) % M if M else float(c) for c in coefs],
                    dtype=np.int64 if M else np.float64)
    return F, coef, np.ascontiguousarray(exps, dtype=np.int64), np.asarray(idx, dtype=np.int64)


def _best(fn, repeat):
    best = float("inf")
    out = None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def cases():
    rng = np.random.default_rng(0)
    texts = ["x0^3 + 2*x0*x1^2 - x2^3 + x0*x1*x2 - 1"]

    M = 5 ** 6
    F, coef, exps, idx = _arrays(texts, M)
    pts = rng.integers(0, M, size=(200_000, 3), dtype=np.int64)
    yield ("eval_mod 2e5 pts mod 5^6",
           lambda: kernels.eval_mod(coef, exps, idx, 1, pts, M),
           lambda: _fallback.eval_mod(coef, exps, idx, 1, pts, M))

    M = 5 ** 3
    yield ("count_zeros 3 vars mod 5^3",
           lambda: kernels.count_zeros(coef % M, exps, idx, 1, M, 3, 5),
           lambda: _fallback.count_zeros(coef % M, exps, idx, 1, M, 3, 5, False))

    Fr, coef_r, exps_r, idx_r = _arrays(texts)
    X = rng.standard_normal((500_000, 3))
    yield ("eval_real 5e5 pts",
           lambda: kernels.eval_real(coef_r, exps_r, idx_r, 1, X),
           lambda: _fallback.eval_real(coef_r, exps_r, idx_r, 1, X))

    v = rng.integers(0, 5 ** 20, size=1_000_000, dtype=np.int64)
    yield ("valuations 1e6 ints",
           lambda: kernels.valuations(v, 5, 20),
           lambda: _fallback.valuations(v, 5, 20))


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()
    print(f"selected backend: {kernels.BACKEND}")
    print(f"{'kernel':32s} {'compiled s':>11s} {'fallback s':>11s} {'speedup':>8s}")
    for name, fast, slow in cases():
        tf, a = _best(fast, args.repeat)
        ts, b = _best(slow, args.repeat)
        same = np.array_equal(np.asarray(a), np.asarray(b)) if np.asarray(a).dtype != float \
            else np.allclose(a, b, rtol=1e-12, atol=1e-12)
        if not same:
            raise SystemExit(f"{name}: backends disagree")
        print(f"{name:32s} {tf:11.4f} {ts:11.4f} {ts / tf:8.1f}x", flush=True)


if __name__ == "__main__":
    main()
