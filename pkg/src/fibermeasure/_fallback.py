"""Pure numpy versions of the compiled kernels, same signatures and results.

Moduli below 2^31 use int64 arrays; larger ones use Python-int object
arrays so products never overflow.
"""

import numpy as np

SMALL_MODULUS = 1 << 31
MAX_MODULUS = None  # unbounded


def _dtype(M):
    return np.int64 if M < SMALL_MODULUS else object


def eval_mod(coef, exps, out_idx, n_out, points, M):
    M = int(M)
    dt = _dtype(M)
    pts = np.asarray(points).astype(dt) % M
    S = pts.shape[0]
    out = np.zeros((S, n_out), dtype=dt)
    cache = {}
    for t in range(len(coef)):
        term = np.full(S, int(coef[t]) % M, dtype=dt)
        for j, e in enumerate(exps[t]):
            e = int(e)
            if e:
                key = (j, e)
                if key not in cache:
                    acc = np.ones(S, dtype=dt) % M
                    for _ in range(e):
                        acc = (acc * pts[:, j]) % M
                    cache[key] = acc
                term = (term * cache[key]) % M
        o = int(out_idx[t])
        out[:, o] = (out[:, o] + term) % M
    if dt is object:
        return out
    return out.astype(np.int64)


def count_zeros(coef, exps, out_idx, n_out, M, m, q, sphere, chunk=1 << 16):
    M = int(M)
    total = M ** m
    count = 0
    for start in range(0, total, chunk):
        idx = np.arange(start, min(start + chunk, total), dtype=np.int64 if total < 2**62 else object)
        pts = np.empty((len(idx), m), dtype=idx.dtype)
        rest = idx
        for j in range(m - 1, -1, -1):
            pts[:, j] = rest % M
            rest = rest // M
        if sphere:
            keep = np.zeros(len(idx), dtype=bool)
            for j in range(m):
                keep |= (pts[:, j] % q) != 0
            pts = pts[keep]
            if len(pts) == 0:
                continue
        vals = eval_mod(coef, exps, out_idx, n_out, pts, M)
        count += int(np.sum(np.all(vals == 0, axis=1)))
    return count


def eval_real(coef, exps, out_idx, n_out, points):
    pts = np.asarray(points, dtype=np.float64)
    S = pts.shape[0]
    out = np.zeros((S, n_out), dtype=np.float64)
    for t in range(len(coef)):
        term = np.full(S, float(coef[t]))
        for j, e in enumerate(exps[t]):
            if e:
                term = term * pts[:, j] ** int(e)
        out[:, int(out_idx[t])] += term
    return out


def valuations(x, q, cap):
    x = np.asarray(x)
    out = np.zeros(len(x), dtype=np.int64)
    y = x.copy()
    live = y != 0
    out[~live] = cap
    for _ in range(cap):
        div = live & (y % q == 0)
        if not div.any():
            break
        out[div] += 1
        y = np.where(div, y // q, y)
        live = div
    return out
