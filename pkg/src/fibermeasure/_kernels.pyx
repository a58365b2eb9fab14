# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot loops: batched polynomial evaluation mod M and residue counting.

Moduli up to 2^63 are supported; products go through 128-bit integers.
"""

import numpy as np
cimport numpy as cnp

ctypedef unsigned long long u64
ctypedef long long i64

cdef extern from *:
    ctypedef unsigned long long u128 "unsigned __int128"

MAX_MODULUS = 1 << 63


cdef inline u64 mulmod(u64 a, u64 b, u64 M) noexcept nogil:
    return <u64>((<u128>a * b) % M)


cdef inline u64 addmod(u64 a, u64 b, u64 M) noexcept nogil:
    cdef u64 s = a + b
    if s >= M:
        s -= M
    return s


cdef void _fill_powers(u64[:, ::1] pw, const i64[::1] x, int j, int maxe, u64 M) noexcept nogil:
    cdef u64 base = <u64>(x[j]) % M
    cdef int e
    pw[j, 0] = 1 % M
    for e in range(1, maxe + 1):
        pw[j, e] = mulmod(pw[j, e - 1], base, M)


def eval_mod(const i64[::1] coef, const i64[:, ::1] exps, const i64[::1] out_idx,
             int n_out, const i64[:, ::1] points, i64 M):
    """Evaluate a flattened polynomial system at each row of points, mod M."""
    cdef Py_ssize_t S = points.shape[0], m = points.shape[1], T = exps.shape[0]
    cdef Py_ssize_t s, t, j
    cdef int maxe = 0
    for t in range(T):
        for j in range(m):
            if exps[t, j] > maxe:
                maxe = exps[t, j]
    out = np.zeros((S, n_out), dtype=np.int64)
    cdef i64[:, ::1] ov = out
    pw_arr = np.zeros((max(m, 1), maxe + 1), dtype=np.uint64)
    cdef u64[:, ::1] pw = pw_arr
    cdef u64 uM = <u64>M, term
    cdef int o
    with nogil:
        for s in range(S):
            for j in range(m):
                _fill_powers(pw, points[s], <int>j, maxe, uM)
            for t in range(T):
                term = <u64>coef[t] % uM
                for j in range(m):
                    if exps[t, j]:
                        term = mulmod(term, pw[j, exps[t, j]], uM)
                o = <int>out_idx[t]
                ov[s, o] = <i64>addmod(<u64>ov[s, o], term, uM)
    return out


def count_zeros(const i64[::1] coef, const i64[:, ::1] exps, const i64[::1] out_idx,
                int n_out, i64 M, int m, i64 q, bint sphere):
    """Count u in (Z/M)^m with every output == 0 mod M.

    With sphere set, only u having some coordinate not divisible by q count.
    """
    cdef Py_ssize_t T = exps.shape[0], t, j
    cdef int maxe = 0
    for t in range(T):
        for j in range(m):
            if exps[t, j] > maxe:
                maxe = exps[t, j]
    x_arr = np.zeros(max(m, 1), dtype=np.int64)
    cdef i64[::1] x = x_arr
    pw_arr = np.zeros((max(m, 1), maxe + 1), dtype=np.uint64)
    cdef u64[:, ::1] pw = pw_arr
    acc_arr = np.zeros(max(n_out, 1), dtype=np.uint64)
    cdef u64[::1] acc = acc_arr
    cdef u64 uM = <u64>M, term
    cdef long long count = 0
    cdef int k, ok, unit
    with nogil:
        for j in range(m):
            _fill_powers(pw, x, <int>j, maxe, uM)
        while True:
            unit = 0
            if sphere:
                for j in range(m):
                    if x[j] % q != 0:
                        unit = 1
                        break
            if unit or not sphere:
                for k in range(n_out):
                    acc[k] = 0
                for t in range(T):
                    term = <u64>coef[t] % uM
                    for j in range(m):
                        if exps[t, j]:
                            term = mulmod(term, pw[j, exps[t, j]], uM)
                    acc[out_idx[t]] = addmod(acc[out_idx[t]], term, uM)
                ok = 1
                for k in range(n_out):
                    if acc[k] != 0:
                        ok = 0
                        break
                count += ok
            # odometer, last coordinate fastest
            j = m - 1
            while j >= 0:
                x[j] += 1
                if x[j] < M:
                    _fill_powers(pw, x, <int>j, maxe, uM)
                    break
                x[j] = 0
                _fill_powers(pw, x, <int>j, maxe, uM)
                j -= 1
            if j < 0:
                break
    return count


def eval_real(const double[::1] coef, const i64[:, ::1] exps, const i64[::1] out_idx,
              int n_out, const double[:, ::1] points):
    """Floating evaluation; terms added in the given (canonical) order."""
    cdef Py_ssize_t S = points.shape[0], m = points.shape[1], T = exps.shape[0]
    cdef Py_ssize_t s, t, j
    cdef int maxe = 0, e
    for t in range(T):
        for j in range(m):
            if exps[t, j] > maxe:
                maxe = exps[t, j]
    out = np.zeros((S, n_out), dtype=np.float64)
    cdef double[:, ::1] ov = out
    pw_arr = np.zeros((max(m, 1), maxe + 1), dtype=np.float64)
    cdef double[:, ::1] pw = pw_arr
    cdef double term
    with nogil:
        for s in range(S):
            for j in range(m):
                pw[j, 0] = 1.0
                for e in range(1, maxe + 1):
                    pw[j, e] = pw[j, e - 1] * points[s, j]
            for t in range(T):
                term = coef[t]
                for j in range(m):
                    if exps[t, j]:
                        term = term * pw[j, exps[t, j]]
                ov[s, out_idx[t]] += term
    return out


def valuations(const i64[::1] x, i64 q, int cap):
    """Number of trailing base-q zero digits, capped (0 maps to cap)."""
    cdef Py_ssize_t S = x.shape[0], s
    out = np.zeros(S, dtype=np.int64)
    cdef i64[::1] ov = out
    cdef i64 v, y
    with nogil:
        for s in range(S):
            y = x[s]
            if y == 0:
                ov[s] = cap
                continue
            v = 0
            while y % q == 0 and v < cap:
                y = y // q
                v += 1
            ov[s] = v
    return out
