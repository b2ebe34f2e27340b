# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels: bit-identical fast path for the hot loops.

Mirrors ``pure.py`` operation by operation; both accumulate sums
left-to-right in doubles and route exponents through libm ``pow``.
The build disables FP contraction so results match the fallback exactly.
"""

from libc.math cimport sqrt, pow
from libc.stdint cimport int64_t

BACKEND = "compiled"

cdef double _EPS_NORM = 1e-12


def renormalize_rows(double[:, ::1] ent):
    cdef Py_ssize_t n = ent.shape[0], dim = ent.shape[1], i, k
    cdef double s, norm, v
    for i in range(n):
        s = 0.0
        for k in range(dim):
            v = ent[i, k]
            s += v * v
        norm = sqrt(s)
        if norm > _EPS_NORM:
            for k in range(dim):
                ent[i, k] = ent[i, k] / norm


def transe_epoch(double[:, ::1] ent, double[::1] rel,
                 int64_t[:, ::1] pos, int64_t[:, ::1] neg,
                 double margin, double lr, bint update_relation):
    cdef Py_ssize_t dim = ent.shape[1], steps = pos.shape[0], t, k
    cdef Py_ssize_t pc, pe, nc, ne
    cdef double dp, dn, v, hinge, inv_p, inv_n, up, un
    cdef double total = 0.0
    for t in range(steps):
        pc = <Py_ssize_t>pos[t, 0]
        pe = <Py_ssize_t>pos[t, 1]
        nc = <Py_ssize_t>neg[t, 0]
        ne = <Py_ssize_t>neg[t, 1]

        dp = 0.0
        for k in range(dim):
            v = ent[pc, k] + rel[k] - ent[pe, k]
            dp += v * v
        dp = sqrt(dp)

        dn = 0.0
        for k in range(dim):
            v = ent[nc, k] + rel[k] - ent[ne, k]
            dn += v * v
        dn = sqrt(dn)

        hinge = margin + dp - dn
        if hinge <= 0.0:
            continue
        total += hinge

        inv_p = 1.0 / dp if dp > _EPS_NORM else 0.0
        inv_n = 1.0 / dn if dn > _EPS_NORM else 0.0
        for k in range(dim):
            up = (ent[pc, k] + rel[k] - ent[pe, k]) * inv_p
            un = (ent[nc, k] + rel[k] - ent[ne, k]) * inv_n
            ent[pc, k] = ent[pc, k] - lr * up
            ent[pe, k] = ent[pe, k] + lr * up
            ent[nc, k] = ent[nc, k] + lr * un
            ent[ne, k] = ent[ne, k] - lr * un
            if update_relation:
                rel[k] = rel[k] - lr * (up - un)
    return total


cdef Py_ssize_t _find_key(int64_t[::1] keys, int64_t key) noexcept:
    cdef Py_ssize_t lo = 0, hi = keys.shape[0], mid
    while lo < hi:
        mid = (lo + hi) // 2
        if keys[mid] < key:
            lo = mid + 1
        else:
            hi = mid
    if lo < keys.shape[0] and keys[lo] == key:
        return lo
    return -1


cdef double _pair_cs(int64_t ic, int64_t je, int64_t vocab_size,
                     int64_t[::1] keys, double[::1] counts,
                     double[::1] row, double[::1] col,
                     double m, double n, double alpha, double lam,
                     double eps) noexcept:
    cdef Py_ssize_t idx
    cdef double f, p_i, p_j, p_ij, nec, suf
    if ic < 0 or je < 0 or m <= 0.0 or n <= 0.0:
        return 0.0
    idx = _find_key(keys, ic * vocab_size + je)
    if idx < 0:
        return 0.0
    f = counts[idx]
    if f <= 0.0:
        return 0.0
    p_i = row[ic] / m
    p_j = col[je] / m
    if p_i <= 0.0:
        p_i = eps
    if p_j <= 0.0:
        p_j = eps
    if p_i <= 0.0 or p_j <= 0.0:
        return 0.0
    p_ij = f / n
    nec = p_ij / (pow(p_i, alpha) * p_j)
    suf = p_ij / (p_i * pow(p_j, alpha))
    return pow(nec, lam) * pow(suf, 1.0 - lam)


def pair_cs(int64_t ic, int64_t je, int64_t vocab_size,
            int64_t[::1] keys, double[::1] counts,
            double[::1] row, double[::1] col,
            double m, double n, double alpha, double lam, double eps):
    return _pair_cs(ic, je, vocab_size, keys, counts, row, col,
                    m, n, alpha, lam, eps)


def span_score(int64_t[::1] ids1, int64_t[::1] ids2, int64_t vocab_size,
               int64_t[::1] keys, double[::1] counts,
               double[::1] row, double[::1] col,
               double m, double n, double alpha, double lam, double eps):
    cdef Py_ssize_t n1 = ids1.shape[0], n2 = ids2.shape[0], a, b
    cdef double total = 0.0
    if n1 + n2 == 0:
        return 0.0
    for a in range(n1):
        for b in range(n2):
            total += _pair_cs(ids1[a], ids2[b], vocab_size, keys, counts,
                              row, col, m, n, alpha, lam, eps)
    return total / <double>(n1 + n2)
