"""Pure-Python kernels: the reference implementation of the hot loops.

The compiled extension (``_core``) mirrors these functions operation by
operation. Both paths must stay bit-identical: every sum accumulates
left-to-right into one double, exponents always go through ``pow`` and
norms through ``sqrt``, so a run produces the same dataset hashes no
matter which backend is active. Keep any change here in lockstep with
``_core.pyx``.
"""

from math import sqrt

BACKEND = "pure"

_EPS_NORM = 1e-12


def renormalize_rows(ent):
    """Scale every row of `ent` (n, dim) to unit L2 norm, in place."""
    n, dim = ent.shape
    for i in range(n):
        s = 0.0
        for k in range(dim):
            v = float(ent[i, k])
            s += v * v
        norm = sqrt(s)
        if norm > _EPS_NORM:
            for k in range(dim):
                ent[i, k] = float(ent[i, k]) / norm


def transe_epoch(ent, rel, pos, neg, margin, lr, update_relation):
    """One SGD pass over paired (positive, negative) index rows.

    `pos` and `neg` are (steps, 2) int64 arrays of entity row indices
    (cause, effect). For each step the hinge term
    ``[margin + d(pos) - d(neg)]+`` with ``d(a, b) = |v_a + rel - v_b|``
    is evaluated and, when active, a gradient step of size `lr` is
    applied in place. Returns the summed hinge loss as evaluated before
    each update.
    """
    dim = ent.shape[1]
    steps = pos.shape[0]
    total = 0.0
    for t in range(steps):
        pc, pe = int(pos[t, 0]), int(pos[t, 1])
        nc, ne = int(neg[t, 0]), int(neg[t, 1])

        dp = 0.0
        for k in range(dim):
            v = float(ent[pc, k]) + float(rel[k]) - float(ent[pe, k])
            dp += v * v
        dp = sqrt(dp)

        dn = 0.0
        for k in range(dim):
            v = float(ent[nc, k]) + float(rel[k]) - float(ent[ne, k])
            dn += v * v
        dn = sqrt(dn)

        hinge = margin + dp - dn
        if hinge <= 0.0:
            continue
        total += hinge

        inv_p = 1.0 / dp if dp > _EPS_NORM else 0.0
        inv_n = 1.0 / dn if dn > _EPS_NORM else 0.0
        for k in range(dim):
            up = (float(ent[pc, k]) + float(rel[k]) - float(ent[pe, k])) * inv_p
            un = (float(ent[nc, k]) + float(rel[k]) - float(ent[ne, k])) * inv_n
            ent[pc, k] = float(ent[pc, k]) - lr * up
            ent[pe, k] = float(ent[pe, k]) + lr * up
            ent[nc, k] = float(ent[nc, k]) + lr * un
            ent[ne, k] = float(ent[ne, k]) - lr * un
            if update_relation:
                rel[k] = float(rel[k]) - lr * (up - un)
    return total


def _find_key(keys, key):
    lo, hi = 0, len(keys)
    while lo < hi:
        mid = (lo + hi) // 2
        if int(keys[mid]) < key:
            lo = mid + 1
        else:
            hi = mid
    if lo < len(keys) and int(keys[lo]) == key:
        return lo
    return -1


def pair_cs(ic, je, vocab_size, keys, counts, row, col, m, n, alpha, lam, eps):
    """Causal strength of one (cause-id, effect-id) pair.

    ``keys`` is the sorted packed-key array (id_c * vocab_size + id_e)
    with parallel ``counts``; ``row``/``col`` are dense marginal count
    arrays. Ids < 0 denote out-of-vocabulary lemmas and score 0.
    """
    if ic < 0 or je < 0 or m <= 0.0 or n <= 0.0:
        return 0.0
    idx = _find_key(keys, ic * vocab_size + je)
    if idx < 0:
        return 0.0
    f = float(counts[idx])
    if f <= 0.0:
        return 0.0
    p_i = float(row[ic]) / m
    p_j = float(col[je]) / m
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


def span_score(ids1, ids2, vocab_size, keys, counts, row, col, m, n, alpha, lam, eps):
    """Average causal strength over the cross product of two id spans.

    Sum of ``pair_cs`` over ids1 x ids2 divided by ``len(ids1) + len(ids2)``
    (out-of-vocabulary tokens contribute 0 but still count in the
    denominator).
    """
    n1 = len(ids1)
    n2 = len(ids2)
    if n1 + n2 == 0:
        return 0.0
    total = 0.0
    for a in range(n1):
        for b in range(n2):
            total += pair_cs(
                int(ids1[a]), int(ids2[b]), vocab_size, keys, counts,
                row, col, m, n, alpha, lam, eps,
            )
    return total / float(n1 + n2)
