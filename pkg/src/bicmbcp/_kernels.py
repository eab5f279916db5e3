"""Compiled inner loops: ZF-DFE, depth-first sphere search and exhaustive enumeration.

All indices are 0-based.  Layer ``u`` of the tree is component ``u`` of the
real vector; the search starts at layer ``n - 1`` and ends at layer 0.

Counter slots (int64 array) are listed in ``COUNTER_SLOTS``.  A multiplication
is counted exactly where the corresponding ``*`` executes.
"""

from __future__ import annotations

import numpy as np
from numba import njit

COUNTER_SLOTS = (
    "real_multiplications",
    "nodes_visited",
    "partial_weight_evaluations",
    "cache_hits",
    "sd_executions",
    "restarts",
    "zf_dfe_multiplications",
)
MULTS, NODES, PW_EVALS, CACHE_HITS, SD_EXECS, RESTARTS, ZF_MULTS = range(7)
N_COUNTERS = len(COUNTER_SLOTS)


@njit(cache=True)
def _nearest_allowed(t, allowed):
    # Nearest allowed index to the continuous index position t; ties -> smaller index.
    best = -1
    best_d = np.inf
    for j in range(allowed.shape[0]):
        if allowed[j]:
            d = abs(t - j)
            if d < best_d:
                best_d = d
                best = j
    return best


@njit(cache=True)
def zf_dfe_kernel(r, R, tab, zero, pam, inv_step, lhat, allowed, use_table, x, counters):
    """Successive slicing from layer n-1 to 0; returns the squared residual norm.

    ``inv_step[u] = 1 / (R[u, u] * d)`` with ``d`` the PAM spacing, so the
    continuous index position of the layer-u decision costs one multiply.
    """
    n = r.shape[0]
    L = pam.shape[0]
    offset = 0.5 * (L - 1)
    dist = 0.0
    mults = 0
    for u in range(n - 1, -1, -1):
        acc = r[u]
        for v in range(n - 1, u, -1):
            if use_table:
                if not zero[u, v]:
                    acc -= tab[u, v, x[v]]
            else:
                acc -= R[u, v] * pam[x[v]]
                mults += 1
        t = acc * inv_step[u] + offset
        mults += 1
        if u == lhat:
            j = _nearest_allowed(t, allowed)
        else:
            j = int(np.ceil(t - 0.5))
            if j < 0:
                j = 0
            elif j > L - 1:
                j = L - 1
        x[u] = j
        if use_table:
            e = acc - tab[u, u, j]
        else:
            e = acc - R[u, u] * pam[j]
            mults += 1
        dist += e * e
        mults += 1
    counters[MULTS] += mults
    counters[ZF_MULTS] += mults
    return dist


@njit(cache=True)
def _expand(u, r, R, tab, zero, pam, lhat, allowed, use_table, recycle, ordered, x,
            cidx, cpw, ccount, cache_valid, cache_idx, cache_pw, cache_count, counters):
    n = r.shape[0]
    L = pam.shape[0]
    pair_low = recycle and (u % 2 == 0) and (u + 1 < n) and zero[u, u + 1]
    if pair_low and cache_valid[u]:
        c = cache_count[u]
        for a in range(c):
            cidx[u, a] = cache_idx[u, a]
            cpw[u, a] = cache_pw[u, a]
        ccount[u] = c
        counters[NODES] += c
        counters[CACHE_HITS] += c
        return
    c = 0
    for j in range(L):
        if u == lhat and not allowed[j]:
            continue
        acc = r[u]
        for v in range(n - 1, u, -1):
            if use_table:
                if not zero[u, v]:
                    acc -= tab[u, v, x[v]]
            else:
                acc -= R[u, v] * pam[x[v]]
        if use_table:
            acc -= tab[u, u, j]
        else:
            acc -= R[u, u] * pam[j]
        pw = acc * acc
        if use_table:
            counters[MULTS] += 1
        else:
            counters[MULTS] += n - u + 1
        # insertion keeps children sorted by partial weight when ordered
        pos = c
        if ordered:
            while pos > 0 and cpw[u, pos - 1] > pw:
                cpw[u, pos] = cpw[u, pos - 1]
                cidx[u, pos] = cidx[u, pos - 1]
                pos -= 1
        cpw[u, pos] = pw
        cidx[u, pos] = j
        c += 1
    ccount[u] = c
    counters[NODES] += c
    counters[PW_EVALS] += c
    if pair_low:
        for a in range(c):
            cache_idx[u, a] = cidx[u, a]
            cache_pw[u, a] = cpw[u, a]
        cache_count[u] = c
        cache_valid[u] = True


@njit(cache=True)
def sd_kernel(r, R, tab, zero, pam, lhat, allowed, radius_sq, use_table, recycle, ordered,
              best_x, counters, radius_trace):
    """Depth-first search for min ||r - R x||^2 with x[lhat] restricted to ``allowed``.

    Nodes whose weight exceeds the current squared radius are pruned; equal
    weights are admitted.  Each admitted leaf shrinks the radius to its
    weight.  If no leaf is admitted the search restarts with a doubled
    radius.  ``radius_trace`` receives the successive radii (it must be long
    enough; at most ``len(radius_trace)`` values are recorded) and the number
    recorded is returned alongside the metric.
    """
    n = r.shape[0]
    L = pam.shape[0]
    counters[SD_EXECS] += 1
    cidx = np.empty((n, L), dtype=np.int64)
    cpw = np.empty((n, L))
    ccount = np.zeros(n, dtype=np.int64)
    cpos = np.zeros(n, dtype=np.int64)
    cache_idx = np.empty((n, L), dtype=np.int64)
    cache_pw = np.empty((n, L))
    cache_count = np.zeros(n, dtype=np.int64)
    cache_valid = np.zeros(n, dtype=np.bool_)
    w = np.zeros(n + 1)
    x = np.zeros(n, dtype=np.int64)
    best = radius_sq
    ntrace = 0
    while True:
        found = False
        if ntrace < radius_trace.shape[0]:
            radius_trace[ntrace] = best
            ntrace += 1
        for a in range(n):
            cache_valid[a] = False
        u = n - 1
        _expand(u, r, R, tab, zero, pam, lhat, allowed, use_table, recycle, ordered, x,
                cidx, cpw, ccount, cache_valid, cache_idx, cache_pw, cache_count, counters)
        cpos[u] = 0
        while True:
            if cpos[u] >= ccount[u]:
                u += 1
                if u == n:
                    break
                continue
            j = cidx[u, cpos[u]]
            wt = w[u + 1] + cpw[u, cpos[u]]
            cpos[u] += 1
            if wt > best:
                if ordered:
                    cpos[u] = ccount[u]
                continue
            x[u] = j
            if u == 0:
                if (not found) or wt < best:
                    best = wt
                    found = True
                    for a in range(n):
                        best_x[a] = x[a]
                    if ntrace < radius_trace.shape[0]:
                        radius_trace[ntrace] = best
                        ntrace += 1
                continue
            w[u] = wt
            if u >= 2:
                cache_valid[u - 2] = False
            u -= 1
            _expand(u, r, R, tab, zero, pam, lhat, allowed, use_table, recycle, ordered, x,
                    cidx, cpw, ccount, cache_valid, cache_idx, cache_pw, cache_count, counters)
            cpos[u] = 0
        if found:
            return best, ntrace
        counters[RESTARTS] += 1
        best = 2.0 * best if best > 0.0 else 1.0


@njit(cache=True)
def _run_sd(r, R, tab, zero, pam, inv_step, lhat, allowed, use_table, recycle, ordered,
            x_out, counters, trace):
    x0 = np.empty(r.shape[0], dtype=np.int64)
    radius = zf_dfe_kernel(r, R, tab, zero, pam, inv_step, lhat, allowed, use_table, x0, counters)
    metric, _ = sd_kernel(r, R, tab, zero, pam, lhat, allowed, radius, use_table, recycle,
                          ordered, x_out, counters, trace)
    return metric


@njit(cache=True)
def instant_metrics_kernel(r, R, tab, zero, pam, inv_step, subset_mask, labels, reduce_execs,
                           use_table, recycle, ordered, metrics, xhat, counters):
    """All precoded bit metrics of one instant: ``metrics[l_hat, i_hat, b]``.

    With ``reduce_execs`` the first position (0, 0) is solved for both
    hypotheses, the better argmin becomes the joint ML point, and every other
    position reuses the joint minimum for the bit value the ML point carries,
    solving only the complement.  Otherwise all 2 * n * bits metrics run SD.
    Returns the joint minimum (or -1 when not reducing).
    """
    n = r.shape[0]
    nbits = labels.shape[1]
    trace = np.empty(0)
    xa = np.empty(n, dtype=np.int64)
    if not reduce_execs:
        for lh in range(n):
            for ih in range(nbits):
                for b in range(2):
                    metrics[lh, ih, b] = _run_sd(r, R, tab, zero, pam, inv_step, lh,
                                                 subset_mask[ih, b], use_table, recycle, ordered,
                                                 xa, counters, trace)
        return -1.0
    xb = np.empty(n, dtype=np.int64)
    m0 = _run_sd(r, R, tab, zero, pam, inv_step, 0, subset_mask[0, 0], use_table, recycle,
                 ordered, xa, counters, trace)
    m1 = _run_sd(r, R, tab, zero, pam, inv_step, 0, subset_mask[0, 1], use_table, recycle,
                 ordered, xb, counters, trace)
    metrics[0, 0, 0] = m0
    metrics[0, 0, 1] = m1
    if m0 <= m1:
        gamma = m0
        for a in range(n):
            xhat[a] = xa[a]
    else:
        gamma = m1
        for a in range(n):
            xhat[a] = xb[a]
    for lh in range(n):
        for ih in range(nbits):
            if lh == 0 and ih == 0:
                continue
            bhat = labels[xhat[lh], ih]
            metrics[lh, ih, bhat] = gamma
            metrics[lh, ih, 1 - bhat] = _run_sd(r, R, tab, zero, pam, inv_step, lh,
                                                subset_mask[ih, 1 - bhat], use_table, recycle,
                                                ordered, xa, counters, trace)
    return gamma


@njit(cache=True)
def frame_metrics_kernel(rb, R, tab, zero, pam, inv_step, subset_mask, labels, reduce_execs,
                         use_table, recycle, ordered, metrics, counters, execs_per_instant):
    n = rb.shape[1]
    xhat = np.empty(n, dtype=np.int64)
    for k in range(rb.shape[0]):
        before = counters[SD_EXECS]
        instant_metrics_kernel(rb[k], R, tab, zero, pam, inv_step, subset_mask, labels,
                               reduce_execs, use_table, recycle, ordered, metrics[k], xhat,
                               counters)
        execs_per_instant[k] = counters[SD_EXECS] - before


@njit(cache=True)
def _enum_layer(u, r, R, pam, x, w_above, marg):
    # Returns the minimum total weight over every completion of x[u+1:], and
    # folds subtree minima into marg[layer, value]; no pruning anywhere.
    n = r.shape[0]
    L = pam.shape[0]
    acc = r[u]
    for v in range(u + 1, n):
        acc -= R[u, v] * pam[x[v]]
    best = np.inf
    for j in range(L):
        e = acc - R[u, u] * pam[j]
        wt = w_above + e * e
        if u == 0:
            sub = wt
        elif u == 1:
            # innermost layer unrolled: it holds all but 1/L of the work
            acc0 = r[0] - R[0, 1] * pam[j]
            for v in range(2, n):
                acc0 -= R[0, v] * pam[x[v]]
            sub = np.inf
            for i in range(L):
                e0 = acc0 - R[0, 0] * pam[i]
                leaf = wt + e0 * e0
                if leaf < marg[0, i]:
                    marg[0, i] = leaf
                if leaf < sub:
                    sub = leaf
        else:
            x[u] = j
            sub = _enum_layer(u - 1, r, R, pam, x, wt, marg)
        if sub < marg[u, j]:
            marg[u, j] = sub
        if sub < best:
            best = sub
    return best


@njit(cache=True)
def exhaustive_marginals(r, R, pam, offset):
    """``marg[u, j]`` = min of ``offset + ||r - R x||^2`` over all x with x[u] = pam[j].

    Visits every one of the ``len(pam) ** n`` lattice points.
    """
    n = r.shape[0]
    marg = np.full((n, pam.shape[0]), np.inf)
    x = np.zeros(n, dtype=np.int64)
    _enum_layer(n - 1, r, R, pam, x, offset, marg)
    return marg
