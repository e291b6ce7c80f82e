"""Compiled hot loop for the solver.

Same algorithm as ``SolverRun``, with the samplers and linked lists encoded
as flat arrays so numba can JIT the whole outer loop.  Each weight is a
(mantissa in [1,2), integer exponent) pair; buckets live in a fixed
exponent window sized from the iteration budget, wide enough that no
weight can ever leave it.  The random stream (numba's own Mersenne
Twister) is deterministic given the seed but distinct from the pure-Python
engine's stream.

Sampler state tuple layout:
    (mant f8[m], expo i8[m], alive b1[m], slot i4[m],
     members i4[K, m], bsize i4[K], bmsum f8[K], bops i4[K],
     bounds i8[2], lo)
"""

from __future__ import annotations

import math

import numpy as np
from numba import njit

from .solver import OpCounters

__all__ = ["run_compiled"]


@njit(cache=True, inline="always")
def _insert(S, i):
    mant, expo, alive, slot, members, bsize, bmsum, bops, bounds, lo = S
    k = expo[i] - lo
    if k < 0 or k >= members.shape[0]:
        return 1
    s = bsize[k]
    members[k, s] = i
    slot[i] = s
    bsize[k] = s + 1
    bmsum[k] += mant[i]
    bops[k] += 1
    if k > bounds[1]:
        bounds[1] = k
    if k < bounds[0]:
        bounds[0] = k
    return 0


@njit(cache=True, inline="always")
def _remove(S, i):
    mant, expo, alive, slot, members, bsize, bmsum, bops, bounds, lo = S
    k = expo[i] - lo
    s = slot[i]
    last = members[k, bsize[k] - 1]
    members[k, s] = last
    slot[last] = s
    bsize[k] -= 1
    bmsum[k] -= mant[i]
    bops[k] += 1
    if bops[k] >= 64 + 2 * bsize[k]:
        acc = 0.0
        for t in range(bsize[k]):
            acc += mant[members[k, t]]
        bmsum[k] = acc
        bops[k] = 0


@njit(cache=True, inline="always")
def _scale(S, i, factor):
    mant, expo, alive, slot, members, bsize, bmsum, bops, bounds, lo = S
    old = mant[i]
    m = old * factor
    if 1.0 <= m < 2.0:
        mant[i] = m
        k = expo[i] - lo
        bmsum[k] += m - old
        bops[k] += 1
        if bops[k] >= 64 + 2 * bsize[k]:
            acc = 0.0
            for t in range(bsize[k]):
                acc += mant[members[k, t]]
            bmsum[k] = acc
            bops[k] = 0
        return 0
    _remove(S, i)
    fm, fe = math.frexp(m)
    mant[i] = fm * 2.0
    expo[i] += fe - 1
    return _insert(S, i)


@njit(cache=True, inline="always")
def _set_zero(S, i):
    _remove(S, i)
    S[2][i] = False


# buckets more than this far below the top hold a relative weight under
# 2^-64 and are ignored by totals and sampling (below double precision)
_SCAN_DEPTH = 64


@njit(cache=True)
def _total(S):
    mant, expo, alive, slot, members, bsize, bmsum, bops, bounds, lo = S
    while bounds[1] > bounds[0] and bsize[bounds[1]] == 0:
        bounds[1] -= 1
    while bounds[0] < bounds[1] and bsize[bounds[0]] == 0:
        bounds[0] += 1
    E = bounds[1]
    klo = max(bounds[0], E - _SCAN_DEPTH)
    acc = 0.0
    w = 1.0
    for k in range(E, klo - 1, -1):
        if bsize[k] > 0:
            acc += bmsum[k] * w
        w *= 0.5
    fm, fe = math.frexp(acc)
    return fm * 2.0, int(lo + E + fe - 1)


@njit(cache=True)
def _sample(S):
    mant, expo, alive, slot, members, bsize, bmsum, bops, bounds, lo = S
    while bounds[1] > bounds[0] and bsize[bounds[1]] == 0:
        bounds[1] -= 1
    while bounds[0] < bounds[1] and bsize[bounds[0]] == 0:
        bounds[0] += 1
    E = bounds[1]
    klo = max(bounds[0], E - _SCAN_DEPTH)
    acc = 0.0
    w = 1.0
    for k in range(E, klo - 1, -1):
        if bsize[k] > 0:
            acc += bmsum[k] * w
        w *= 0.5
    target = np.random.random() * acc
    run = 0.0
    pick = E
    w = 1.0
    for k in range(E, klo - 1, -1):
        if bsize[k] > 0:
            run += bmsum[k] * w
            pick = k
            if target < run:
                break
        w *= 0.5
    while True:
        s = int(np.random.random() * bsize[pick])
        if s >= bsize[pick]:
            s = bsize[pick] - 1
        i = members[pick, s]
        if np.random.random() * 2.0 < mant[i]:
            return i


@njit(cache=True)
def _fraction_of_sum(am, ae, bm, be):
    d = ae - be
    if d > 1060:
        return 1.0
    if d < -1060:
        return 0.0
    x = math.ldexp(am, int(d))
    return x / (x + bm)


@njit(cache=True)
def _make_sampler(weights, lo, K):
    m = len(weights)
    mant = np.zeros(m)
    expo = np.zeros(m, dtype=np.int64)
    alive = np.zeros(m, dtype=np.bool_)
    slot = np.zeros(m, dtype=np.int32)
    members = np.zeros((K, m), dtype=np.int32)
    bsize = np.zeros(K, dtype=np.int32)
    bmsum = np.zeros(K)
    bops = np.zeros(K, dtype=np.int32)
    bounds = np.empty(2, dtype=np.int64)
    bounds[0] = K - 1
    bounds[1] = 0
    S = (mant, expo, alive, slot, members, bsize, bmsum, bops, bounds, lo)
    err = 0
    for i in range(m):
        if weights[i] > 0.0:
            fm, fe = math.frexp(weights[i])
            mant[i] = fm * 2.0
            expo[i] = fe - 1
            alive[i] = True
            err |= _insert(S, i)
    return S, err


@njit(cache=True)
def _core(r, c, ent_rows, vals, row_head, col_head,
          row_next, row_prev, col_next, ent_cols,
          u, uhat, eps, N, fast, seed, max_iters,
          lo_p, K_p, lo_ph, K_ph, lo_pu, K_pu, lo_phu, K_phu):
    np.random.seed(seed)
    x = np.zeros(c)
    xh = np.zeros(r)
    y = np.zeros(r, dtype=np.int64)
    yh = np.zeros(c, dtype=np.int64)
    ret_buf = np.zeros(c, dtype=np.int64)
    counters = np.zeros(6, dtype=np.int64)  # outer, empty, inc, trav, del, upd

    P, e1 = _make_sampler(np.ones(r), lo_p, K_p)
    PH, e2 = _make_sampler(np.ones(c), lo_ph, K_ph)
    PU, e3 = _make_sampler(uhat, lo_pu, K_pu)
    PHU, e4 = _make_sampler(u, lo_phu, K_phu)
    if e1 | e2 | e3 | e4:
        return x, xh, y, yh, counters, 1, 0.0, 0.0

    one_plus = 1.0 + eps
    one_minus = 1.0 - eps
    maxy = 0
    active = c
    below = c
    sum_x = 0.0
    sum_xh = 0.0
    status = 0
    it = 0

    while True:
        it += 1
        if it > max_iters:
            status = 2
            break
        tpu_m, tpu_e = _total(PU)
        tph_m, tph_e = _total(PH)
        tp_m, tp_e = _total(P)
        tphu_m, tphu_e = _total(PHU)
        am = tpu_m * tph_m
        bm = tp_m * tphu_m
        frac = _fraction_of_sum(am, tpu_e + tph_e, bm, tp_e + tphu_e)
        if np.random.random() < frac:
            i_ = _sample(PU)
            j_ = _sample(PH)
        else:
            i_ = _sample(P)
            j_ = _sample(PHU)

        delta = 1.0 / (uhat[i_] + u[j_])
        x[j_] += delta
        xh[i_] += delta
        sum_x += delta
        sum_xh += delta
        z = np.random.random()
        hit = z / delta
        stop = hit * 0.5 if fast else hit

        n_inc = 0
        err = 0

        e = col_head[j_]
        while e >= 0:
            v = vals[e]
            if v < stop:
                break
            counters[3] += 1
            if v >= hit:
                i = ent_rows[e]
                y[i] += 1
                if y[i] > maxy:
                    maxy = y[i]
                err |= _scale(P, i, one_plus)
                err |= _scale(PU, i, one_plus)
                counters[5] += 2
                n_inc += 1
            e = col_next[e]

        n_ret = 0
        e = row_head[i_]
        while e >= 0:
            v = vals[e]
            if v < stop:
                break
            counters[3] += 1
            if v >= hit:
                j = ent_cols[e]
                yh[j] += 1
                if yh[j] == N:
                    below -= 1
                err |= _scale(PH, j, one_minus)
                err |= _scale(PHU, j, one_minus)
                counters[5] += 2
                n_inc += 1
                if yh[j] > N:
                    ret_buf[n_ret] = j
                    n_ret += 1
            e = row_next[e]

        for t in range(n_ret):
            j = ret_buf[t]
            _set_zero(PH, j)
            _set_zero(PHU, j)
            counters[5] += 2
            active -= 1
            e = col_head[j]
            while e >= 0:
                i = ent_rows[e]
                pv = row_prev[e]
                nx = row_next[e]
                if pv >= 0:
                    row_next[pv] = nx
                if nx >= 0:
                    row_prev[nx] = pv
                if row_head[i] == e:
                    row_head[i] = nx
                    old = uhat[i]
                    if nx < 0:
                        new = 0.0
                    elif fast:
                        new = 2.0 * vals[nx]
                    else:
                        new = vals[nx]
                    uhat[i] = new
                    if new == 0.0:
                        _set_zero(PU, i)
                    else:
                        err |= _scale(PU, i, new / old)
                    counters[5] += 1
                counters[4] += 1
                e = col_next[e]
            col_head[j] = -1

        counters[0] += 1
        counters[2] += n_inc
        if n_inc == 0:
            counters[1] += 1
        if err != 0:
            status = 1
            break
        if maxy >= N or active == 0 or below == 0:
            break

    return x, xh, y, yh, counters, status, sum_x, sum_xh


def _windows(W, eps, N):
    """Exponent windows wide enough that no sampler weight can escape them."""
    up = int(math.ceil((N + 2) * math.log2(1.0 + eps))) + 4
    down = int(math.floor((N + 2) * math.log2(1.0 - eps))) - 4
    live = W.alive
    vmin = float(W.vals[live].min())
    vmax = float(W.vals[live].max())
    lo_v = math.floor(math.log2(vmin)) - 4
    hi_v = math.ceil(math.log2(vmax)) + 4  # +1 for the doubled uhat is inside the slack
    lo_p, hi_p = -2, up
    lo_ph, hi_ph = down, 2
    lo_pu, hi_pu = lo_v - 2, up + hi_v
    lo_phu, hi_phu = down + lo_v, hi_v + 2
    return (lo_p, hi_p - lo_p + 1, lo_ph, hi_ph - lo_ph + 1,
            lo_pu, hi_pu - lo_pu + 1, lo_phu, hi_phu - lo_phu + 1)


def run_compiled(W, eps, N, fast, seed):
    """Run the jitted core on a prepared (sorted, possibly truncated) matrix.

    ``W`` is consumed: its links and uhat are mutated in place.
    """
    lo_p, K_p, lo_ph, K_ph, lo_pu, K_pu, lo_phu, K_phu = _windows(W, eps, N)
    max_iters = 64 * (W.r + W.c) * N + 100_000
    x, xh, y, yh, raw, status, sum_x, sum_xh = _core(
        W.r, W.c, W.rows, W.vals, W.row_head, W.col_head,
        W.row_next, W.row_prev, W.col_next, W.cols,
        W.u, W.uhat, float(eps), int(N), bool(fast),
        int(seed) & 0xFFFFFFFF, int(max_iters),
        lo_p, K_p, lo_ph, K_ph, lo_pu, K_pu, lo_phu, K_phu,
    )
    if status == 1:
        raise RuntimeError("sampler exponent window overflow (internal error)")
    if status == 2:
        raise RuntimeError("iteration cap exceeded; termination never fired")
    if sum_x != sum_xh:
        raise AssertionError("|x| and |xh| diverged")
    counters = OpCounters(
        outer_iterations=int(raw[0]),
        empty_iterations=int(raw[1]),
        increment_work=int(raw[2]),
        traversal_work=int(raw[3]),
        deletions=int(raw[4]),
        sampler_updates=int(raw[5]),
    )
    return x, xh, counters
