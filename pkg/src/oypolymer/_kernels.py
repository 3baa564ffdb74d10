"""Compiled inner loops for the log-domain dynamic programs and path sampling.

The forward accumulator works in the linear domain against a running log
scale ``S`` and rescales only when the accumulator or a new summand drifts far
from it, so each node costs one ``exp`` and one ``log``.
"""

import numba as nb
import numpy as np

_NEG_INF = -np.inf


@nb.njit(cache=True)
def advance_level(prev_logz, bk, log_seed, half_delta, out_logz, out_logacc):
    """One level of the trapezoid recursion.

    ``out_logacc[i] = log sum_{j<i} half_delta * (e^{g_j} + e^{g_{j+1}})`` with
    ``g = prev_logz - bk``, and ``out_logz = bk + logaddexp(log_seed, out_logacc)``.
    """
    m1 = prev_logz.shape[0]
    S = _NEG_INF
    acc = 0.0
    prev_e = 0.0
    g0 = prev_logz[0] - bk[0]
    if g0 > _NEG_INF:
        S = g0
        prev_e = 1.0
    out_logacc[0] = _NEG_INF
    for i in range(1, m1):
        g = prev_logz[i] - bk[i]
        if g > _NEG_INF:
            if S == _NEG_INF:
                S = g
            elif g - S > 600.0:
                f = np.exp(S - g)
                acc *= f
                prev_e *= f
                S = g
            e = np.exp(g - S)
        else:
            e = 0.0
        acc += (prev_e + e) * half_delta
        if acc > 1e280:
            r = np.log(acc)
            f = np.exp(-r)
            acc *= f
            e *= f
            S += r
        prev_e = e
        if acc > 0.0:
            out_logacc[i] = np.log(acc) + S
        else:
            out_logacc[i] = _NEG_INF
    for i in range(m1):
        a = out_logacc[i]
        if log_seed == _NEG_INF:
            c = a
        elif a == _NEG_INF:
            c = log_seed
        elif a > log_seed:
            c = a + np.log1p(np.exp(log_seed - a))
        else:
            c = log_seed + np.log1p(np.exp(a - log_seed))
        out_logz[i] = bk[i] + c


@nb.njit(cache=True)
def _lae(a, b):
    if a == _NEG_INF:
        return b
    if b == _NEG_INF:
        return a
    if a > b:
        return a + np.log1p(np.exp(b - a))
    return b + np.log1p(np.exp(a - b))


@nb.njit(cache=True)
def backward_level(next_logv, bk, log_half, log_full, out_logv):
    """One level of the backward (suffix) recursion for the trapezoid node measure.

    With ``h = bk + next_logv`` and exclusive suffix sums ``T``::

        V(j) = e^{-bk_j} (c_j T(j) + d_j h(j)),  c_0 = delta/2, c_j = delta,
                                                  d_0 = 0,       d_j = delta/2.

    Returns ``log sum_j e^{h_j}`` (the weight of entering this level at time 0).
    """
    m1 = bk.shape[0]
    T = _NEG_INF
    for j in range(m1 - 1, -1, -1):
        h = bk[j] + next_logv[j]
        if j == 0:
            v = log_half + T if T > _NEG_INF else _NEG_INF
        else:
            a = log_full + T if T > _NEG_INF else _NEG_INF
            b = log_half + h if h > _NEG_INF else _NEG_INF
            v = _lae(a, b)
        out_logv[j] = v - bk[j] if v > _NEG_INF else _NEG_INF
        T = _lae(T, h)
    return T


@nb.njit(cache=True)
def _search(logacc_row, i, target):
    """Smallest cell ``j`` in ``[0, i)`` with ``logacc_row[j + 1] >= target``."""
    lo = 0
    hi = i - 1
    while lo < hi:
        mid = (lo + hi) // 2
        if logacc_row[mid + 1] >= target:
            hi = mid
        else:
            lo = mid + 1
    return lo


@nb.njit(cache=True)
def sample_nodes(logz, logacc, logseed, prefix, top, base, uniforms, out_nodes, out_entry):
    """Backward sampling of jump nodes.

    ``out_nodes[s, k]`` is the grid node of the jump from level ``k`` to
    ``k + 1`` (``-1`` when it happened before time 0).  ``base`` is the lowest
    level of the table (0 for stationary, 1 for point-to-point).
    ``out_entry[s]`` is the level occupied at time 0, or -1 for a
    positive boundary entry.
    """
    n_samples = out_nodes.shape[0]
    m = logz.shape[1] - 1
    for s in range(n_samples):
        for k in range(out_nodes.shape[1]):
            out_nodes[s, k] = -1
        k = top
        i = m
        u = 0
        while True:
            if k == 0:
                out_entry[s] = -1
                break
            ls = logseed[k] - prefix[k, 0]
            total = _lae(ls, logacc[k, i])
            if k == base:
                # base level of a point-to-point table carries only the seed
                out_entry[s] = k
                break
            x = np.log(uniforms[s, u]) + total
            u += 1
            if x < ls or logacc[k, i] == _NEG_INF:
                out_entry[s] = k
                break
            target = np.log(uniforms[s, u]) + logacc[k, i]
            u += 1
            j = _search(logacc[k], i, target)
            ga = logz[k - 1, j] - prefix[k, j]
            gb = logz[k - 1, j + 1] - prefix[k, j + 1]
            p_hi = 1.0 / (1.0 + np.exp(ga - gb)) if gb > _NEG_INF else 0.0
            node = j + 1 if uniforms[s, u] < p_hi else j
            u += 1
            out_nodes[s, k - 1] = node
            k -= 1
            i = node
