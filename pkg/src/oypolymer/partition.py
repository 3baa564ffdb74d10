"""Log-domain dynamic programs for the point-to-point, stationary and KPZ partition functions.

All kernels run the ``beta = 1`` model.  A general inverse temperature enters
through :func:`scaling_map` (or :func:`oypolymer.specialfn.characteristic_params`),
which maps it onto horizon and log offset.

Integrals over the grid use the trapezoid rule.  Row ``k`` of a table stores
``log Z^{(k)}(t_m)`` (point-to-point) or ``log U_k(t_m)`` (stationary), and
``logacc[k, m]`` stores the log of the cumulative trapezoid sum that feeds it,
so the path sampler can invert it by binary search.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .config import DEFAULT
from .environment import (AXIS_NEGATIVE, STREAM_BOUNDARY_WEIGHTS, GridSpec, level_prefix, stream)
from .errors import DomainError, TruncationError
from .specialfn import gamma_sample

POINT_TO_POINT = "point_to_point"
STATIONARY = "stationary"


@dataclass(frozen=True, eq=False)
class BoundaryWeights:
    """Burke seeds ``r0[k-1] = r_k(0)``; ``exp(-r0)`` are i.i.d. Gamma(theta)."""

    r0: np.ndarray
    theta: float

    @property
    def logseed(self):
        """``log U_k(0)`` for ``k = 0..n`` (entry 0 is ``log U_0(0) = 0``)."""
        return np.concatenate(([0.0], np.cumsum(self.r0)))


def sample_boundary(theta, n, rng):
    if not (np.isfinite(theta) and theta > 0):
        raise DomainError(f"theta must be > 0, got {theta!r}")
    g = np.atleast_1d(gamma_sample(theta, rng, size=int(n)))
    return BoundaryWeights(-np.log(g), float(theta))


def replica_boundary(theta, n, master_seed, replica):
    """Boundary weights from the replica's dedicated stream."""
    return sample_boundary(theta, n, stream(master_seed, replica, 0, STREAM_BOUNDARY_WEIGHTS))


@dataclass(frozen=True, eq=False)
class DPTable:
    """Forward table of one environment.

    ``logz`` and ``logacc`` have shape ``(n + 1, m_count + 1)``.  Row 0 is
    ``-B + theta t`` for stationary tables and unused (NaN) for point-to-point.
    ``logseed[k]`` is the log weight of occupying level ``k`` at time 0.
    """

    kind: str
    logz: np.ndarray
    logacc: np.ndarray
    logseed: np.ndarray
    grid: GridSpec
    prefix: np.ndarray
    theta: float = None
    params: object = None
    meta: dict = field(default_factory=dict)

    @property
    def levels(self):
        return self.logz.shape[0] - 1

    @property
    def log_total(self):
        return float(self.logz[-1, -1])


def _check_levels(env, n, grid):
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    if env.levels < n:
        raise DomainError(f"environment has {env.levels} levels, need {n}")
    if grid is not None and grid != env.grid:
        raise DomainError("grid does not match the environment grid")


def _run_levels(base_row, rows, logseed, half_delta, first):
    n1, m1 = rows.shape
    logz = np.full((n1, m1), np.nan)
    logacc = np.full((n1, m1), -np.inf)
    logz[first - 1] = base_row
    for k in range(first, n1):
        # seeds carry the increment B_k(0, t), so a level-wise constant shift cancels
        _kernels.advance_level(logz[k - 1], rows[k], logseed[k] - rows[k, 0], half_delta, logz[k], logacc[k])
    return logz, logacc


def ptp_forward(env, n, grid=None, params=None):
    """Point-to-point table ``log Z^{(k)}(t_m)``, ``k = 1..n``."""
    _check_levels(env, n, grid)
    n = int(n)
    grid = env.grid
    if grid.m_count == 0 and n > 1:
        raise DomainError("point-to-point with t_max = 0 is defined only for n = 1")
    rows = np.ascontiguousarray(env.prefix[: n + 1])
    logseed = np.full(n + 1, -np.inf)
    logseed[1] = 0.0
    logz, logacc = _run_levels(rows[1] - rows[1, 0], rows, logseed, 0.5 * grid.delta, 2)
    logz[0] = np.nan
    logacc[1] = -np.inf
    return DPTable(POINT_TO_POINT, logz, logacc, logseed, grid, rows, None, params)


def stationary_forward(env, boundary, theta, n, grid=None, params=None):
    """Stationary table ``log U_k(t_m)``, ``k = 0..n``, seeded by Burke weights at time 0."""
    _check_levels(env, n, grid)
    if not (np.isfinite(theta) and theta >= 0):
        raise DomainError(f"theta must be >= 0, got {theta!r}")
    n = int(n)
    grid = env.grid
    if len(boundary.r0) < n:
        raise DomainError(f"boundary has {len(boundary.r0)} weights, need {n}")
    rows = np.ascontiguousarray(env.prefix[: n + 1])
    logseed = np.concatenate(([0.0], np.cumsum(boundary.r0[:n])))
    base = -(rows[0] - rows[0, 0]) + theta * grid.times
    logz, logacc = _run_levels(base, rows, logseed, 0.5 * grid.delta, 1)
    return DPTable(STATIONARY, logz, logacc, logseed, grid, rows, float(theta), params)


def scaling_map(n, t, beta):
    """``Z_{n,t}(beta) = beta^{-2(n-1)} Z_{n, beta^2 t}(1)`` in law."""
    if not (np.isfinite(beta) and beta > 0):
        raise DomainError(f"beta must be > 0, got {beta!r}")
    return n, beta * beta * t, 1.0, -2.0 * (n - 1) * math.log(beta)


def burke_increments(table, tol=DEFAULT):
    """Horizontal increments ``r_k(t_m)`` and the time increments ``Y_k(0, t_m)``.

    Returns ``r`` of shape ``(n, m+1)`` (row ``k-1`` is ``r_k``) and ``y`` of
    the same shape with ``y[k-1, m] = theta t_m - logz[k, m] + logz[k, 0]``.
    The telescoping sum of ``r`` is checked against ``logz[n] + B - theta t``.
    """
    if table.kind != STATIONARY:
        raise DomainError(f"burke_increments needs a stationary table, got {table.kind}")
    logz = table.logz
    r = np.diff(logz, axis=0)
    y = table.theta * table.grid.times - logz[1:] + logz[1:, :1]
    lhs = logz[-1] - logz[0]
    resid = lhs - r.sum(axis=0)
    scale = np.maximum(1.0, np.abs(lhs))
    worst = float(np.max(np.abs(resid) / scale))
    if worst > tol.telescoping_atol:
        raise AssertionError(f"telescoping residual {worst:.3e} exceeds {tol.telescoping_atol}")
    return r, y


def backward_weights(table):
    """Backward table for the trapezoid path measure.

    ``logv[k, j]`` is the log weight of everything above level ``k`` given a
    jump into level ``k`` at node ``j`` (including that jump's quadrature
    weight); ``logs[k]`` is the log weight of all continuations of a path that
    occupies level ``k`` at time 0.  Then, with ``Z = exp(table.log_total)``,
    the quenched probability that the jump from ``k`` to ``k+1`` sits at node
    ``j`` is ``exp(logz[k, j] + logv[k+1, j]) / Z``.
    """
    n = table.levels
    m1 = table.logz.shape[1]
    rows = table.prefix
    logv = np.full((n + 2, m1), -np.inf)
    logv[n + 1, -1] = 0.0
    logs = np.full(n + 1, -np.inf)
    lh = math.log(0.5 * table.grid.delta)
    lf = math.log(table.grid.delta)
    for k in range(n, 0, -1):
        logs[k] = _kernels.backward_level(logv[k + 1], rows[k], lh, lf, logv[k])
        logs[k] -= rows[k, 0]
    return logv, logs


# ---------------------------------------------------------------------------
# streaming final values (no table kept)


def stationary_final(master_seed, replica, n, theta, grid, factors=(1,), boundary=None):
    """``log U_k(t_max)`` for ``k = 0..n`` on ``grid`` and on coarsenings of it.

    Levels are generated one at a time from their own streams, so memory is
    ``O(m_count)``.  Returns an array of shape ``(len(factors), n + 1)``.
    """
    if boundary is None:
        boundary = replica_boundary(theta, n, master_seed, replica)
    logseed = boundary.logseed[: n + 1]
    out = np.empty((len(factors), n + 1))
    b0 = level_prefix(master_seed, replica, 0, grid)
    times = grid.times
    prev = []
    for f in factors:
        if grid.m_count % f:
            raise DomainError(f"grid with {grid.m_count} cells cannot be coarsened by {f}")
        prev.append(-b0[::f] + theta * times[::f])
    for i in range(len(factors)):
        out[i, 0] = prev[i][-1]
    for k in range(1, n + 1):
        bk = level_prefix(master_seed, replica, k, grid)
        for i, f in enumerate(factors):
            row = np.ascontiguousarray(bk[::f])
            cur = np.empty_like(row)
            acc = np.empty_like(row)
            _kernels.advance_level(prev[i], row, logseed[k], 0.5 * grid.delta * f, cur, acc)
            prev[i] = cur
            out[i, k] = cur[-1]
    return out


def ptp_final(master_seed, replica, n, grid, factors=(1,)):
    """Streaming ``log Z^{(n)}(t_max)`` on ``grid`` and its coarsenings."""
    if grid.m_count == 0 and n > 1:
        raise DomainError("point-to-point with t_max = 0 is defined only for n = 1")
    out = np.empty(len(factors))
    b1 = level_prefix(master_seed, replica, 1, grid)
    prev = [np.ascontiguousarray(b1[::f]) for f in factors]
    for k in range(2, n + 1):
        bk = level_prefix(master_seed, replica, k, grid)
        for i, f in enumerate(factors):
            row = np.ascontiguousarray(bk[::f])
            cur = np.empty_like(row)
            acc = np.empty_like(row)
            _kernels.advance_level(prev[i], row, -np.inf, 0.5 * grid.delta * f, cur, acc)
            prev[i] = cur
    for i in range(len(factors)):
        out[i] = prev[i][-1]
    return out


# ---------------------------------------------------------------------------
# renormalized KPZ partition function


@dataclass(frozen=True)
class PhiSpec:
    """Bounded initial profile ``phi`` with declared sup-norm bound ``K``.

    ``descriptor`` is a short text form (``const:c``, ``sin:a``, ``tanh:a``,
    ``step:a``) so that a profile can travel through configs and worker pools.
    """

    descriptor: str
    bound: float

    def __post_init__(self):
        if not (np.isfinite(self.bound) and self.bound >= 0):
            raise DomainError(f"phi needs a finite bound K >= 0, got {self.bound!r}")
        _phi_kind(self.descriptor)

    @classmethod
    def parse(cls, text):
        kind, a = _phi_kind(text)
        return cls(text, abs(a))

    @classmethod
    def constant(cls, c):
        return cls(f"const:{float(c)!r}", abs(float(c)))

    def __call__(self, x):
        kind, a = _phi_kind(self.descriptor)
        x = np.asarray(x, dtype=float)
        if kind == "const":
            v = np.full_like(x, a)
        elif kind == "sin":
            v = a * np.sin(x)
        elif kind == "tanh":
            v = a * np.tanh(x)
        else:
            v = np.where(x >= 0, a, -a)
        if np.any(np.abs(v) > self.bound * (1 + 1e-12)):
            raise DomainError(f"phi exceeds its declared bound K={self.bound}")
        return v


def _phi_kind(text):
    kind, _, arg = str(text).partition(":")
    if kind not in ("const", "sin", "tanh", "step"):
        raise DomainError(f"unknown phi descriptor {text!r}; use const:c, sin:a, tanh:a or step:a")
    try:
        a = float(arg)
    except ValueError:
        raise DomainError(f"phi descriptor {text!r} needs a numeric amplitude") from None
    if not np.isfinite(a):
        raise DomainError(f"phi amplitude must be finite, got {a!r}")
    return kind, a


def _two_sided(pos, neg):
    """Path on ``[-t_neg, t_max]`` (node 0 is ``-t_neg``) from the two axis prefixes."""
    if neg is None or len(neg) == 1:
        return np.ascontiguousarray(pos)
    return np.concatenate((neg[::-1], pos[1:]))


def _kpz_explicit(rows, theta, n, grid, phi_values, logseed, phi_tail):
    """Boundary integral over ``s0 in [-t_neg, t]`` plus Burke seeds at ``-t_neg``.

    ``rows`` yields the two-sided level paths ``k = 0..n`` in order.  Returns
    the log partition function, the same quantity with ``phi = 0`` and the
    fraction ``q`` of the total carried by the seeds at ``-t_neg``.
    """
    half = 0.5 * grid.delta
    it = iter(rows)
    b0 = next(it)
    times = (np.arange(b0.shape[0]) - grid.m_neg) * grid.delta
    base0 = -b0 + theta * times
    u0_tail = -b0[0] - theta * grid.t_neg
    prev = (phi_values + base0, base0, phi_values + base0)
    seeds_scale = (phi_tail, 0.0, None)
    for k in range(1, n + 1):
        bk = next(it)
        nxt = []
        for p, c in zip(prev, seeds_scale):
            seed = -np.inf if c is None else c + u0_tail + logseed[k] - bk[0]
            cur = np.empty_like(p)
            acc = np.empty_like(p)
            _kernels.advance_level(p, bk, seed, half, cur, acc)
            nxt.append(cur)
        prev = tuple(nxt)
    total, plain, free = (float(p[-1]) for p in prev)
    q = -math.expm1(free - total) if free > -np.inf else 1.0
    return total, plain, q


def _truncation_bound(q, phi):
    # the true pre-(-T) mass lies within exp(+-K) of the phi-free one; we used exp(phi_tail)
    return math.log1p(q * math.expm1(2.0 * phi.bound))


def kpz_logZ(env, tau, n, theta, phi=None, boundary=None, log_offset=0.0, phi_time_scale=1.0,
             tol=DEFAULT, return_plain=False):
    """``log Z_n^phi(tau) = -tau sqrt(n)/2 + log_offset + log Z~`` for the scaled model.

    ``env`` carries ``n_levels`` levels on horizon ``t``; ``theta`` is the
    scaled boundary parameter.  Without ``phi`` the Burke seeds at time 0 give
    the exact stationary value.  With ``phi`` the boundary integral runs over
    ``[-t_neg, t]`` (``env.grid.t_neg > 0`` required) with weight
    ``exp(phi(-s0/phi_time_scale))``, and the mass before ``-t_neg`` enters
    through Burke seeds at ``-t_neg``.  In scaled time ``phi(-s/sqrt(n))``
    becomes ``phi(-s/(beta**2 sqrt(n)))``, so ``phi_time_scale = beta0**2``.
    A :class:`TruncationError` is raised when the resulting log error bound
    exceeds ``tol.kpz_epsilon``.  With ``return_plain`` the ``phi = 0`` value of
    the same explicit construction is returned as well.
    """
    n_levels = env.levels
    if boundary is None:
        boundary = replica_boundary(theta, n_levels, env.master_seed, env.replica)
    shift = -tau * math.sqrt(n) / 2.0 + log_offset
    if phi is None:
        table = stationary_forward(env, boundary, theta, n_levels)
        return shift + table.log_total
    if env.grid.m_neg == 0 or env.prefix_neg is None:
        raise DomainError("phi requires an environment with a negative time axis (t_neg > 0)")
    rows = (_two_sided(env.prefix[k], env.prefix_neg[k]) for k in range(n_levels + 1))
    return _kpz_finish(rows, env.grid, tau, n, theta, phi, boundary, shift, phi_time_scale, tol, return_plain)


def _kpz_finish(rows, grid, tau, n, theta, phi, boundary, shift, phi_time_scale, tol, return_plain):
    times = (np.arange(grid.m_neg + grid.m_count + 1) - grid.m_neg) * grid.delta
    phi_vals = phi(-times / phi_time_scale)
    phi_tail = float(phi(np.array([grid.t_neg / phi_time_scale]))[0])
    total, plain, q = _kpz_explicit(rows, theta, boundary.r0.shape[0], grid, phi_vals, boundary.logseed, phi_tail)
    bound = _truncation_bound(q, phi)
    if bound > tol.kpz_epsilon:
        raise TruncationError(
            f"boundary mass before -{grid.t_neg:g} bounds the log error by {bound:.3e} "
            f"> {tol.kpz_epsilon:g}; increase t_neg", bound=bound)
    if return_plain:
        return shift + total, shift + plain
    return shift + total


def kpz_final(master_seed, replica, tau, n, n_levels, theta, grid, phi=None, log_offset=0.0,
              phi_time_scale=1.0, tol=DEFAULT, return_plain=False):
    """Streaming :func:`kpz_logZ`: levels are generated one at a time."""
    boundary = replica_boundary(theta, n_levels, master_seed, replica)
    shift = -tau * math.sqrt(n) / 2.0 + log_offset
    if phi is None:
        return shift + stationary_final(master_seed, replica, n_levels, theta, grid, boundary=boundary)[0, -1]
    if grid.m_neg == 0:
        raise DomainError("phi requires a grid with a negative time axis (t_neg > 0)")
    rows = (_two_sided(level_prefix(master_seed, replica, k, grid),
                       level_prefix(master_seed, replica, k, grid, AXIS_NEGATIVE)) for k in range(n_levels + 1))
    return _kpz_finish(rows, grid, tau, n, theta, phi, boundary, shift, phi_time_scale, tol, return_plain)


def kpz_negative_horizon(n_levels, theta, scale_mult=12.0):
    """Starting ``t_neg`` for the explicit boundary integral.

    The boundary entry point fluctuates on the scale ``n^{2/3} theta^{-4/3}``
    around 0 in the characteristic direction; start well beyond it.
    """
    return scale_mult * (n_levels ** (2.0 / 3.0)) * theta ** (-4.0 / 3.0) + 5.0 / theta
