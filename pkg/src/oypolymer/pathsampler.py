"""Quenched path measures: backward sampling and exact grid marginals.

Jump times live on grid nodes.  The law sampled here is the one whose total
mass is exactly the trapezoid sum stored in the forward table: a jump from
level ``k-1`` into ``k`` at node ``j`` carries quadrature weight ``delta/2``
at the two ends of the admissible range and ``delta`` inside it.  Two
consecutive jumps may therefore share a node (their continuum times fall in
the same cell), so emitted samples satisfy ``sigma_{k-1} <= sigma_k``.

Tail probabilities split the mass of an interior node equally between its
two adjacent cells; node 0 belongs to the first cell and the last node to
the last cell.  With this convention ``Q(sigma_0 >= t_max) = 0``.
"""

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import DomainError
from .partition import POINT_TO_POINT, STATIONARY, backward_weights


@dataclass(frozen=True, eq=False)
class PathSample:
    """A batch of sampled paths.

    ``nodes[s, k]`` is the grid node of ``sigma_k`` (jump from level ``k`` to
    ``k+1``), ``-1`` if that jump happened before time 0.  Column 0 is always
    ``-1`` for point-to-point samples, where ``sigma_0`` does not exist.
    ``entry[s]`` is ``-1`` for a positive boundary entry (``sigma_0 >= 0``)
    and otherwise the level occupied at time 0.
    """

    nodes: np.ndarray
    entry: np.ndarray
    delta: float
    t_max: float
    kind: str

    def __len__(self):
        return self.nodes.shape[0]

    @property
    def sigma(self):
        """Jump times with NaN for unresolved (pre-zero or absent) jumps."""
        t = np.minimum(self.nodes * self.delta, self.t_max)
        return np.where(self.nodes >= 0, t, np.nan)

    @property
    def positive(self):
        return self.entry < 0


def _uniforms(rng, size, n):
    # (0, 1] so that log never sees 0
    return 1.0 - rng.random((size, 3 * n + 2))


def _sample(table, rng, size, base):
    n = table.levels
    if table.grid.m_count == 0 and not (table.kind == STATIONARY or n == 1):
        raise DomainError("empty support: t_max = 0")
    nodes = np.empty((size, n), dtype=np.int64)
    entry = np.empty(size, dtype=np.int64)
    u = _uniforms(rng, size, n)
    _kernels.sample_nodes(table.logz, table.logacc, table.logseed, table.prefix,
                          n, base, u, nodes, entry)
    return PathSample(nodes, entry, table.grid.delta, table.grid.t_max, table.kind)


def sample_ptp_path(table, env=None, rng=None, size=1):
    """Backward-sample ``size`` paths from a point-to-point table."""
    if table.kind != POINT_TO_POINT:
        raise DomainError(f"expected a point-to-point table, got {table.kind}")
    return _sample(table, rng, size, base=1)


def sample_stationary_path(table, boundary=None, env=None, rng=None, size=1):
    """Backward-sample ``size`` paths from a stationary table."""
    if table.kind != STATIONARY:
        raise DomainError(f"expected a stationary table, got {table.kind}")
    return _sample(table, rng, size, base=0)


@dataclass(frozen=True, eq=False)
class QuenchedMarginals:
    """Exact grid marginals of the jump nodes under one environment.

    ``prob[k, j] = Q(sigma_k = node j)``; ``entry[j] = Q(path occupies level j
    at time 0)`` for ``j >= 1`` (stationary boundary entries, or the start
    level of a point-to-point path).
    """

    prob: np.ndarray
    entry: np.ndarray
    times: np.ndarray
    kind: str

    def positive_mass(self, k=0):
        return float(self.prob[k].sum())

    def tail(self, k, i):
        """``Q(sigma_k >= t_i)`` with the half-cell split at node ``i``."""
        row = self.prob[k]
        m = row.shape[0] - 1
        if i > m:
            return 0.0
        share = 1.0 if i == 0 else (0.0 if i == m else 0.5)
        return float(row[i + 1:].sum() + share * row[i])

    def mean_positive(self, k=0):
        """``E^Q[sigma_k^+]`` (unresolved jumps contribute 0)."""
        return float(self.prob[k] @ self.times)

    def mean_abs_dev(self, k, centre):
        """``E^Q|sigma_k - centre|``; unresolved jumps are placed at time 0."""
        p = self.prob[k]
        miss = max(0.0, 1.0 - p.sum())
        return float(p @ np.abs(self.times - centre) + miss * abs(centre))

    def tail_dev(self, k, centre, radius):
        """``Q(|sigma_k - centre| > radius)`` with unresolved jumps at time 0."""
        p = self.prob[k]
        miss = max(0.0, 1.0 - p.sum())
        out = float(p[np.abs(self.times - centre) > radius].sum())
        return out + (miss if abs(centre) > radius else 0.0)


def quenched_marginals(table, levels=None):
    """Exact per-level node marginals from forward and backward tables."""
    logv, logs = backward_weights(table)
    n = table.levels
    z = table.log_total
    prob = np.zeros((n, table.logz.shape[1]))
    first = 0 if table.kind == STATIONARY else 1
    ks = range(first, n) if levels is None else levels
    for k in ks:
        prob[k] = np.exp(table.logz[k] + logv[k + 1] - z)
    entry = np.zeros(n + 1)
    entry[1:] = np.exp(table.logseed[1:] + logs[1:] - z)
    return QuenchedMarginals(prob, entry, table.grid.times, table.kind)


def quenched_sigma0_tail(table, boundary=None, env=None, u=0.0, marginals=None):
    """Exact quenched ``Q(sigma_0 >= u)`` on the grid (no sampling)."""
    if table.kind != STATIONARY:
        raise DomainError("sigma_0 exists only for stationary tables")
    if u < 0:
        raise DomainError(f"u must be >= 0, got {u!r}")
    if u > table.grid.t_max:
        return 0.0
    i = table.grid.index(u)
    if marginals is None:
        marginals = quenched_marginals(table, levels=[0])
    return marginals.tail(0, i)


@dataclass(frozen=True)
class DeviationSummary:
    gamma: float
    level: int
    centre: float
    mean_abs_dev: float
    se: float
    radii: tuple
    tail_freq: tuple
    tail_se: tuple
    replicas: int
    unresolved: float


def sigma_bulk_deviation(tables, gamma, radii=(), rng=None, samples=None):
    """Annealed ``E|sigma_l - gamma t|`` with ``l = floor(gamma n)``, and tail frequencies.

    ``tables`` is one table or a sequence of tables from independent
    replicas.  By default the quenched expectation of each table is computed
    exactly from its marginals; with ``samples`` set, ``samples`` paths per
    table are drawn from ``rng`` instead.  Standard errors come from the
    replica spread.
    """
    if not 0.0 < gamma < 1.0:
        raise DomainError(f"gamma must lie in (0, 1), got {gamma!r}")
    if hasattr(tables, "logz"):
        tables = [tables]
    devs, tails, miss = [], [], []
    for table in tables:
        n = table.levels
        level = int(math.floor(gamma * n))
        if level < 1 or level >= n:
            raise DomainError(f"gamma*n must give a jump index in [1, n-1], got {gamma * n!r}")
        centre = gamma * table.grid.t_max
        if samples is None:
            qm = quenched_marginals(table, levels=[level])
            devs.append(qm.mean_abs_dev(level, centre))
            tails.append([qm.tail_dev(level, centre, r) for r in radii])
            miss.append(max(0.0, 1.0 - qm.prob[level].sum()))
        else:
            ps = (sample_ptp_path if table.kind == POINT_TO_POINT else sample_stationary_path)(
                table, rng=rng, size=samples)
            s = ps.nodes[:, level] * table.grid.delta
            unresolved = ps.nodes[:, level] < 0
            s = np.where(unresolved, 0.0, s)
            d = np.abs(s - centre)
            devs.append(float(d.mean()))
            tails.append([float(np.mean(d > r)) for r in radii])
            miss.append(float(unresolved.mean()))
    devs = np.asarray(devs)
    tails = np.asarray(tails, dtype=float).reshape(len(devs), len(radii))
    r = len(devs)
    se = float(devs.std(ddof=1) / math.sqrt(r)) if r > 1 else float("nan")
    tail_se = tuple(float(tails[:, i].std(ddof=1) / math.sqrt(r)) if r > 1 else float("nan")
                    for i in range(len(radii)))
    return DeviationSummary(gamma, level, centre, float(devs.mean()), se, tuple(radii),
                            tuple(float(x) for x in tails.mean(axis=0)), tail_se, r,
                            float(np.mean(miss)))


def write_paths_csv(path, samples, replica=0, append=False):
    """Rows ``replica, sample, k, node, time`` for every resolved jump."""
    mode = "a" if append else "w"
    with open(path, mode, newline="") as fh:
        w = csv.writer(fh)
        if not append:
            w.writerow(["replica", "sample", "k", "index", "time"])
        for s in range(len(samples)):
            for k in range(samples.nodes.shape[1]):
                j = int(samples.nodes[s, k])
                if j >= 0:
                    w.writerow([replica, s, k, j, repr(min(j * samples.delta, samples.t_max))])
