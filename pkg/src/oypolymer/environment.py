"""Discretised Brownian environments with replica-indexed, reproducible streams.

Every level ``k`` (``0`` is the boundary motion ``B``, ``1..n`` are the level
motions ``B_k``) draws its Gaussian increments from its own Philox stream whose
key is a hash of ``(master_seed, replica, level, axis)``.  A level can therefore
be regenerated on its own, in any order, on any worker, and it comes out
bit-identical.  The DP streaming path relies on this to avoid storing the
whole environment.
"""

import math
import struct
from dataclasses import dataclass, field

import numpy as np

from .config import DEFAULT
from .errors import BudgetError, DomainError

AXIS_POSITIVE = 0
AXIS_NEGATIVE = 1
STREAM_BOUNDARY_WEIGHTS = 2
STREAM_PATHS = 3
STREAM_DUFRESNE = 4

_MAGIC = b"OYENV1\x00\x00"
_HEADER = struct.Struct("<8sqqqdddqq")


def stream(master_seed, replica, level=0, tag=AXIS_POSITIVE):
    """Counter-based generator keyed by ``(master_seed, replica, level, tag)``."""
    ss = np.random.SeedSequence([int(master_seed) & 0xFFFFFFFFFFFFFFFF, int(replica), int(level), int(tag)])
    key = ss.generate_state(2, np.uint64)
    return np.random.Generator(np.random.Philox(key=key))


@dataclass(frozen=True)
class GridSpec:
    """Uniform time grid ``t_m = m * delta`` on ``[0, t_max]``.

    ``delta`` is the effective step ``t_max / m_count``, so the last node is
    exactly ``t_max``.  ``t_neg`` extends the grid backwards (same step) for
    the boundary integral of the perturbed KPZ partition function.
    """

    t_max: float
    delta: float
    m_count: int
    t_neg: float = 0.0
    m_neg: int = 0

    @classmethod
    def build(cls, t_max, delta, t_neg=0.0):
        if not (np.isfinite(t_max) and t_max >= 0):
            raise DomainError(f"t_max must be >= 0, got {t_max!r}")
        if not (np.isfinite(delta) and delta > 0):
            raise DomainError(f"delta must be > 0, got {delta!r}")
        if not (np.isfinite(t_neg) and t_neg >= 0):
            raise DomainError(f"t_neg must be >= 0, got {t_neg!r}")
        if t_max == 0.0:
            m = 0
            step = float(delta)
        else:
            m = max(1, math.ceil(t_max / delta - 1e-9))
            step = t_max / m
        m_neg = math.ceil(t_neg / step - 1e-9) if t_neg > 0 else 0
        return cls(float(t_max), step, m, m_neg * step, m_neg)

    @property
    def times(self):
        return np.arange(self.m_count + 1) * self.delta if self.m_count else np.zeros(1)

    def index(self, s):
        """Grid index of time ``s``; negative times map to negative indices."""
        x = s / self.delta
        m = int(round(x))
        if abs(x - m) > 1e-7 * max(1.0, abs(x)) or m > self.m_count or m < -self.m_neg:
            raise IndexError(f"time {s!r} is not a node of {self}")
        return m

    def time(self, m):
        return self.t_max if m == self.m_count else m * self.delta

    def refine(self, factor=2):
        return GridSpec(self.t_max, self.delta / factor, self.m_count * factor,
                        self.t_neg, self.m_neg * factor)


def auto_delta(theta, tol=DEFAULT):
    """Default step: resolution tracks the ``1/theta**2`` scale of the boundary factor."""
    return min(tol.delta_cap, tol.delta_scale / (theta * theta))


def level_prefix(master_seed, replica, level, grid, axis=AXIS_POSITIVE):
    """Prefix sums of one Brownian level on the grid (index 0 is time 0)."""
    m = grid.m_count if axis == AXIS_POSITIVE else grid.m_neg
    out = np.empty(m + 1)
    out[0] = 0.0
    if m:
        z = stream(master_seed, replica, level, axis).standard_normal(m)
        z *= math.sqrt(grid.delta)
        np.cumsum(z, out=out[1:])
    return out


@dataclass(frozen=True, eq=False)
class Environment:
    """Boundary motion (row 0) and level motions (rows 1..n) as prefix sums.

    ``prefix[k, m] = B_k(t_m)``; ``prefix_neg[k, j] = B_k(-j * delta)`` when
    the grid has a negative extension.
    """

    levels: int
    grid: GridSpec
    prefix: np.ndarray
    prefix_neg: np.ndarray = None
    master_seed: int = None
    replica: int = None
    meta: dict = field(default_factory=dict)

    def increment(self, k, s, t):
        return increment(self, k, s, t)

    def value(self, k, s):
        m = self.grid.index(s)
        if m >= 0:
            return self.prefix[k, m]
        return self.prefix_neg[k, -m]

    def subsample(self, factor):
        if self.grid.m_count % factor or self.grid.m_neg % factor:
            raise DomainError(f"grid with {self.grid.m_count} cells cannot be coarsened by {factor}")
        g = GridSpec(self.grid.t_max, self.grid.delta * factor, self.grid.m_count // factor,
                     self.grid.t_neg, self.grid.m_neg // factor)
        neg = None if self.prefix_neg is None else self.prefix_neg[:, ::factor].copy()
        return Environment(self.levels, g, self.prefix[:, ::factor].copy(), neg,
                           self.master_seed, self.replica, dict(self.meta))

    def scaled(self, beta):
        """Environment with every motion multiplied by ``beta`` (variance ``beta**2``)."""
        neg = None if self.prefix_neg is None else self.prefix_neg * beta
        return Environment(self.levels, self.grid, self.prefix * beta, neg,
                           self.master_seed, self.replica, dict(self.meta, beta=beta))

    def shifted(self, constants):
        """Add a constant to every level's path (increments unchanged)."""
        c = np.asarray(constants, dtype=float).reshape(-1, 1)
        neg = None if self.prefix_neg is None else self.prefix_neg + c
        return Environment(self.levels, self.grid, self.prefix + c, neg,
                           self.master_seed, self.replica, dict(self.meta))

    # binary layout: header, then level-major little-endian float64 rows
    def dump(self, path):
        seed = -1 if self.master_seed is None else int(self.master_seed)
        rep = -1 if self.replica is None else int(self.replica)
        header = _HEADER.pack(_MAGIC, self.levels, self.grid.m_count, self.grid.m_neg,
                              self.grid.delta, self.grid.t_max, self.grid.t_neg, seed, rep)
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(np.ascontiguousarray(self.prefix, dtype="<f8").tobytes())
            if self.grid.m_neg:
                fh.write(np.ascontiguousarray(self.prefix_neg, dtype="<f8").tobytes())

    @classmethod
    def load(cls, path):
        with open(path, "rb") as fh:
            raw = fh.read()
        magic, n, m, m_neg, delta, t_max, t_neg, seed, rep = _HEADER.unpack_from(raw)
        if magic != _MAGIC:
            raise ValueError(f"{path} is not an environment dump")
        off = _HEADER.size
        size = (n + 1) * (m + 1)
        prefix = np.frombuffer(raw, dtype="<f8", count=size, offset=off).reshape(n + 1, m + 1).copy()
        neg = None
        if m_neg:
            off += size * 8
            neg = np.frombuffer(raw, dtype="<f8", count=(n + 1) * (m_neg + 1),
                                offset=off).reshape(n + 1, m_neg + 1).copy()
        grid = GridSpec(t_max, delta, m, t_neg, m_neg)
        return cls(n, grid, prefix, neg, None if seed < 0 else seed, None if rep < 0 else rep)


def _check_budget(n, grid, tol):
    cells = (n + 1) * (grid.m_count + grid.m_neg + 2)
    if cells > tol.max_cells:
        raise BudgetError(f"environment needs {cells} cells, budget is {tol.max_cells}")


def generate(n, grid, master_seed, replica, tol=DEFAULT):
    """Brownian environment with ``n`` levels plus the boundary motion."""
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    _check_budget(n, grid, tol)
    prefix = np.empty((n + 1, grid.m_count + 1))
    for k in range(n + 1):
        prefix[k] = level_prefix(master_seed, replica, k, grid)
    neg = None
    if grid.m_neg:
        neg = np.empty((n + 1, grid.m_neg + 1))
        for k in range(n + 1):
            neg[k] = level_prefix(master_seed, replica, k, grid, AXIS_NEGATIVE)
    return Environment(n, grid, prefix, neg, int(master_seed), int(replica))


def zero_environment(n, grid):
    neg = np.zeros((n + 1, grid.m_neg + 1)) if grid.m_neg else None
    return Environment(int(n), grid, np.zeros((n + 1, grid.m_count + 1)), neg)


def increment(env, k, s, t):
    """``B_k(t) - B_k(s)`` for grid times ``s <= t``; off-grid times raise ``IndexError``."""
    if not (0 <= k <= env.levels):
        raise IndexError(f"level {k} outside 0..{env.levels}")
    if s > t:
        raise DomainError(f"need s <= t, got s={s}, t={t}")
    return env.value(k, t) - env.value(k, s)
