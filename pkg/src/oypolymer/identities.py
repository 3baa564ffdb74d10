"""Statistical checks of the exact identities of the stationary and scaled models.

Each check returns an :class:`IdentityVerdict`.  Replicas are independent
environments keyed by ``(master_seed, replica)``; aggregation is in replica
order, so a verdict is a pure function of its arguments.
"""

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .config import DEFAULT
from .environment import STREAM_DUFRESNE, STREAM_PATHS, GridSpec, auto_delta, generate, level_prefix, stream
from .errors import DomainError, TruncationError
from .parallel import replica_map
from .partition import (BoundaryWeights, burke_increments, ptp_final, ptp_forward, replica_boundary,
                        stationary_final, stationary_forward)
from .pathsampler import quenched_marginals, sample_stationary_path
from .specialfn import psi0, psi1


@dataclass
class IdentityVerdict:
    name: str
    statistic: float
    threshold: float
    p_value: float = None
    n_replicas: int = 0
    passed: bool = False
    details: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps(_plain(asdict(self)), sort_keys=True)


def _plain(obj):
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer, np.bool_)):
        return obj.item()
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    return obj


def write_verdicts(path, verdicts):
    with open(path, "a") as fh:
        for v in verdicts:
            fh.write(v.to_json() + "\n")


def _check_theta(theta):
    if not (np.isfinite(theta) and theta > 0):
        raise DomainError(f"theta must be > 0, got {theta!r}")


def _check_n(n, minimum=0):
    if int(n) != n or n < minimum:
        raise DomainError(f"n must be an integer >= {minimum}, got {n!r}")
    return int(n)


def _grid(t, delta, theta):
    return GridSpec.build(t, delta if delta is not None else auto_delta(theta))


def _fine_grid(t, delta, theta):
    """Grid at half the policy step with an even cell count (so it coarsens by 2)."""
    g = _grid(t, None if delta is None else delta, theta)
    fine = GridSpec.build(t, g.delta / 2.0)
    if fine.m_count % 2:
        fine = GridSpec.build(t, t / (fine.m_count + 1))
    return fine


def _se(x):
    x = np.asarray(x, dtype=float)
    return float(x.std(ddof=1) / math.sqrt(len(x))) if len(x) > 1 else float("nan")


def _var_se(x):
    """Standard error of the sample variance from the spread of squared deviations."""
    d = (np.asarray(x) - np.mean(x)) ** 2
    return _se(d)


# ---------------------------------------------------------------------------
# per-replica workers (module level so they pickle)


def _stationary_two_grid(seed, replica, n, theta, grid):
    if n == 0:
        b = level_prefix(seed, replica, 0, grid)
        v = -b[-1] + theta * grid.t_max
        return np.array([v, v])
    return stationary_final(seed, replica, n, theta, grid, factors=(1, 2))[:, -1]


def _stationary_sigma(seed, replica, n, theta, grid, factors=(1, 2)):
    """``(log Z, E^Q sigma_0^+)`` on the grid and its coarsenings."""
    out = np.empty((len(factors), 2))
    if n == 0:
        b = level_prefix(seed, replica, 0, grid)
        out[:, 0] = -b[-1] + theta * grid.t_max
        out[:, 1] = grid.t_max
        return out
    env = generate(n, grid, seed, replica)
    bw = replica_boundary(theta, n, seed, replica)
    for i, f in enumerate(factors):
        e = env if f == 1 else env.subsample(f)
        tab = stationary_forward(e, bw, theta, n)
        qm = quenched_marginals(tab, levels=[0])
        out[i] = tab.log_total, qm.mean_positive(0)
    return out


def _stationary_levels(seed, replica, n, theta, grid):
    return stationary_final(seed, replica, n, theta, grid)[0]


def _stationary_value(seed, replica, n, theta, grid):
    return stationary_final(seed, replica, n, theta, grid)[0, -1]


def _last_jump_sample(seed, replica, n, theta, grid, k):
    """One annealed draw of ``sigma_k`` (NaN if it happened before time 0)."""
    env = generate(n, grid, seed, replica)
    tab = stationary_forward(env, replica_boundary(theta, n, seed, replica), theta, n)
    ps = sample_stationary_path(tab, rng=stream(seed, replica, 0, STREAM_PATHS))
    return float(ps.sigma[0, k])


def _dufresne_sample(seed, replica, nu, horizon, delta):
    m = int(math.ceil(horizon / delta))
    z = stream(seed, replica, 0, STREAM_DUFRESNE).standard_normal(m)
    w = np.concatenate(([0.0], np.cumsum(z) * math.sqrt(delta)))
    u = np.arange(m + 1) * delta
    x = math.sqrt(2.0) * w - nu * u
    top = x.max()
    e = np.exp(x - top)
    integral = delta * (e.sum() - 0.5 * (e[0] + e[-1]))
    return math.exp(-top) / integral


def _direct_ptp(seed, replica, n, t, beta, delta_direct):
    grid = GridSpec.build(t, delta_direct)
    env = generate(n, grid, seed, replica).scaled(beta)
    return ptp_forward(env, n).log_total


def _mapped_ptp(seed, replica, n, t, beta, delta):
    grid = GridSpec.build(beta * beta * t, delta)
    return ptp_final(seed, replica, n, grid)[0] - 2.0 * (n - 1) * math.log(beta)


def _direct_stationary(seed, replica, n, t, theta, beta, delta_direct):
    grid = GridSpec.build(t, delta_direct)
    env = generate(n, grid, seed, replica).scaled(beta)
    bw = replica_boundary(theta / beta, n, seed, replica)
    seeds = BoundaryWeights(bw.r0 - 2.0 * math.log(beta), bw.theta)
    return stationary_forward(env, seeds, beta * theta, n).log_total


def _mapped_stationary(seed, replica, n, t, theta, beta, delta):
    grid = GridSpec.build(beta * beta * t, delta)
    return stationary_final(seed, replica, n, theta / beta, grid)[0, -1] - 2.0 * n * math.log(beta)


# ---------------------------------------------------------------------------
# identities


def mean_identity(theta, n, t, replicas, master_seed=0, delta=None, workers=1, tol=DEFAULT):
    """Annealed mean of ``log Z^theta_{n,t}`` against ``-n psi0(theta) + theta t``.

    Each replica is solved at half the policy step and at the policy step; the paired
    difference gives the discretization allowance and the first-order
    Richardson value ``2 fine - coarse`` is tested.
    """
    _check_theta(theta)
    n = _check_n(n)
    grid = _fine_grid(t, delta, theta)
    vals = np.array(replica_map(_stationary_two_grid,
                                [(master_seed, r, n, theta, grid) for r in range(replicas)], workers))
    fine, coarse = vals[:, 0], vals[:, 1]
    extrap = 2.0 * fine - coarse
    target = -n * psi0(theta) + theta * t if n else theta * t
    se = _se(extrap)
    allowance = abs(float(np.mean(fine - coarse)))
    stat = abs(float(extrap.mean()) - target)
    thr = tol.mean_se_mult * se + allowance
    return IdentityVerdict(
        "mean", stat, thr, None, replicas, bool(stat <= thr),
        dict(theta=theta, n=n, t=t, delta=grid.delta, target=target, mean_fine=float(fine.mean()),
             mean_coarse=float(coarse.mean()), mean_extrapolated=float(extrap.mean()), se=se,
             allowance=allowance))


def variance_identity(theta, n, t, replicas, master_seed=0, delta=None, workers=1, tol=DEFAULT):
    """``Var(log Z) = n psi1(theta) - t + 2 E[sigma_0^+]`` with paired standard errors."""
    _check_theta(theta)
    n = _check_n(n)
    grid = _fine_grid(t, delta, theta)
    res = np.array(replica_map(_stationary_sigma,
                               [(master_seed, r, n, theta, grid) for r in range(replicas)], workers))
    R = replicas
    lin = n * psi1(theta) - t
    out = {}
    for i, label in enumerate(("fine", "coarse")):
        x, s = res[:, i, 0], res[:, i, 1]
        d = (x - x.mean()) ** 2 * R / (R - 1) - 2.0 * s
        out[label] = (float(d.mean()), _se(d), float(x.var(ddof=1)), float(s.mean()))
    d_fine, se, var_hat, s_hat = out["fine"]
    allowance = abs(out["fine"][0] - out["coarse"][0])
    stat = abs(d_fine - lin)
    thr = tol.var_se_mult * se + allowance
    e_minus = s_hat - (t - n * psi1(theta))
    return IdentityVerdict(
        "variance", stat, thr, None, R, bool(stat <= thr),
        dict(theta=theta, n=n, t=t, delta=grid.delta, variance=var_hat, mean_sigma0_plus=s_hat,
             rhs=lin + 2.0 * s_hat, linear_term=lin, se=se, allowance=allowance,
             mean_sigma0_minus=e_minus, mean_abs_sigma0=s_hat + e_minus))


def variance_lipschitz(theta, lam, n, t, replicas, master_seed=0, delta=None, workers=1, tol=DEFAULT):
    """``|Var log Z^lam - Var log Z^theta| <= n |psi1(lam) - psi1(theta)|`` on coupled replicas."""
    _check_theta(theta)
    _check_theta(lam)
    n = _check_n(n, 1)
    grid = _grid(t, delta, min(theta, lam) if delta is None else theta)
    xt = np.array(replica_map(_stationary_value, [(master_seed, r, n, theta, grid) for r in range(replicas)], workers))
    if lam == theta:
        xl = xt.copy()
    else:
        xl = np.array(replica_map(_stationary_value, [(master_seed, r, n, lam, grid) for r in range(replicas)],
                                  workers))
    d = (xl - xl.mean()) ** 2 - (xt - xt.mean()) ** 2
    stat = abs(float(xl.var(ddof=1) - xt.var(ddof=1)))
    bound = n * abs(psi1(lam) - psi1(theta))
    se = _se(d) if np.any(d != 0) else 0.0
    thr = bound + tol.var_se_mult * se
    return IdentityVerdict(
        "variance_lipschitz", stat, thr, None, replicas, bool(stat <= thr),
        dict(theta=theta, lam=lam, n=n, t=t, delta=grid.delta, var_theta=float(xt.var(ddof=1)),
             var_lam=float(xl.var(ddof=1)), bound=bound, se=se))


def burke_distribution(theta, n, t, replicas, master_seed=0, delta=None, workers=1, tol=DEFAULT):
    """KS of ``exp(-r_k(t))`` against Gamma(theta) and a cross-level correlation screen."""
    _check_theta(theta)
    n = _check_n(n, 1)
    grid = _grid(t, delta, theta)
    rows = np.array(replica_map(_stationary_levels, [(master_seed, r, n, theta, grid) for r in range(replicas)],
                                workers))
    r = np.diff(rows, axis=1)  # column k-1 holds r_k(t)
    ks_levels = sorted({1, max(1, math.ceil(n / 2)), n})
    pvals = {k: float(stats.kstest(np.exp(-r[:, k - 1]), stats.gamma(theta).cdf).pvalue) for k in ks_levels}
    pairs = [(a, b) for i, a in enumerate(ks_levels) for b in ks_levels[i + 1:]]
    if n >= 8:
        pairs.append((3, 8))
    corr = {f"{a},{b}": float(np.corrcoef(r[:, a - 1], r[:, b - 1])[0, 1]) for a, b in pairs}
    corr_limit = 5.0 / math.sqrt(replicas)
    # exact telescoping on one stored table
    env = generate(n, grid, master_seed, 0)
    tab = stationary_forward(env, replica_boundary(theta, n, master_seed, 0), theta, n)
    try:
        burke_increments(tab, tol)
        tele_ok = True
    except AssertionError:
        tele_ok = False
    pmin = min(pvals.values())
    cmax = max((abs(c) for c in corr.values()), default=0.0)
    passed = pmin > tol.ks_pvalue_floor and cmax < corr_limit and tele_ok
    return IdentityVerdict(
        "burke", cmax, corr_limit, pmin, replicas, bool(passed),
        dict(theta=theta, n=n, t=t, delta=grid.delta, ks_pvalues=pvals, correlations=corr,
             telescoping_ok=tele_ok, mean_r=[float(v) for v in r.mean(axis=0)],
             expected_mean_r=-psi0(theta), expected_var_r=psi1(theta)))


def _censor(x, floor):
    """Unresolved (pre-zero) jumps and values below ``floor`` go to one sentinel."""
    x = np.where(np.isnan(x), -np.inf, x)
    return np.where(x < floor, floor - 1.0, x)


def shift_invariance(theta, n, t1, t2, replicas, master_seed=0, delta=None, k=None, workers=1,
                     independent=True, tol=DEFAULT):
    """Two-sample KS checks of the shift invariances in ``t`` and in ``n``.

    Part one compares ``sigma_{n-1} - t`` under ``(n, t1)`` and ``(n, t2)``.
    Part two compares ``sigma_k`` under ``(n, t1)`` with ``sigma_0`` under
    ``(n - k, t1)``.  Jumps before time 0 are censored at a common sentinel.
    With ``independent=False`` both sides reuse the same replica streams.
    """
    _check_theta(theta)
    n = _check_n(n, 2)
    k = (n - 1) // 2 if k is None else int(k)
    if not 0 < k < n:
        raise DomainError(f"k must lie in 1..n-1, got {k}")
    seed2 = master_seed + 1 if independent else master_seed
    g1 = _grid(t1, delta, theta)
    g2 = _grid(t2, delta, theta)
    a = np.array(replica_map(_last_jump_sample, [(master_seed, r, n, theta, g1, n - 1) for r in range(replicas)],
                             workers)) - t1
    b = np.array(replica_map(_last_jump_sample, [(seed2, r, n, theta, g2, n - 1) for r in range(replicas)],
                             workers)) - t2
    floor = -min(t1, t2)
    a, b = _censor(a, floor), _censor(b, floor)
    p_t = 1.0 if np.array_equal(a, b) else float(stats.ks_2samp(a, b).pvalue)
    seed3 = master_seed + 2 if independent else master_seed
    c = np.array(replica_map(_last_jump_sample, [(master_seed, r, n, theta, g1, k) for r in range(replicas)],
                             workers))
    d = np.array(replica_map(_last_jump_sample, [(seed3, r, n - k, theta, g1, 0) for r in range(replicas)],
                             workers))
    c, d = _censor(c, 0.0), _censor(d, 0.0)
    p_n = float(stats.ks_2samp(c, d).pvalue)
    pmin = min(p_t, p_n)
    return IdentityVerdict(
        "shift", pmin, tol.ks_pvalue_floor, pmin, replicas, bool(pmin > tol.ks_pvalue_floor),
        dict(theta=theta, n=n, t1=t1, t2=t2, k=k, p_time_shift=p_t, p_level_shift=p_n,
             censored_fraction=float(np.mean(np.concatenate((a, b)) < floor)),
             censored_fraction_levels=float(np.mean(np.concatenate((c, d)) < 0.0))))


def dufresne_check(nu, replicas, horizon, master_seed=0, delta=0.002, workers=1, tol=DEFAULT):
    """Reciprocal of ``int_0^H exp(sqrt(2) W(u) - nu u) du`` against Gamma(nu)."""
    if not (np.isfinite(nu) and nu > 0):
        raise DomainError(f"nu must be > 0, got {nu!r}")
    if math.exp(-nu * horizon) >= 1e-6:
        raise TruncationError(f"exp(-nu*H) = {math.exp(-nu * horizon):.3e} >= 1e-6; increase the horizon",
                              bound=math.exp(-nu * horizon))
    x = np.array(replica_map(_dufresne_sample, [(master_seed, r, nu, horizon, delta) for r in range(replicas)],
                             workers))
    res = stats.kstest(x, stats.gamma(nu).cdf)
    details = dict(nu=nu, horizon=horizon, delta=delta, sample_mean=float(x.mean()))
    if nu > 1:
        # the reciprocal has a finite mean only for nu > 1
        details["mean_of_integral"] = float(np.mean(1.0 / x))
        details["expected_mean_of_integral"] = 1.0 / (nu - 1.0)
    p = float(res.pvalue)
    return IdentityVerdict("dufresne", float(res.statistic), tol.ks_pvalue_floor, p, replicas,
                           bool(p > tol.ks_pvalue_floor), details)


def scaling_consistency(n, t, beta, replicas, kind="point_to_point", theta=None, master_seed=0, delta=0.02,
                        workers=1, tol=DEFAULT):
    """Direct simulation at ``beta`` against the ``beta = 1`` image plus log offset.

    The direct run uses step ``delta / beta**2`` so both sides resolve the
    same scaled time.  At ``beta = 1`` both sides share streams and agree
    exactly; otherwise the mapped side uses an independent master seed.
    """
    n = _check_n(n, 1)
    if not (np.isfinite(beta) and beta > 0):
        raise DomainError(f"beta must be > 0, got {beta!r}")
    seed2 = master_seed if beta == 1.0 else master_seed + 1
    dd = delta / (beta * beta)
    if kind == "point_to_point":
        x = replica_map(_direct_ptp, [(master_seed, r, n, t, beta, dd) for r in range(replicas)], workers)
        y = replica_map(_mapped_ptp, [(seed2, r, n, t, beta, delta) for r in range(replicas)], workers)
    elif kind == "stationary":
        _check_theta(theta)
        x = replica_map(_direct_stationary, [(master_seed, r, n, t, theta, beta, dd) for r in range(replicas)],
                        workers)
        y = replica_map(_mapped_stationary, [(seed2, r, n, t, theta, beta, delta) for r in range(replicas)],
                        workers)
    else:
        raise DomainError(f"unknown kind {kind!r}")
    x, y = np.asarray(x), np.asarray(y)
    mean_gap = abs(float(x.mean() - y.mean()))
    mean_se = math.hypot(_se(x), _se(y))
    var_gap = abs(float(x.var(ddof=1) - y.var(ddof=1)))
    var_se = math.hypot(_var_se(x), _var_se(y))
    if beta == 1.0:
        passed = bool(np.array_equal(x, y))
        mean_thr = var_thr = 0.0
    else:
        mean_thr = tol.mean_se_mult * mean_se
        var_thr = tol.mean_se_mult * var_se
        passed = mean_gap <= mean_thr and var_gap <= var_thr
    return IdentityVerdict(
        "scaling", max(mean_gap / max(mean_thr, 1e-300), var_gap / max(var_thr, 1e-300)) if beta != 1.0 else 0.0,
        1.0, None, replicas, bool(passed),
        dict(kind=kind, n=n, t=t, beta=beta, theta=theta, delta_scaled=delta, delta_direct=dd,
             mean_direct=float(x.mean()), mean_mapped=float(y.mean()), mean_gap=mean_gap, mean_threshold=mean_thr,
             var_direct=float(x.var(ddof=1)), var_mapped=float(y.var(ddof=1)), var_gap=var_gap,
             var_threshold=var_thr))


SUITE = ("mean", "variance", "lipschitz", "burke", "shift", "dufresne", "scaling")


def run_suite(only=None, master_seed=0, replicas=None, workers=1, tol=DEFAULT):
    """Default-budget run of the selected checks, in a fixed order."""
    names = SUITE if not only else tuple(only)
    bad = [x for x in names if x not in SUITE]
    if bad:
        raise DomainError(f"unknown identity test(s): {', '.join(bad)}; choose from {', '.join(SUITE)}")
    th = 1.0
    tc = 16 * psi1(th)
    out = []
    for name in SUITE:
        if name not in names:
            continue
        if name == "mean":
            out.append(mean_identity(th, 16, tc, replicas or 2000, master_seed, workers=workers, tol=tol))
        elif name == "variance":
            out.append(variance_identity(th, 16, tc, replicas or 2000, master_seed, workers=workers, tol=tol))
        elif name == "lipschitz":
            out.append(variance_lipschitz(th, 1.2, 16, tc, replicas or 1000, master_seed, workers=workers, tol=tol))
        elif name == "burke":
            out.append(burke_distribution(1.5, 10, 10 * psi1(1.5), replicas or 1000, master_seed, workers=workers,
                                          tol=tol))
        elif name == "shift":
            t1 = 8 * psi1(th)
            out.append(shift_invariance(th, 8, t1, t1 + 2, replicas or 1000, master_seed, k=3, workers=workers,
                                        tol=tol))
        elif name == "dufresne":
            out.append(dufresne_check(1.0, replicas or 2000, 20.0, master_seed, workers=workers, tol=tol))
        elif name == "scaling":
            out.append(scaling_consistency(8, 32.0, 0.5, replicas or 500, master_seed=master_seed,
                                           workers=workers, tol=tol))
    return out


def expected_false_failures(verdicts, tol=DEFAULT):
    """Expected number of spurious failures of the p-valued checks under a correct simulator."""
    return float(sum(tol.ks_pvalue_floor for v in verdicts if v.p_value is not None))
