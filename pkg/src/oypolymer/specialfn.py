"""Polygamma functions, the inverse trigamma, Gamma sampling and model constants.

Polygammas are evaluated by upward recurrence until the argument reaches
``Tolerances.polygamma_shift_to`` and then by the Stirling-type asymptotic
series.  Everything accepts scalars or arrays; scalars come back as floats.
"""

import math
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .config import DEFAULT
from .errors import ConvergenceError, DomainError

# B_2, B_4, ..., B_16
_BERNOULLI = np.array([
    1.0 / 6.0, -1.0 / 30.0, 1.0 / 42.0, -1.0 / 30.0, 5.0 / 66.0,
    -691.0 / 2730.0, 7.0 / 6.0, -3617.0 / 510.0,
])


def _as_positive(x, name="x"):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise DomainError(f"{name} must be finite and > 0, got {x!r}")
    return arr


def _shift(x, order, tol):
    """Upward recurrence; returns (shifted x, accumulated correction)."""
    x = x.copy()
    acc = np.zeros_like(x)
    while True:
        low = x < tol.polygamma_shift_to
        if not np.any(low):
            return x, acc
        xl = x[low]
        if order == 0:
            acc[low] -= 1.0 / xl
        elif order == 1:
            acc[low] += 1.0 / (xl * xl)
        else:
            acc[low] -= 2.0 / (xl * xl * xl)
        x[low] = xl + 1.0


def _unwrap(arr):
    return float(arr) if arr.ndim == 0 else arr


def psi0(x, tol=DEFAULT):
    """Digamma function."""
    x0 = _as_positive(x)
    x, acc = _shift(x0, 0, tol)
    inv2 = 1.0 / (x * x)
    series = np.zeros_like(x)
    p = inv2.copy()
    for k, b in enumerate(_BERNOULLI, start=1):
        series += b / (2 * k) * p
        p = p * inv2
    return _unwrap(np.log(x) - 0.5 / x - series + acc)


def psi1(x, tol=DEFAULT):
    """Trigamma function, strictly positive and decreasing."""
    x0 = _as_positive(x)
    x, acc = _shift(x0, 1, tol)
    inv = 1.0 / x
    inv2 = inv * inv
    series = np.zeros_like(x)
    p = inv2 * inv
    for b in _BERNOULLI:
        series += b * p
        p = p * inv2
    return _unwrap(inv + 0.5 * inv2 + series + acc)


def psi2(x, tol=DEFAULT):
    """Tetragamma function (derivative of trigamma), strictly negative."""
    x0 = _as_positive(x)
    x, acc = _shift(x0, 2, tol)
    inv = 1.0 / x
    inv2 = inv * inv
    series = np.zeros_like(x)
    p = inv2 * inv2
    for k, b in enumerate(_BERNOULLI, start=1):
        series += (2 * k + 1) * b * p
        p = p * inv2
    return _unwrap(-inv2 - inv2 * inv - series + acc)


def _psi1_inv_scalar(y, tol):
    # 1/x <= psi1(x) <= 1/x + 1/x^2 brackets the root in [1/y, 1/y + 1]
    lo = 1.0 / y
    hi = 1.0 / y + 1.0
    f_lo = psi1(lo, tol) - y
    if f_lo == 0.0:
        return lo
    if f_lo < 0:
        # rounding at the lower end; widen slightly
        lo = max(lo * (1 - 1e-12), tol.tiny)
    x = brentq(lambda s: psi1(s, tol) - y, lo, hi,
               xtol=1e-15 * lo, rtol=1e-15, maxiter=tol.psi1_inv_maxiter)
    resid = abs(psi1(x, tol) - y)
    if resid > tol.psi1_inv_residual * max(1.0, y):
        raise ConvergenceError(f"psi1_inv({y}) residual {resid:.3e}", residual=resid)
    return x


def psi1_inv(y, tol=DEFAULT):
    """Inverse of the trigamma function on (0, inf)."""
    arr = _as_positive(y, "y")
    if arr.ndim == 0:
        return _psi1_inv_scalar(float(arr), tol)
    return np.array([_psi1_inv_scalar(float(v), tol) for v in arr.ravel()]).reshape(arr.shape)


def gamma_sample(shape, rng, size=None):
    """Draw Gamma(shape, 1) variates from a caller-owned ``numpy.random.Generator``.

    For ``shape < 1`` draws Gamma(shape + 1) and multiplies by ``U**(1/shape)``.
    """
    if not (np.isfinite(shape) and shape > 0):
        raise DomainError(f"shape must be > 0, got {shape!r}")
    if shape >= 1.0:
        return rng.standard_gamma(shape, size)
    g = rng.standard_gamma(shape + 1.0, size)
    u = 1.0 - rng.random(size)  # (0, 1]
    return g * u ** (1.0 / shape)


def free_energy_density(beta, tol=DEFAULT):
    """Limiting free energy density of the point-to-point model at inverse temperature ``beta``.

    The closed form is evaluated at the minimiser ``t* = psi1_inv(beta**2)`` of
    ``t beta^2 - psi0(t)``; the first-order condition is checked before returning.
    """
    if not (np.isfinite(beta) and beta > 0):
        raise DomainError(f"beta must be > 0, got {beta!r}")
    b2 = beta * beta
    t_star = psi1_inv(b2, tol)
    stationarity = b2 - psi1(t_star, tol)
    if abs(stationarity) > tol.psi1_inv_residual * max(1.0, b2):
        raise ConvergenceError("free energy minimiser is not stationary", residual=stationarity)
    return t_star * b2 - psi0(t_star, tol) - 2.0 * math.log(beta)


@dataclass(frozen=True)
class ModelConstants:
    beta: float
    theta_char: float
    free_energy: float
    centering: float


def centering(theta, n, t, tol=DEFAULT):
    """Mean of the stationary log partition function: theta*t - n*psi0(theta)."""
    return theta * t - n * psi0(theta, tol)


def model_constants(beta, n, t, tol=DEFAULT):
    theta = beta * psi1_inv(beta * beta, tol)
    return ModelConstants(
        beta=beta,
        theta_char=theta,
        free_energy=free_energy_density(beta, tol),
        centering=centering(theta, n, t, tol),
    )


@dataclass(frozen=True)
class ScaledParams:
    """User coordinates (alpha, beta0, tau, n) and their beta=1 image.

    ``n_levels`` levels on horizon ``t`` with boundary drift ``theta``; the
    triple sits exactly on the characteristic line ``n_levels*psi1(theta) = t``.
    """

    alpha: float
    beta0: float
    tau: float
    n: int
    beta: float
    n_levels: int
    t: float
    theta: float
    log_offset_ptp: float
    log_offset_stationary: float

    @property
    def time_factor(self):
        """Multiply scaled times by this to get original times."""
        return 1.0 / (self.beta * self.beta)


def characteristic_params(alpha, beta0, tau, n, tol=DEFAULT):
    if not (0.0 <= alpha <= 0.25):
        raise DomainError(f"alpha must lie in [0, 0.25], got {alpha!r}")
    if not (np.isfinite(beta0) and beta0 > 0):
        raise DomainError(f"beta0 must be > 0, got {beta0!r}")
    if not (np.isfinite(tau) and tau > 0):
        raise DomainError(f"tau must be > 0, got {tau!r}")
    if int(n) != n or n < 1:
        raise DomainError(f"n must be a positive integer, got {n!r}")
    n = int(n)
    n_levels = int(math.floor(tau * n + 1e-9))
    if n_levels < 1:
        raise DomainError(f"tau*n must be >= 1, got {tau * n!r}")
    beta = beta0 * n ** (-alpha)
    y = beta0 * beta0 * n ** (-2.0 * alpha)
    theta = psi1_inv(y, tol)
    # t is tied to n_levels so the characteristic relation is exact even when tau*n is fractional
    t = n_levels * y
    return ScaledParams(
        alpha=float(alpha), beta0=float(beta0), tau=float(tau), n=n,
        beta=beta, n_levels=n_levels, t=t, theta=theta,
        log_offset_ptp=-2.0 * (n_levels - 1) * math.log(beta),
        log_offset_stationary=-2.0 * n_levels * math.log(beta),
    )
