import math

import numpy as np
import pytest

from oypolymer.errors import DomainError
from oypolymer.specialfn import (characteristic_params, free_energy_density, gamma_sample, model_constants,
                                 psi0, psi1, psi1_inv, psi2)

# frozen 30-digit values from an independent arbitrary-precision evaluation
PSI0_1 = -0.577215664901532860606512090082
PSI1_1 = 1.64493406684822643647241516665
PSI1_HALF = 4.93480220054467930941724549994
PSI2_1 = -2.40411380631918857079947632302
PSI1_INV_1 = 1.42625512021507899036898830053
PSI0_1000 = 6.90725519564881205205000611425


def series_psi1(x, terms=200000):
    """sum_{k>=0} 1/(x+k)^2 with an integral tail correction."""
    k = np.arange(terms)
    s = np.sum(1.0 / (x + k) ** 2)
    end = x + terms
    return s + 1.0 / end + 0.5 / end ** 2 + 1.0 / (6 * end ** 3)


def test_frozen_values():
    assert psi0(1.0) == pytest.approx(PSI0_1, rel=1e-13)
    assert psi1(1.0) == pytest.approx(PSI1_1, rel=1e-13)
    assert psi1(0.5) == pytest.approx(PSI1_HALF, rel=1e-13)
    assert psi2(1.0) == pytest.approx(PSI2_1, rel=1e-13)
    assert psi1_inv(1.0) == pytest.approx(PSI1_INV_1, rel=1e-10)
    assert psi0(1000.0) == pytest.approx(PSI0_1000, rel=1e-14)


def test_series_oracle():
    for x in (0.5, 1.0, 3.7):
        assert psi1(x) == pytest.approx(series_psi1(x), rel=1e-12)


def test_mpmath_grid():
    mp = pytest.importorskip("mpmath")
    for x in np.geomspace(1e-3, 1e6, 40):
        assert psi0(x) == pytest.approx(float(mp.digamma(x)), rel=1e-12, abs=1e-14)
        assert psi1(x) == pytest.approx(float(mp.psi(1, x)), rel=1e-12)
        assert psi2(x) == pytest.approx(float(mp.psi(2, x)), rel=1e-11)


def test_large_argument_asymptotics():
    assert abs(psi0(1000.0) - (math.log(1000.0) - 1 / 2000.0)) < 1e-5


def test_recurrences():
    x = np.linspace(0.1, 100, 500)
    assert np.allclose(psi0(x + 1) - psi0(x), 1 / x, rtol=0, atol=1e-10)
    assert np.allclose(psi1(x + 1) - psi1(x), -1 / x ** 2, rtol=0, atol=1e-10)
    assert np.allclose(psi2(x + 1) - psi2(x), 2 / x ** 3, rtol=0, atol=1e-10)
    assert psi2(2.0) == pytest.approx(psi2(1.0) + 2.0, abs=1e-12)


def test_sandwich():
    x = np.geomspace(1e-2, 1e4, 1000)
    p1 = psi1(x)
    assert np.all(p1 >= 1 / x) and np.all(p1 <= 1 / x + 1 / x ** 2)
    p2 = -psi2(x)
    assert np.all(p2 >= 1 / x ** 2) and np.all(p2 <= 1 / x ** 2 + 2 / x ** 3)
    assert -psi2(50.0) <= 1 / 2500 + 2 / 125000


def test_psi1_inv():
    y = np.geomspace(1e-6, 1e6, 200)
    x = psi1_inv(y)
    assert np.all(np.abs(psi1(x) - y) <= 1e-10 * np.maximum(1.0, y))
    assert psi1(psi1_inv(1.0)) == pytest.approx(1.0, abs=1e-9)
    x4 = psi1_inv(1e-4)
    assert 1e4 - 1 <= x4 <= 1e4 + 1


@pytest.mark.parametrize("bad", [0.0, -1.0, float("nan"), float("inf")])
def test_domain(bad):
    for f in (psi0, psi1, psi2, psi1_inv):
        with pytest.raises(DomainError):
            f(bad)
    with pytest.raises(DomainError):
        gamma_sample(bad, np.random.default_rng(0))


def test_gamma_moments():
    rng = np.random.default_rng(11)
    g = gamma_sample(2.0, rng, 10 ** 6)
    assert abs(g.mean() - 2.0) < 5 * math.sqrt(2.0 / g.size)
    g = gamma_sample(0.5, rng, 10 ** 6)
    # Var of the sample variance for Gamma(k): (mu4 - sigma^4)/N with mu4 = 3k^2 + 6k
    k = 0.5
    se = math.sqrt((3 * k * k + 6 * k - k * k) / g.size)
    assert abs(g.var() - 0.5) < 5 * se
    th = 1.3
    lg = -np.log(gamma_sample(th, rng, 10 ** 5))
    assert abs(lg.mean() + psi0(th)) < 5 * math.sqrt(psi1(th) / lg.size)
    se_var = math.sqrt(np.var((lg - lg.mean()) ** 2) / lg.size)
    assert abs(lg.var() - psi1(th)) < 5 * se_var


def test_free_energy():
    t = psi1_inv(1.0)
    assert free_energy_density(1.0) == pytest.approx(t - psi0(t), rel=1e-13)
    grid = np.linspace(0.5, 3.0, 20001)
    i = np.argmin(grid - psi0(grid))
    lo, hi = grid[i - 1], grid[i + 1]
    for _ in range(60):
        a, b = lo + (hi - lo) / 3, hi - (hi - lo) / 3
        if a - psi0(a) < b - psi0(b):
            hi = b
        else:
            lo = a
    assert 0.5 * (lo + hi) == pytest.approx(t, abs=1e-6)
    # n F(n^{-1/4}) = n + O(n^{1/2})
    for n in (10 ** 4, 10 ** 6):
        assert abs(n * free_energy_density(n ** -0.25) - n) < 3 * math.sqrt(n)


def test_characteristic_params():
    p = characteristic_params(0.0, 1.0, 1.0, 10)
    assert p.n_levels == 10 and p.t == pytest.approx(10.0) and p.theta == pytest.approx(psi1_inv(1.0))
    p = characteristic_params(0.25, 1.0, 2.0, 16)
    assert p.beta == pytest.approx(0.5) and p.t == pytest.approx(8.0) and p.n_levels == 32
    assert p.log_offset_ptp == pytest.approx(-2 * 31 * math.log(0.5))
    for a, b0, tau, n in [(0.1, 0.7, 1.5, 33), (0.25, 2.0, 0.5, 7), (0.0, 0.3, 3.0, 100)]:
        p = characteristic_params(a, b0, tau, n)
        assert abs(p.n_levels * psi1(p.theta) - p.t) < 1e-8 * p.t
    for bad in [(0.3, 1, 1, 4), (-0.1, 1, 1, 4), (0, 0, 1, 4), (0, 1, 0, 4), (0, 1, 1, 0)]:
        with pytest.raises(DomainError):
            characteristic_params(*bad)


def test_model_constants():
    mc = model_constants(0.8, 10, 5.0)
    assert mc.theta_char == pytest.approx(0.8 * psi1_inv(0.64))
    assert mc.centering == pytest.approx(mc.theta_char * 5.0 - 10 * psi0(mc.theta_char))
