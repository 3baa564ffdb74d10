import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from oypolymer.environment import GridSpec, generate
from oypolymer.experiments import fit_power_law
from oypolymer.partition import ptp_final, ptp_forward, replica_boundary, stationary_final, stationary_forward
from oypolymer.pathsampler import quenched_marginals
from oypolymer.specialfn import psi0, psi1, psi1_inv

pos = st.floats(min_value=1e-3, max_value=1e3, allow_nan=False)


@given(pos)
def test_psi1_inv_roundtrip(y):
    x = psi1_inv(y)
    assert abs(psi1(x) - y) <= 1e-10 * max(1.0, y)


@given(st.floats(min_value=0.01, max_value=200.0))
def test_psi_sandwich(x):
    assert 1 / x <= psi1(x) <= 1 / x + 1 / x ** 2
    assert psi0(x + 1) - psi0(x) == pytest.approx(1 / x, abs=1e-10)


@given(st.floats(min_value=0.0, max_value=50.0), st.floats(min_value=1e-3, max_value=1.0))
def test_grid_invariants(t, d):
    g = GridSpec.build(t, d)
    if t > 0:
        assert g.m_count * d >= t * (1 - 1e-12) and (g.m_count - 1) * d < t
        assert g.time(g.m_count) == t and g.delta <= d * (1 + 1e-12)


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.floats(0.1, 5.0), st.integers(0, 10 ** 6))
def test_ptp_streaming_equals_table(n, t, seed):
    g = GridSpec.build(t, 0.05)
    e = generate(n, g, seed, 0)
    tab = ptp_forward(e, n)
    assert np.all(np.isfinite(tab.logz[1:, 1:]))
    assert ptp_final(seed, 0, n, g)[0] == tab.log_total


@settings(max_examples=25, deadline=None)
@given(st.integers(1, 6), st.floats(0.2, 5.0), st.floats(0.3, 3.0), st.integers(0, 10 ** 6))
def test_stationary_marginals_normalised(n, t, theta, seed):
    g = GridSpec.build(t, 0.05)
    e = generate(n, g, seed, 1)
    bw = replica_boundary(theta, n, seed, 1)
    tab = stationary_forward(e, bw, theta, n)
    assert np.array_equal(stationary_final(seed, 1, n, theta, g)[0], tab.logz[:, -1])
    qm = quenched_marginals(tab)
    for k in range(n):
        assert abs(qm.prob[k].sum() + qm.entry[k + 1:].sum() - 1.0) < 1e-11


@given(st.floats(-2.0, 2.0), st.floats(-3.0, 3.0))
def test_fit_recovers_exact_power_law(slope, c):
    x = np.array([4.0, 8, 16, 32, 64, 128])
    r = fit_power_law(x, math.exp(c) * x ** slope)
    assert abs(r.slope - slope) < 1e-10 and abs(r.intercept - c) < 1e-9
