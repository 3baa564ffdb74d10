import math
import numpy as np
import pytest

from oypolymer.errors import BudgetError, DomainError
from oypolymer.experiments import (ExperimentConfig, PowerLawRegressor, VarianceScaling, aggregate,
                                   estimate_seconds, fit_power_law, group_grid, group_params, group_replicas,
                                   group_seed, run_experiment, run_task, run_tasks, tasks)
from oypolymer.partition import stationary_final

X = np.array([8, 16, 32, 64, 128], dtype=float)


def test_fit_exact_and_constant():
    r = fit_power_law(X, 3 * X ** 0.5)
    assert abs(r.slope - 0.5) < 1e-12 and r.intercept == pytest.approx(math.log(3), abs=1e-12)
    r = fit_power_law(X, np.full(5, 2.0))
    assert abs(r.slope) < 1e-12 and r.ci_low <= 0 <= r.ci_high


def test_fit_errors():
    with pytest.raises(DomainError):
        fit_power_law(X[:3], X[:3])
    with pytest.raises(DomainError):
        fit_power_law(np.full(5, 4.0), X)
    with pytest.raises(DomainError):
        fit_power_law(X, -X)


def test_fit_deterministic_given_seed():
    rng = np.random.default_rng(0)
    y = X ** 0.6 * (1 + 0.05 * rng.standard_normal(5))
    a = fit_power_law(X, y, se=0.05 * y, seed=4)
    b = fit_power_law(X, y, se=0.05 * y, seed=4)
    assert (a.ci_low, a.ci_high) == (b.ci_low, b.ci_high)


def test_fit_calibration_coverage():
    # 5% multiplicative noise, replica bootstrap from 50 replicas per point
    rng = np.random.default_rng(12345)
    hits = 0
    trials = 200
    for _ in range(trials):
        samples = [x ** (2 / 3) * (1 + 0.05 * math.sqrt(50) * rng.standard_normal(50)) for x in X]
        y = [s.mean() for s in samples]
        r = fit_power_law(X, y, samples=samples, statistic=np.mean, n_boot=200, seed=int(rng.integers(1 << 31)))
        hits += r.ci_low <= 2 / 3 <= r.ci_high
    assert hits / trials >= 0.9


def test_regressor():
    m = PowerLawRegressor().fit(X.reshape(-1, 1), 2 * X ** 0.25)
    assert m.slope_ == pytest.approx(0.25) and m.predict([256])[0] == pytest.approx(2 * 256 ** 0.25)
    assert m.score(X.reshape(-1, 1), 2 * X ** 0.25) == pytest.approx(1.0)


def test_config_validation():
    ok = ExperimentConfig(n_list=(8, 16, 32, 64), replicas=10)
    ok.validate()
    bad = [
        dict(n_list=(8, 16, 32)),
        dict(alpha=0.3),
        dict(experiment="ptp", alpha=0.25),
        dict(experiment="var", kind="point_to_point"),
        dict(experiment="path", gamma=1.0),
        dict(experiment="kpz", alpha=0.25, tau_list=(1.0,)),
        dict(experiment="var", phi="sin:1"),
        dict(experiment="kpz", alpha=0.0, tau_list=(1, 2, 4, 8)),
        dict(n_boot=50),
        dict(experiment="bogus"),
        dict(n_list=(16, 8, 64, 128)),
    ]
    for kw in bad:
        with pytest.raises(DomainError):
            ExperimentConfig(**{**dict(n_list=(8, 16, 32, 64), replicas=10), **kw}).validate()
    with pytest.warns(UserWarning):
        ExperimentConfig(n_list=(8, 16, 32, 64), tau_list=(0.5,), replicas=10).validate()


def test_alpha_zero_matches_direct_simulation():
    cfg = ExperimentConfig(experiment="var", n_list=(8, 16, 32, 64), replicas=3)
    for n in (8, 16):
        p, theta = group_params(cfg, n, 1.0)
        assert p.n_levels == n and p.t == pytest.approx(n * 1.0) and p.log_offset_stationary == 0.0
        g = group_grid(cfg, n, 1.0)
        for r in range(3):
            rec = run_task(cfg, n, 1.0, r)
            direct = stationary_final(group_seed(0, n, 1.0), r, n, theta, g)[0, -1]
            assert rec["logz"] == direct


def test_report_reproducible_and_order_free():
    cfg = ExperimentConfig(experiment="var", n_list=(4, 8, 16, 32), replicas=20, cross_check=True)
    recs = run_tasks(cfg)
    a = aggregate(cfg, recs)
    b = aggregate(cfg, list(reversed(recs)))
    assert a.to_json() == b.to_json()
    assert a.csv_rows() == run_experiment(cfg).csv_rows()
    names = {r[7] for r in a.csv_rows()}
    assert {"variance", "mean_logz", "variance_identity_gap", "variance_coarse"} <= names
    fit = a.main_fit("n")
    assert fit.target == pytest.approx(2 / 3) and fit.n_boot == 200
    for row in a.rows:
        gap, se = row["stats"]["variance_identity_gap"]
        assert abs(gap) < 5 * se + 0.05


def test_se_halving():
    base = dict(experiment="ptp", n_list=(4, 8, 16, 32))
    a = run_experiment(ExperimentConfig(replicas=200, **base))
    b = run_experiment(ExperimentConfig(replicas=400, **base))
    ratios = [rb["stats"]["mean_logz"][1] / ra["stats"]["mean_logz"][1] for ra, rb in zip(a.rows, b.rows)]
    assert 1 / math.sqrt(2) - 0.1 <= np.mean(ratios) <= 1 / math.sqrt(2) + 0.1


def test_budget_split():
    cfg = ExperimentConfig(experiment="var", n_list=(8, 16, 32, 64), replicas=1000, budget_core_hours=1e-4)
    reps = [group_replicas(cfg, n, 1.0) for n in cfg.n_list]
    assert reps == sorted(reps, reverse=True) and reps[0] <= 1000
    assert estimate_seconds(cfg) <= 3600 * 1e-4 + 1e-9
    assert len(tasks(cfg)) == sum(reps)
    tiny = ExperimentConfig(experiment="var", n_list=(8, 16, 32, 64), replicas=1000, budget_core_hours=1e-9)
    with pytest.raises(BudgetError):
        run_experiment(tiny)


def test_path_and_kpz_small():
    r = run_experiment(ExperimentConfig(experiment="path", alpha=0.25, n_list=(4, 8, 16, 32), replicas=10))
    assert r.main_fit().target == pytest.approx(0.5)
    assert all("tail_b2" in row["stats"] for row in r.rows)
    cfg = ExperimentConfig(experiment="kpz", alpha=0.25, n_list=(16,), tau_list=(1, 2, 4, 8), replicas=6,
                           phi="sin:1")
    r = run_experiment(cfg)
    for row in r.rows:
        assert row["stats"]["sandwich_ok"][0] == 1.0
    c = run_experiment(ExperimentConfig(experiment="kpz", alpha=0.25, n_list=(16,), tau_list=(1, 2, 4, 8),
                                        replicas=6, phi="const:0.3"))
    for row in c.rows:
        assert row["stats"]["sandwich_max_gap"][0] == pytest.approx(0.3, abs=1e-9)
        assert row["stats"]["variance"][0] == pytest.approx(row["stats"]["variance_plain"][0], abs=1e-9)


def test_estimator_facade():
    est = VarianceScaling(n_list=(4, 8, 16, 32), replicas=10, cross_check=False)
    assert est.get_params()["replicas"] == 10
    est.fit()
    assert np.isfinite(est.slope_) and est.ci_[0] <= est.ci_[1]
    assert est.predict([4]).shape == (1,)
    assert est.set_params(replicas=12).replicas == 12
