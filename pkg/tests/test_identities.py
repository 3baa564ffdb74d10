import json

import numpy as np
import pytest

from oypolymer.errors import DomainError, TruncationError
from oypolymer.identities import (SUITE, burke_distribution, dufresne_check, expected_false_failures,
                                  mean_identity, run_suite, scaling_consistency, shift_invariance,
                                  variance_identity, variance_lipschitz, write_verdicts)
from oypolymer.specialfn import psi1

T8 = 8 * psi1(1.0)


def test_mean_identity_small():
    v = mean_identity(1.0, 8, T8, 300, master_seed=3)
    assert v.passed and v.n_replicas == 300
    assert set(v.details) >= {"mean_fine", "mean_coarse", "mean_extrapolated", "allowance", "target"}


def test_mean_identity_base_case_and_domain():
    v = mean_identity(1.0, 0, 2.0, 20)
    assert v.passed and v.details["target"] == 2.0 and v.details["allowance"] == 0.0
    with pytest.raises(DomainError):
        mean_identity(0.0, 4, 1.0, 10)
    with pytest.raises(DomainError):
        variance_identity(-1.0, 4, 1.0, 10)


def test_variance_identity_small():
    assert variance_identity(1.0, 8, T8, 400, master_seed=4).passed
    assert variance_identity(1.0, 8, T8 + 1.0, 400, master_seed=4).passed


def test_lipschitz_exact_zero_and_pass():
    v = variance_lipschitz(1.0, 1.0, 8, T8, 50)
    assert v.passed and v.statistic == 0.0
    assert variance_lipschitz(1.0, 1.2, 8, T8, 300, master_seed=1).passed
    assert variance_lipschitz(1.0, 0.5, 8, T8, 300, master_seed=1).passed


def test_burke_small():
    v = burke_distribution(1.5, 6, 6 * psi1(1.5), 300, master_seed=2)
    assert v.passed and v.details["telescoping_ok"]


def test_shift_identical_streams():
    v = shift_invariance(1.0, 6, 5.0, 5.0, 60, independent=False, k=2)
    assert v.details["p_time_shift"] == 1.0
    assert shift_invariance(1.0, 6, 6 * psi1(1.0), 6 * psi1(1.0) + 2, 300, master_seed=5, k=2).passed
    with pytest.raises(DomainError):
        shift_invariance(1.0, 6, 5.0, 5.0, 10, k=6)


def test_dufresne_small():
    assert dufresne_check(1.0, 400, 20.0, master_seed=1, delta=0.005).passed
    with pytest.raises(TruncationError):
        dufresne_check(0.5, 10, 5.0)
    with pytest.raises(DomainError):
        dufresne_check(0.0, 10, 5.0)


def test_scaling_exact_at_beta_one():
    v = scaling_consistency(4, 4.0, 1.0, 30)
    assert v.passed and v.details["mean_gap"] == 0.0
    v = scaling_consistency(4, 4.0, 1.0, 30, kind="stationary", theta=1.0)
    assert v.passed and v.details["var_gap"] == 0.0
    with pytest.raises(DomainError):
        scaling_consistency(4, 4.0, 1.0, 5, kind="nope")


def test_scaling_small_ptp():
    assert scaling_consistency(4, 8.0, 0.5, 200, master_seed=2).passed


def test_suite_reproducible_and_unknown(tmp_path):
    a = run_suite(["lipschitz"], master_seed=7, replicas=30)
    b = run_suite(["lipschitz"], master_seed=7, replicas=30)
    assert [v.to_json() for v in a] == [v.to_json() for v in b]
    with pytest.raises(DomainError):
        run_suite(["nope"])
    path = tmp_path / "v.jsonl"
    write_verdicts(path, a)
    rec = json.loads(path.read_text().splitlines()[0])
    assert rec["name"] == "variance_lipschitz" and isinstance(rec["passed"], bool)
    assert expected_false_failures(a) == 0.0
    assert "mean" in SUITE and len(SUITE) == 7
