"""Deterministic seeding and Monte Carlo moment aggregation."""

import math

import numpy as np
import pytest

from coversim.estimator import (
    bootstrap_se,
    derive_replica_seed,
    derive_replica_seeds,
    run_experiment,
)
from coversim.geometry import Domain, StartSet, Target
from coversim.scenarios import ScenarioConfig


def d1_scenario(**kw):
    base = dict(
        scenario_id="seedtest",
        domain=Domain.torus(1, 0.8),
        target=Target.full_domain(),
        start=StartSet.point([0.8]),
        detection_radius=0.3,
        dt=5e-4,
        t_max_factor=500.0,
    )
    base.update(kw)
    return ScenarioConfig(**base)


def test_seed_is_deterministic():
    assert derive_replica_seed(42, 10, 3) == derive_replica_seed(42, 10, 3)
    assert derive_replica_seed(42, 10, 3) != derive_replica_seed(42, 10, 4)
    assert derive_replica_seed(42, 10, 3) != derive_replica_seed(43, 10, 3)
    assert derive_replica_seed(42, 10, 3) != derive_replica_seed(42, 11, 3)


def test_seed_vectorized_matches_scalar():
    seeds = derive_replica_seeds(987654321, 10**4, 64)
    for i in (0, 1, 17, 63):
        assert int(seeds[i]) == derive_replica_seed(987654321, 10**4, i)


def test_seed_injective_on_a_million_replicas():
    seeds = derive_replica_seeds(123, 100, 1_000_000)
    assert np.unique(seeds).size == 1_000_000


def test_seed_no_collisions_across_n_values():
    chunks = [derive_replica_seeds(7, n, 500) for n in range(1, 2001)]
    seeds = np.concatenate(chunks)
    assert np.unique(seeds).size == seeds.size


def test_seed_avalanche_on_master_seed():
    # flipping the master seed flips around half the output bits
    rng = np.random.default_rng(0)
    flips = []
    for _ in range(500):
        s = int(rng.integers(0, 2**63))
        a = derive_replica_seed(s, 10, 0)
        b = derive_replica_seed(s + 1, 10, 0)
        flips.append(bin(a ^ b).count("1"))
    assert np.mean(flips) >= 0.3 * 64


def test_trivial_scenario_reports_zero_moments():
    sc = d1_scenario(detection_radius=0.9)  # covers the whole circle at t=0
    reports = run_experiment(sc, n_list=(1, 5), replicas=20)
    for rep in reports:
        assert rep.trivially_covered_count == 20
        for est in rep.moments:
            assert est.value == 0.0
            assert est.stderr == 0.0
        assert rep.cv is None
        assert rep.valid


def test_reports_are_independent_of_worker_count():
    sc = d1_scenario()
    one = run_experiment(sc, n_list=(2,), replicas=8, n_jobs=1)
    two = run_experiment(sc, n_list=(2,), replicas=8, n_jobs=2)
    assert one[0].samples == two[0].samples
    assert one[0].moments == two[0].moments


def test_jensen_inequality_in_sample():
    sc = d1_scenario()
    (rep,) = run_experiment(sc, n_list=(4,), replicas=50)
    m1, m2, m3 = (rep.moment(k).value for k in (1, 2, 3))
    assert m2 >= m1**2
    assert rep.cv == pytest.approx(math.sqrt(m2 - m1**2) / m1)
    assert m3 > 0


def test_mean_moment_nonincreasing_in_n():
    sc = d1_scenario(dt=2e-4)
    reports = run_experiment(sc, n_list=(1, 10, 100), replicas=100)
    for a, b in zip(reports, reports[1:]):
        gap = a.moment(1).value - b.moment(1).value
        se = math.hypot(a.moment(1).stderr, b.moment(1).stderr)
        assert gap > -2 * se


def test_censored_replicas_invalidate_experiment():
    sc = d1_scenario(t_max_factor=1e-4)
    (rep,) = run_experiment(sc, n_list=(2,), replicas=10)
    assert not rep.valid
    assert rep.censored_count == 10
    assert rep.censored_flags == (True,) * 10


def test_run_experiment_argument_validation():
    sc = d1_scenario()
    with pytest.raises(ValueError):
        run_experiment(sc, replicas=1)
    with pytest.raises(ValueError):
        run_experiment(sc, n_list=(0,), replicas=5)
    with pytest.raises(ValueError):
        run_experiment(sc, replicas=5, max_moment=0)


def test_keep_samples_flag():
    sc = d1_scenario()
    (rep,) = run_experiment(sc, n_list=(2,), replicas=5, keep_samples=False)
    assert rep.samples is None
    assert rep.censored_flags is None
    (rep,) = run_experiment(sc, n_list=(2,), replicas=5)
    assert len(rep.samples) == 5


def test_replica_results_keyed_by_index_not_completion_order():
    # per-replica seeds make each sample a pure function of its index
    sc = d1_scenario()
    (rep,) = run_experiment(sc, n_list=(3,), replicas=12)
    (again,) = run_experiment(sc, n_list=(3,), replicas=12)
    assert rep.samples == again.samples


def test_bootstrap_se_close_to_analytic():
    rng = np.random.default_rng(5)
    x = rng.normal(10.0, 2.0, size=400)
    analytic = x.std(ddof=1) / math.sqrt(x.size)
    boot = bootstrap_se(x, order=1, n_boot=800, seed=1)
    assert boot == pytest.approx(analytic, rel=0.15)
