"""Monte Carlo orchestration: seeding, replica scheduling, moment estimates.

Every replica draws from its own ``numpy`` Generator whose seed is a pure
function of (master seed, searcher count, replica index), so experiment
output is bit-identical no matter how many workers run or how the scheduler
interleaves them.  Aggregation keys results by replica index.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np
from joblib import Parallel, delayed

from .coverage import run_replica
from .scenarios import ScenarioConfig

__all__ = [
    "derive_replica_seed",
    "derive_replica_seeds",
    "ReplicaResult",
    "MomentEstimate",
    "MomentReport",
    "run_experiment",
    "bootstrap_se",
]

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def _splitmix64(z: int) -> int:
    z = (z + _GOLDEN) & _MASK64
    z = ((z ^ (z >> 30)) * _MIX1) & _MASK64
    z = ((z ^ (z >> 27)) * _MIX2) & _MASK64
    return z ^ (z >> 31)


def derive_replica_seed(master_seed: int, n_searchers: int, replica_index: int) -> int:
    """Stream seed for one replica: a splitmix64 avalanche chain.

    Each chain link is a bijection of the 64-bit state, so for a fixed
    (master seed, N) the map from replica index to seed is injective and
    distinct replicas can never share a stream.
    """
    h = _splitmix64(master_seed & _MASK64)
    h = _splitmix64((h ^ (n_searchers & _MASK64)) & _MASK64)
    return _splitmix64((h ^ (replica_index & _MASK64)) & _MASK64)


def derive_replica_seeds(master_seed: int, n_searchers: int, count: int) -> np.ndarray:
    """Vectorized derive_replica_seed for replica indices 0..count-1."""
    h = _splitmix64(master_seed & _MASK64)
    h = _splitmix64((h ^ (n_searchers & _MASK64)) & _MASK64)
    z = np.arange(count, dtype=np.uint64) ^ np.uint64(h)
    z = z + np.uint64(_GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MIX1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MIX2)
    return z ^ (z >> np.uint64(31))


@dataclass(frozen=True)
class ReplicaResult:
    """One replica's cover-time sample."""

    sigma: float
    censored: bool
    trivially_covered: bool
    replica_index: int
    wall_time: float

    def __post_init__(self) -> None:
        if self.sigma < 0:
            raise ValueError("cover time must be nonnegative")


@dataclass(frozen=True)
class MomentEstimate:
    """Sample estimate of one moment E[sigma^m] with its standard error."""

    order: int
    value: float
    stderr: float
    replicas: int


@dataclass(frozen=True)
class MomentReport:
    """Aggregated replicas for one (scenario, N) cell."""

    scenario_id: str
    n_searchers: int
    replicas: int
    master_seed: int
    moments: tuple[MomentEstimate, ...]
    cv: float | None
    censored_count: int
    trivially_covered_count: int
    samples: tuple[float, ...] | None = None
    censored_flags: tuple[bool, ...] | None = None

    @property
    def valid(self) -> bool:
        """Censored replicas poison the tail that drives moments."""
        return self.censored_count == 0

    def moment(self, order: int) -> MomentEstimate:
        for est in self.moments:
            if est.order == order:
                return est
        raise KeyError(f"moment of order {order} not in report")


def _run_one(scenario: ScenarioConfig, n_searchers: int, seed: int, index: int) -> ReplicaResult:
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    res = run_replica(scenario, n_searchers, rng)
    return ReplicaResult(
        sigma=float(res.sigma),
        censored=bool(res.censored),
        trivially_covered=bool(res.trivially_covered),
        replica_index=index,
        wall_time=time.perf_counter() - t0,
    )


def _aggregate(
    scenario: ScenarioConfig,
    n_searchers: int,
    master_seed: int,
    results: list[ReplicaResult],
    max_moment: int,
    keep_samples: bool,
) -> MomentReport:
    results = sorted(results, key=lambda r: r.replica_index)
    samples = np.array([r.sigma for r in results], dtype=float)
    r_count = samples.size
    moments = []
    for m in range(1, max_moment + 1):
        powered = samples**m
        value = float(powered.mean())
        stderr = float(powered.std(ddof=1) / math.sqrt(r_count)) if r_count > 1 else 0.0
        moments.append(MomentEstimate(order=m, value=value, stderr=stderr, replicas=r_count))
    m1 = moments[0].value
    cv = None
    if m1 > 0 and max_moment >= 2:
        m2 = moments[1].value
        cv = math.sqrt(max(0.0, m2 - m1 * m1)) / m1
    return MomentReport(
        scenario_id=scenario.scenario_id,
        n_searchers=n_searchers,
        replicas=r_count,
        master_seed=master_seed,
        moments=tuple(moments),
        cv=cv,
        censored_count=sum(r.censored for r in results),
        trivially_covered_count=sum(r.trivially_covered for r in results),
        samples=tuple(samples.tolist()) if keep_samples else None,
        censored_flags=tuple(bool(r.censored) for r in results) if keep_samples else None,
    )


def run_experiment(
    scenario: ScenarioConfig,
    n_list=None,
    replicas: int | None = None,
    master_seed: int | None = None,
    n_jobs: int = 1,
    max_moment: int = 3,
    keep_samples: bool = True,
) -> list[MomentReport]:
    """Estimate cover-time moments for each searcher count in n_list.

    Returns one MomentReport per N.  Output is deterministic in
    (master seed, N, replica index) and independent of n_jobs.
    """
    n_list = tuple(scenario.n_list if n_list is None else n_list)
    replicas = scenario.replicas if replicas is None else int(replicas)
    master_seed = scenario.master_seed if master_seed is None else int(master_seed)
    if replicas < 2:
        raise ValueError("need at least 2 replicas for standard errors")
    if any(n < 1 for n in n_list):
        raise ValueError("searcher counts must be >= 1")
    if max_moment < 1:
        raise ValueError("max_moment must be >= 1")

    reports = []
    for n in n_list:
        n = int(n)
        seeds = [derive_replica_seed(master_seed, n, i) for i in range(replicas)]
        if n_jobs == 1:
            results = [_run_one(scenario, n, s, i) for i, s in enumerate(seeds)]
        else:
            results = Parallel(n_jobs=n_jobs)(
                delayed(_run_one)(scenario, n, s, i) for i, s in enumerate(seeds)
            )
        reports.append(_aggregate(scenario, n, master_seed, results, max_moment, keep_samples))
    return reports


def bootstrap_se(samples, order: int = 1, n_boot: int = 500, seed: int = 0) -> float:
    """Bootstrap standard error of a sample moment (offline diagnostic)."""
    x = np.asarray(samples, dtype=float) ** order
    if x.size < 2:
        return 0.0
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, x.size, size=(n_boot, x.size))
    return float(x[idx].mean(axis=1).std(ddof=1))
