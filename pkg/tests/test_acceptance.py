"""Acceptance gate: twelve end-to-end checks at fixed seeds and tolerances.

Each check prints exactly one PASS/FAIL line (to the unbuffered stdout, so
the lines survive pytest capture) and then asserts.  The statistical checks
use the shared module fixtures below; together they run in a few minutes.
"""

import math
import time

import numpy as np
import pytest
from scipy.special import gamma as sp_gamma

from coversim.asymptotics import (
    diffusive_cover_moment,
    max_via_inclusion_exclusion,
    subdiffusive_cover_moment,
)
from coversim.cli import main
from coversim.dynamics import DynamicsSpec, PathStepper
from coversim.estimator import run_experiment
from coversim.geometry import Domain, StartSet, Target
from coversim.scenarios import PRESET_NAMES, ScenarioConfig
from coversim.subordination import (
    SubdiffusionSpec,
    inverse_subordinator,
    sample_theta,
    subdiffusive_displacements,
    subordinator_path,
)


def _report(capsys, num: int, label: str, ok: bool, detail: str) -> None:
    line = f"ACCEPTANCE {num:02d} {'PASS' if ok else 'FAIL'} {label}: {detail}"
    with capsys.disabled():
        print(line, flush=True)
    assert ok, line


def _circle_scenario(scenario_id, seed, **kw):
    base = dict(
        scenario_id=scenario_id,
        domain=Domain.torus(1, 1.3),
        target=Target.full_domain(),
        start=StartSet.point([1.3]),
        detection_radius=0.3,
        master_seed=seed,
        t_max_factor=500.0,
    )
    base.update(kw)
    return ScenarioConfig(**base)


@pytest.fixture(scope="module")
def d1_reports():
    # circle with L = l - r = 1, D = 1, exact range method
    sc = _circle_scenario("acc-d1", 71005, dt=2e-5)
    return {r.n_searchers: r for r in run_experiment(sc, n_list=(10, 100, 10000), replicas=400)}


@pytest.fixture(scope="module")
def d2_reports():
    c = 1.3 / math.sqrt(2.0)
    sc = ScenarioConfig(
        scenario_id="acc-d2",
        domain=Domain.torus(2, 1.3),
        target=Target.full_domain(),
        start=StartSet.point([c, c]),
        detection_radius=0.3,
        master_seed=71008,
        t_max_factor=500.0,
    )
    return {r.n_searchers: r for r in run_experiment(sc, n_list=(100, 10000), replicas=200)}


@pytest.fixture(scope="module")
def sub_report():
    sc = _circle_scenario("acc-sub", 71009, model="subdiffusive", alpha=0.5)
    return run_experiment(sc, n_list=(10000,), replicas=400)[0]


def test_criterion_01_inclusion_exclusion_exact(capsys):
    rng = np.random.default_rng(20240806)
    worst = 0.0
    t0 = time.perf_counter()
    for _ in range(1000):
        k = int(rng.integers(1, 13))
        vals = np.round(rng.normal(0.0, 10.0, size=k), 1)
        if k > 1 and rng.random() < 0.5:
            vals[int(rng.integers(0, k))] = vals[int(rng.integers(0, k))]
        got = max_via_inclusion_exclusion(vals)
        worst = max(worst, abs(got - float(vals.max())) / max(1.0, abs(float(vals.max()))))
    elapsed = time.perf_counter() - t0
    _report(
        capsys,
        1,
        "max identity on 1000 multisets",
        worst <= 1e-9 and elapsed < 1.0,
        f"max rel err {worst:.2e}, {elapsed:.2f}s",
    )


def test_criterion_02_subordinator_laplace(capsys):
    rng = np.random.default_rng(52)
    t0 = time.perf_counter()
    worst_z = 0.0
    for alpha in (0.3, 0.5, 0.8):
        theta = sample_theta(alpha, rng, size=100_000)
        for lam in (0.5, 1.0, 2.0):
            vals = np.exp(-lam * theta)
            z = abs(vals.mean() - math.exp(-(lam**alpha))) / (vals.std(ddof=1) / math.sqrt(vals.size))
            worst_z = max(worst_z, z)
    elapsed = time.perf_counter() - t0
    _report(
        capsys,
        2,
        "stable increment Laplace transform",
        worst_z <= 3.0 and elapsed < 10.0,
        f"worst z {worst_z:.2f} over 9 (alpha, lambda) pairs, {elapsed:.2f}s",
    )


def test_criterion_03_inverse_subordinator_mean(capsys):
    alpha, ds, n_paths = 0.5, 0.005, 10_000
    rng = np.random.default_rng(53)
    t0 = time.perf_counter()
    vals = np.empty(n_paths)
    for i in range(n_paths):
        s_max = 4.0
        path = subordinator_path(alpha, ds, s_max, rng)
        while path[-1] < 1.0:
            s_max *= 2.0
            path = subordinator_path(alpha, ds, s_max, rng)
        vals[i] = inverse_subordinator(path, ds, 1.0)[0]
    elapsed = time.perf_counter() - t0
    want = 1.0 / sp_gamma(1.0 + alpha)
    z = abs(vals.mean() - want) / (vals.std(ddof=1) / math.sqrt(n_paths))
    _report(
        capsys,
        3,
        "inverse subordinator mean at t=1",
        z <= 3.0 and elapsed < 30.0,
        f"mean {vals.mean():.4f} vs {want:.4f}, z={z:.2f}, {elapsed:.1f}s",
    )


def test_criterion_04_msd_slopes(capsys):
    times = np.round(np.geomspace(0.1, 10.0, 9), 2)

    dt = 0.01
    rng = np.random.default_rng(54)
    stepper = PathStepper(
        DynamicsSpec(diffusivity=1.0, dt=dt), Domain.free_space(1), np.zeros((10_000, 1)), rng
    )
    msd_diff = []
    for t in times:
        while stepper.steps < round(t / dt):
            stepper.step()
        msd_diff.append(float((stepper.positions[:, 0] ** 2).mean()))
    slope_diff = np.polyfit(np.log(times), np.log(msd_diff), 1)[0]

    spec = SubdiffusionSpec(alpha=0.5, diffusivity=1.0, ds=0.005, dt=0.005)
    disp = subdiffusive_displacements(spec, times, 10_000, np.random.default_rng(55))
    msd_sub = (disp**2).mean(axis=0)
    slope_sub = np.polyfit(np.log(times), np.log(msd_sub), 1)[0]

    ok = abs(slope_diff - 1.0) <= 0.05 and abs(slope_sub - 0.5) <= 0.05
    _report(
        capsys,
        4,
        "MSD exponents over t in [0.1, 10]",
        ok,
        f"diffusive slope {slope_diff:.3f} (want 1.00), alpha=0.5 slope {slope_sub:.3f} (want 0.50)",
    )


def test_criterion_05_large_n_moment_trend(capsys, d1_reports):
    def ratio(n):
        return d1_reports[n].moment(1).value * 4.0 * math.log(n)

    r4, r2 = ratio(10_000), ratio(100)
    ok = 0.75 <= r4 <= 1.25 and abs(r4 - 1.0) < abs(r2 - 1.0)
    cens = sum(r.censored_count for r in d1_reports.values())
    _report(
        capsys,
        5,
        "mean approaches L^2/(4 D ln N) on the circle",
        ok and cens == 0,
        f"ratio {r4:.3f} at N=1e4 vs {r2:.3f} at N=1e2, censored={cens}",
    )


def test_criterion_06_cv_vanishes(capsys, d1_reports):
    cv_small, cv_large = d1_reports[10].cv, d1_reports[10_000].cv
    ok = cv_large < 0.5 * cv_small
    _report(
        capsys,
        6,
        "cover time concentrates",
        ok,
        f"CV {cv_large:.3f} at N=1e4 vs {cv_small:.3f} at N=10",
    )


def test_criterion_07_target_independence(capsys):
    l = 1.0 / math.sqrt(2.0)
    common = dict(
        domain=Domain.torus(2, l),
        start=StartSet.point([0.5, 0.5]),
        detection_radius=0.3,
        master_seed=71007,
        t_max_factor=500.0,
    )
    full = ScenarioConfig(scenario_id="acc-full", target=Target.full_domain(), **common)
    corner = ScenarioConfig(scenario_id="acc-corner", target=Target.point([0.0, 0.0]), **common)
    m_full = run_experiment(full, n_list=(1000,), replicas=200)[0].moment(1).value
    m_corner = run_experiment(corner, n_list=(1000,), replicas=200)[0].moment(1).value
    rel = abs(m_full - m_corner) / m_full
    _report(
        capsys,
        7,
        "full square vs corner point target at matched L",
        rel <= 0.15,
        f"means {m_full:.5f} vs {m_corner:.5f}, rel diff {rel:.1%}",
    )


def test_criterion_08_dimension_independence(capsys, d1_reports, d2_reports):
    r4 = d1_reports[10_000].moment(1).value / d2_reports[10_000].moment(1).value
    r2 = d1_reports[100].moment(1).value / d2_reports[100].moment(1).value
    ok = 0.8 <= r4 <= 1.25 and abs(r4 - 1.0) < abs(r2 - 1.0)
    _report(
        capsys,
        8,
        "d=1 vs d=2 means at matched L, D",
        ok,
        f"ratio {r4:.3f} at N=1e4 vs {r2:.3f} at N=1e2",
    )


def test_criterion_09_subdiffusion_speedup(capsys, d1_reports, sub_report):
    m_diff = d1_reports[10_000].moment(1)
    m_sub = sub_report.moment(1)
    sep = (m_diff.value - m_sub.value) / math.hypot(m_diff.stderr, m_sub.stderr)
    formula_ok = subdiffusive_cover_moment(1.0, 1.0, 0.5, 10_000) < diffusive_cover_moment(
        1.0, 1.0, 10_000
    )
    _report(
        capsys,
        9,
        "alpha=0.5 covers before alpha=1 at N=1e4",
        sep >= 2.0 and formula_ok and sub_report.censored_count == 0,
        f"means {m_sub.value:.2e} < {m_diff.value:.2e}, separation {sep:.0f} s.e., "
        f"closed forms ordered: {formula_ok}",
    )


def test_criterion_10_thread_count_determinism(capsys, tmp_path):
    mismatches = []
    for name in PRESET_NAMES:
        n_arg = "10,100" if name.startswith("fig5") else "1,10,100"
        outs = []
        for threads in ("1", "2"):
            out = tmp_path / f"{name}-t{threads}"
            rc = main(
                [
                    "--command",
                    "simulate",
                    "--preset",
                    name,
                    "--n-list",
                    n_arg,
                    "--replicas",
                    "20",
                    "--t-max-factor",
                    "500",
                    "--threads",
                    threads,
                    "--out-dir",
                    str(out),
                ]
            )
            assert rc == 0, f"{name} exited {rc} with {threads} threads"
            outs.append(out)
        names1 = sorted(p.name for p in outs[0].iterdir())
        names2 = sorted(p.name for p in outs[1].iterdir())
        if names1 != names2:
            mismatches.append(f"{name}: file sets differ")
            continue
        for fname in names1:
            if (outs[0] / fname).read_bytes() != (outs[1] / fname).read_bytes():
                mismatches.append(f"{name}/{fname}")
    _report(
        capsys,
        10,
        "byte-identical outputs across thread counts",
        not mismatches,
        f"all presets at N<=100, R=20; mismatches: {mismatches or 'none'}",
    )


def test_criterion_11_lattice_vs_range(capsys):
    common = dict(
        domain=Domain.torus(1, 1.0),
        target=Target.full_domain(),
        start=StartSet.point([1.0]),
        detection_radius=0.5,
        t_max_factor=500.0,
    )
    # dx well below the default r/10: the node-phase quantization bias of the
    # lattice tracker is O(dx) and must sit inside the 3 s.e. band
    lat = ScenarioConfig(scenario_id="acc-lat", method="lattice", dx=0.01, master_seed=71011, **common)
    rng_sc = ScenarioConfig(scenario_id="acc-range", method="range", master_seed=71012, **common)
    m_lat = run_experiment(lat, n_list=(100,), replicas=200)[0].moment(1)
    m_rng = run_experiment(rng_sc, n_list=(100,), replicas=200)[0].moment(1)
    z = abs(m_lat.value - m_rng.value) / math.hypot(m_lat.stderr, m_rng.stderr)
    _report(
        capsys,
        11,
        "lattice tracker agrees with exact range method (d=1)",
        z <= 3.0,
        f"means {m_lat.value:.5f} vs {m_rng.value:.5f}, {z:.2f} s.e. apart",
    )


def test_criterion_12_formulas_coincide_at_alpha_one(capsys):
    rng = np.random.default_rng(2024)
    worst = 0.0
    for _ in range(100):
        length = float(rng.uniform(0.05, 5.0))
        diffusivity = float(rng.uniform(0.1, 10.0))
        n = int(rng.integers(2, 10**6))
        order = int(rng.integers(1, 4))
        a = subdiffusive_cover_moment(length, diffusivity, 1.0, n, order)
        b = diffusive_cover_moment(length, diffusivity, n, order)
        worst = max(worst, abs(a - b) / b)
    _report(
        capsys,
        12,
        "alpha=1 limit reproduces the diffusive formula",
        worst == 0.0,
        f"max rel deviation {worst:.1e} on 100 random parameter points",
    )
