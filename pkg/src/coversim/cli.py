"""Command-line front end: configuration, experiments, plot-ready tables.

Commands
    simulate            per-N moment table plus raw cover-time samples
    predict             closed-form values (moments, single-searcher time,
                        regime crossover) without running any simulation
    compare             moment table joined with predictions and ratios
    convergence-study   means under halved step sizes (dt, dx, ds)
    lemma-check         inclusion-exclusion identity over random multisets

All tables are long-format CSV with a ``# master_seed=...`` header line and
floats rendered with 12 significant digits; a JSON run manifest records the
effective configuration and library versions.  Exit codes: 0 success,
2 configuration error, 3 censored-sample abort, 4 numeric failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import io
import csv
import json
import platform
import sys
from pathlib import Path

import numpy as np
import scipy

from . import __version__
from .asymptotics import (
    cover_time_regimes,
    max_via_inclusion_exclusion,
    single_searcher_cover_time,
)
from .dynamics import NumericError
from .estimator import MomentReport, run_experiment
from .scenarios import (
    ConfigError,
    PRESET_NAMES,
    ScenarioConfig,
    load_config,
    preset,
)

__all__ = ["main", "run_command", "build_parser"]

_COMMANDS = ("simulate", "predict", "compare", "convergence-study", "lemma-check")
_MOMENT_HEADER = (
    "scenario_id",
    "N",
    "m",
    "estimate",
    "stderr",
    "prediction",
    "ratio",
    "replicas",
    "seed",
)


class CensoredAbort(RuntimeError):
    """Raised when any replica hit the time cap; moments would be biased."""


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="coversim",
        description="Cover times of many diffusive and subdiffusive searchers.",
    )
    p.add_argument("--command", required=True, choices=_COMMANDS)
    p.add_argument("--config", type=Path, help="YAML scenario file")
    p.add_argument("--preset", choices=PRESET_NAMES, help="named built-in scenario bundle")
    p.add_argument("--n-list", type=str, help="comma-separated searcher counts, e.g. 10,100")
    p.add_argument("--replicas", type=int, help="replicas per (scenario, N) cell")
    p.add_argument("--seed", type=int, help="master seed override")
    p.add_argument("--threads", type=int, default=1, help="parallel workers (default 1)")
    p.add_argument("--out-dir", type=Path, default=Path("out"), help="output directory")
    p.add_argument("--t-max-factor", type=float, help="censoring horizon multiplier override")
    p.add_argument("--dt", type=float, help="time step override")
    p.add_argument("--dx", type=float, help="lattice spacing override")
    return p


def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, float):
        return format(x, ".12g")
    return str(x)


def _write_csv(path: Path, header, rows, master_seed: int) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt(v) for v in row])
    path.write_text(f"# master_seed={master_seed}\n" + buf.getvalue(), encoding="utf-8")


def _load_scenarios(args) -> list[ScenarioConfig]:
    if (args.config is None) == (args.preset is None):
        raise ConfigError(["provide exactly one of --config or --preset"])
    scens = preset(args.preset) if args.preset else load_config(args.config)
    overrides = {}
    if args.n_list:
        try:
            overrides["n_list"] = tuple(int(tok) for tok in args.n_list.split(",") if tok)
        except ValueError as exc:
            raise ConfigError([f"--n-list must be comma-separated integers: {exc}"]) from exc
    if args.replicas is not None:
        overrides["replicas"] = args.replicas
    if args.seed is not None:
        overrides["master_seed"] = args.seed
    if args.t_max_factor is not None:
        overrides["t_max_factor"] = args.t_max_factor
    if args.dt is not None:
        overrides["dt"] = args.dt
    if args.dx is not None:
        overrides["dx"] = args.dx
    if not overrides:
        return scens
    try:
        return [dataclasses.replace(s, **overrides) for s in scens]
    except ValueError as exc:
        raise ConfigError([str(exc)]) from exc


def _write_manifest(out_dir: Path, command: str, scens: list[ScenarioConfig]) -> None:
    manifest = {
        "command": command,
        "scenarios": [dataclasses.asdict(s) for s in scens],
        "versions": {
            "coversim": __version__,
            "numpy": np.__version__,
            "scipy": scipy.__version__,
            "python": platform.python_version(),
        },
    }
    path = out_dir / "run_manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _check_censoring(reports: list[MomentReport]) -> None:
    bad = [r for r in reports if not r.valid]
    if bad:
        detail = "; ".join(
            f"{r.scenario_id} N={r.n_searchers}: {r.censored_count}/{r.replicas} censored"
            for r in bad
        )
        raise CensoredAbort(
            f"replicas hit the time cap before covering ({detail}); "
            "raise --t-max-factor or refine steps"
        )


def _moment_rows(scenario: ScenarioConfig, reports: list[MomentReport]):
    rows = []
    for rep in reports:
        for est in rep.moments:
            pred = scenario.predicted_moment(rep.n_searchers, est.order)
            ratio = est.value / pred if pred else None
            rows.append(
                (
                    scenario.scenario_id,
                    rep.n_searchers,
                    est.order,
                    est.value,
                    est.stderr,
                    pred,
                    ratio,
                    rep.replicas,
                    rep.master_seed,
                )
            )
    return rows


def _sample_rows(scenario: ScenarioConfig, reports: list[MomentReport]):
    rows = []
    for rep in reports:
        for idx, (sigma, cens) in enumerate(zip(rep.samples, rep.censored_flags)):
            rows.append((scenario.scenario_id, rep.n_searchers, idx, sigma, cens))
    return rows


def _cmd_simulate(scens, args, joined: bool) -> None:
    args.out_dir.mkdir(parents=True, exist_ok=True)
    suffix = "_compare.csv" if joined else "_moments.csv"
    all_reports = []
    for sc in scens:
        for w in sc.warnings():
            print(f"warning: {sc.scenario_id}: {w}", file=sys.stderr)
        reports = run_experiment(sc, n_jobs=args.threads)
        _write_csv(
            args.out_dir / f"{sc.scenario_id}{suffix}",
            _MOMENT_HEADER,
            _moment_rows(sc, reports),
            sc.master_seed,
        )
        if not joined:
            _write_csv(
                args.out_dir / f"{sc.scenario_id}_samples.csv",
                ("scenario_id", "N", "replica", "sigma", "censored"),
                _sample_rows(sc, reports),
                sc.master_seed,
            )
        all_reports.extend(reports)
    _write_manifest(args.out_dir, "compare" if joined else "simulate", scens)
    _check_censoring(all_reports)


def _prediction_rows(sc: ScenarioConfig):
    rows = []
    for n in sc.n_list:
        if n < 2:
            raise ConfigError(
                [f"{sc.scenario_id}: predictions are undefined for N={n} (ln N vanishes); use N >= 2"]
            )
    for n in sc.n_list:
        for m in (1, 2, 3):
            rows.append((sc.scenario_id, n, m, "moment", sc.predicted_moment(n, m)))
    single_time = None
    if sc.domain.is_torus and sc.domain.dim >= 2 and sc.target.kind == "full_domain" and sc.model == "diffusive":
        single_time = single_searcher_cover_time(
            sc.domain.dim, sc.domain.volume, sc.detection_radius, sc.diffusivity
        )
        rows.append((sc.scenario_id, None, None, "single_searcher_time", single_time))
        length = sc.geodesic_length.value
        if length > 0:
            for n in sc.n_list:
                reg = cover_time_regimes(single_time, length, sc.diffusivity, n)
                rows.append((sc.scenario_id, n, None, "regime_single_branch", reg.single_branch))
                rows.append((sc.scenario_id, n, None, "regime_crowd_branch", reg.crowd_branch))
                rows.append((sc.scenario_id, n, None, "regime_value", reg.value))
                rows.append((sc.scenario_id, n, None, "regime_active", reg.active))
    return rows


def _cmd_predict(scens, args) -> None:
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for sc in scens:
        _write_csv(
            args.out_dir / f"{sc.scenario_id}_predictions.csv",
            ("scenario_id", "N", "m", "quantity", "value"),
            _prediction_rows(sc),
            sc.master_seed,
        )
    _write_manifest(args.out_dir, "predict", scens)


def _cmd_convergence(scens, args) -> None:
    args.out_dir.mkdir(parents=True, exist_ok=True)
    all_reports = []
    for sc in scens:
        n = int(sc.n_list[0])
        variants: list[tuple[str, dict]] = [("baseline", {})]
        variants.append(("dt-half", {"dt": sc.resolved_dt(n) / 2.0}))
        if sc.effective_method == "lattice":
            variants.append(("dx-half", {"dx": sc.resolved_dx() / 2.0}))
        if sc.model == "subdiffusive":
            variants.append(("ds-half", {"ds": sc.resolved_ds(n) / 2.0}))
        rows = []
        for label, over in variants:
            variant = dataclasses.replace(sc, **over) if over else sc
            reports = run_experiment(variant, n_list=(n,), n_jobs=args.threads)
            rep = reports[0]
            est = rep.moment(1)
            rows.append(
                (
                    sc.scenario_id,
                    n,
                    label,
                    variant.resolved_dx() if variant.effective_method == "lattice" else None,
                    variant.resolved_dt(n),
                    variant.resolved_ds(n) if variant.model == "subdiffusive" else None,
                    est.value,
                    est.stderr,
                    rep.replicas,
                    rep.master_seed,
                )
            )
            all_reports.extend(reports)
        _write_csv(
            args.out_dir / f"{sc.scenario_id}_convergence.csv",
            ("scenario_id", "N", "variant", "dx", "dt", "ds", "m1", "stderr", "replicas", "seed"),
            rows,
            sc.master_seed,
        )
    _write_manifest(args.out_dir, "convergence-study", scens)
    _check_censoring(all_reports)


def _cmd_lemma_check(args) -> int:
    seed = args.seed if args.seed is not None else 20240806
    rng = np.random.default_rng(seed)
    n_sets = 1000
    worst = 0.0
    for _ in range(n_sets):
        k = int(rng.integers(1, 13))
        vals = np.round(rng.normal(0.0, 10.0, size=k), 1)
        if k > 1 and rng.random() < 0.5:
            vals[rng.integers(0, k)] = vals[rng.integers(0, k)]  # force duplicates
        got = max_via_inclusion_exclusion(vals)
        want = float(np.max(vals))
        worst = max(worst, abs(got - want) / max(1.0, abs(want)))
    ok = worst <= 1e-9
    args.out_dir.mkdir(parents=True, exist_ok=True)
    _write_csv(
        args.out_dir / "lemma_check.csv",
        ("n_sets", "k_max", "max_rel_error", "passed"),
        [(n_sets, 12, worst, ok)],
        seed,
    )
    print(f"lemma-check: {'PASS' if ok else 'FAIL'} ({n_sets} multisets, max rel error {worst:.3g})")
    return 0 if ok else 4


def run_command(args: argparse.Namespace) -> int:
    """Dispatch a parsed command line; returns the process exit code."""
    if args.command == "lemma-check":
        return _cmd_lemma_check(args)
    scens = _load_scenarios(args)
    if args.command == "simulate":
        _cmd_simulate(scens, args, joined=False)
    elif args.command == "compare":
        _cmd_simulate(scens, args, joined=True)
    elif args.command == "predict":
        _cmd_predict(scens, args)
    elif args.command == "convergence-study":
        _cmd_convergence(scens, args)
    return 0


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return run_command(args)
    except ConfigError as exc:
        for problem in exc.problems:
            print(f"config error: {problem}", file=sys.stderr)
        return 2
    except CensoredAbort as exc:
        print(f"censored: {exc}", file=sys.stderr)
        return 3
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return 4
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
