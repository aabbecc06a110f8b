"""Scenario configuration: domains, targets, dynamics and run parameters.

A scenario bundles everything one cover-time experiment needs except the
searcher count N, which is swept by the estimator.  Scenarios come from
YAML documents (``load_config``), from named presets, or directly from the
dataclass.  Parsing collects every problem it can find before failing, and
unknown keys are errors rather than silently ignored.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import yaml

from .asymptotics import diffusive_cover_moment, subdiffusive_cover_moment
from .dynamics import Dispersion, Drift
from .geometry import Domain, GeodesicLength, StartSet, Target, geodesic_L
from .subordination import SubdiffusionSpec

__all__ = [
    "ConfigError",
    "ScenarioConfig",
    "scenario_from_dict",
    "load_config",
    "preset",
    "preset_dicts",
    "PRESET_NAMES",
]

_REQUIRED_KEYS = ("scenario_id", "domain", "target", "start", "dynamics", "detection_radius")
_TOP_KEYS = set(_REQUIRED_KEYS) | {
    "n_list",
    "replicas",
    "master_seed",
    "dt",
    "dx",
    "ds",
    "t_max_factor",
    "method",
}


class ConfigError(ValueError):
    """Configuration problems, all of them at once."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("; ".join(self.problems))


@dataclass(frozen=True)
class ScenarioConfig:
    """One cover-time scenario plus its numerical run parameters."""

    scenario_id: str
    domain: Domain
    target: Target
    start: StartSet
    detection_radius: float
    model: str = "diffusive"
    diffusivity: float = 1.0
    alpha: float | None = None
    drift: Drift = field(default_factory=Drift.zero)
    dispersion: Dispersion = field(default_factory=Dispersion.identity)
    n_list: tuple[int, ...] = (1, 10, 100, 1000, 10000)
    replicas: int = 100
    master_seed: int = 20240801
    dt: float | None = None
    dx: float | None = None
    ds: float | None = None
    t_max_factor: float = 50.0
    method: str = "auto"

    def __post_init__(self) -> None:
        if not self.scenario_id:
            raise ValueError("scenario_id must be nonempty")
        if not self.detection_radius > 0:
            raise ValueError("detection_radius must be positive")
        if self.model not in ("diffusive", "subdiffusive"):
            raise ValueError(f"unknown model {self.model!r}")
        if self.model == "subdiffusive":
            if self.alpha is None or not 0.0 < self.alpha < 1.0:
                raise ValueError("subdiffusive model needs alpha strictly between 0 and 1")
            if not self.drift.is_zero or not self.dispersion.is_identity:
                raise ValueError("subdiffusive model supports only zero drift and identity dispersion")
        elif self.alpha is not None:
            raise ValueError("alpha is only meaningful for the subdiffusive model")
        if not self.diffusivity > 0:
            raise ValueError("diffusivity must be positive")
        if self.drift.kind == "constant" and len(self.drift.vector) != self.domain.dim:
            raise ValueError("constant drift vector must match the domain dimension")
        if self.drift.kind == "inward" and self.domain.is_torus:
            raise ValueError("inward drift is meant for free space")
        if self.target.kind == "full_domain" and not self.domain.is_torus:
            raise ValueError("full-domain target needs a bounded domain")
        if self.domain.is_torus:
            for label, obj in (("start", self.start), ("target", self.target)):
                if obj.kind == "full_domain":
                    continue
                for c in obj.center_array():
                    if not self.domain.contains(c):
                        raise ValueError(f"{label} center {tuple(c)} outside the fundamental box")
        if len(self.n_list) == 0:
            raise ValueError("n_list must be nonempty")
        if any(int(n) != n or n < 1 for n in self.n_list):
            raise ValueError("searcher counts must be integers >= 1")
        if self.replicas < 1:
            raise ValueError("replicas must be >= 1")
        for name in ("dt", "dx", "ds"):
            v = getattr(self, name)
            if v is not None and not v > 0:
                raise ValueError(f"{name} must be positive")
        if self.dx is not None and self.dx > self.detection_radius / 10.0 * (1 + 1e-12):
            raise ValueError("lattice spacing dx must not exceed detection_radius / 10")
        if not self.t_max_factor > 0:
            raise ValueError("t_max_factor must be positive")
        if self.method not in ("auto", "lattice", "range"):
            raise ValueError(f"unknown method {self.method!r}")
        if self.method == "range" and not self.range_eligible:
            raise ValueError(
                "range method needs d=1 torus, point start, full-domain target and "
                "driftless isotropic dynamics; use method 'lattice'"
            )

    # ---- derived quantities -------------------------------------------------

    @property
    def range_eligible(self) -> bool:
        return (
            self.domain.is_torus
            and self.domain.dim == 1
            and self.start.kind == "point"
            and self.target.kind == "full_domain"
            and self.drift.is_zero
            and self.dispersion.is_identity
        )

    @property
    def effective_method(self) -> str:
        if self.method == "auto":
            return "range" if self.range_eligible else "lattice"
        return self.method

    @cached_property
    def geodesic_length(self) -> GeodesicLength:
        """Length scale L entering the moment formulas (dispersion-rescaled)."""
        base = geodesic_L(self.domain, self.start, self.target, self.detection_radius)
        if self.dispersion.is_identity:
            return base
        scale = math.sqrt(self.dispersion.a_value())
        return GeodesicLength(base.value / scale, base.trivially_covered)

    def predicted_moment(self, n_searchers: int, order: int = 1) -> float | None:
        """Closed-form large-N moment, or None when it does not apply."""
        length = self.geodesic_length.value
        if n_searchers < 2 or length <= 0:
            return None
        if self.model == "subdiffusive":
            return subdiffusive_cover_moment(length, self.diffusivity, self.alpha, n_searchers, order)
        return diffusive_cover_moment(length, self.diffusivity, n_searchers, order)

    def resolved_dx(self) -> float:
        """Effective lattice spacing; on a torus it divides the box exactly."""
        req = self.dx if self.dx is not None else self.detection_radius / 10.0
        if not self.domain.is_torus:
            return req
        n = max(1, math.ceil(self.domain.side / req - 1e-9))
        return self.domain.side / n

    def resolved_dt(self, n_searchers: int) -> float:
        if self.dt is not None:
            return self.dt
        if self.model == "subdiffusive":
            return SubdiffusionSpec.default_step(n_searchers)
        if self.effective_method == "range":
            return 1e-6
        dx = self.resolved_dx()
        return dx * dx / 8.0

    def resolved_ds(self, n_searchers: int) -> float:
        if self.ds is not None:
            return self.ds
        if self.dt is not None:
            return self.dt
        return SubdiffusionSpec.default_step(n_searchers)

    def subdiffusion_spec(self, n_searchers: int) -> SubdiffusionSpec:
        if self.model != "subdiffusive":
            raise ValueError("scenario is not subdiffusive")
        return SubdiffusionSpec(
            alpha=self.alpha,
            diffusivity=self.diffusivity,
            ds=self.resolved_ds(n_searchers),
            dt=self.resolved_dt(n_searchers),
        )

    def t_max(self, n_searchers: int) -> float:
        """Censoring horizon: t_max_factor times the large-N mean scale."""
        length = max(self.geodesic_length.value, self.detection_radius)
        n_eff = max(n_searchers, 2)
        if self.model == "subdiffusive":
            base = subdiffusive_cover_moment(length, self.diffusivity, self.alpha, n_eff)
        else:
            base = diffusive_cover_moment(length, self.diffusivity, n_eff)
        return self.t_max_factor * base

    def max_steps(self, n_searchers: int) -> int:
        return max(1, math.ceil(self.t_max(n_searchers) / self.resolved_dt(n_searchers)))

    def warnings(self) -> list[str]:
        out = []
        if self.geodesic_length.trivially_covered:
            out.append(
                "detection radius reaches every target point from the start set; "
                "cover times are trivially zero"
            )
        return out


# ---- parsing ----------------------------------------------------------------


def _parse_section(raw, label, allowed, required, problems) -> dict | None:
    if raw is None:
        return None
    if not isinstance(raw, dict):
        problems.append(f"{label} must be a mapping")
        return None
    for k in sorted(set(raw) - set(allowed)):
        problems.append(f"{label}: unknown key {k!r}")
    missing = [k for k in required if k not in raw]
    if missing:
        problems.append(f"{label}: missing {', '.join(missing)}")
        return None
    return raw


def _parse_domain(raw, problems) -> Domain | None:
    sec = _parse_section(raw, "domain", ("kind", "dim", "diameter"), ("kind", "dim"), problems)
    if sec is None:
        return None
    try:
        if sec["kind"] == "torus":
            if "diameter" not in sec:
                problems.append("domain: torus needs a diameter")
                return None
            return Domain.torus(int(sec["dim"]), float(sec["diameter"]))
        if sec["kind"] == "free":
            return Domain.free_space(int(sec["dim"]))
        problems.append(f"domain: unknown kind {sec['kind']!r}")
    except (TypeError, ValueError) as exc:
        problems.append(f"domain: {exc}")
    return None


def _parse_target(raw, problems) -> Target | None:
    sec = _parse_section(raw, "target", ("kind", "centers", "radius", "point"), ("kind",), problems)
    if sec is None:
        return None
    try:
        kind = sec["kind"]
        if kind == "full_domain":
            return Target.full_domain()
        if kind == "balls":
            return Target.balls(sec.get("centers"), float(sec.get("radius", 0.0)))
        if kind == "point":
            return Target.point(sec.get("point"))
        problems.append(f"target: unknown kind {kind!r}")
    except (TypeError, ValueError) as exc:
        problems.append(f"target: {exc}")
    return None


def _parse_start(raw, problems) -> StartSet | None:
    sec = _parse_section(raw, "start", ("kind", "centers", "radius", "point"), ("kind",), problems)
    if sec is None:
        return None
    try:
        kind = sec["kind"]
        if kind == "point":
            return StartSet.point(sec.get("point"))
        if kind == "balls":
            return StartSet.balls(sec.get("centers"), float(sec.get("radius", 0.0)))
        problems.append(f"start: unknown kind {kind!r}")
    except (TypeError, ValueError) as exc:
        problems.append(f"start: {exc}")
    return None


def _parse_drift(raw, problems) -> Drift:
    sec = _parse_section(raw, "drift", ("kind", "vector", "strength", "radius"), ("kind",), problems)
    if sec is None:
        return Drift.zero()
    try:
        kind = sec["kind"]
        if kind == "zero":
            return Drift.zero()
        if kind == "constant":
            return Drift.constant(sec.get("vector"))
        if kind == "inward":
            return Drift.inward(float(sec.get("strength", 0.0)), float(sec.get("radius", 0.0)))
        problems.append(f"drift: unknown kind {kind!r}")
    except (TypeError, ValueError) as exc:
        problems.append(f"drift: {exc}")
    return Drift.zero()


def _parse_dispersion(raw, problems) -> Dispersion:
    sec = _parse_section(raw, "dispersion", ("kind", "value"), ("kind",), problems)
    if sec is None:
        return Dispersion.identity()
    try:
        kind = sec["kind"]
        if kind == "identity":
            return Dispersion.identity()
        if kind == "isotropic":
            return Dispersion.isotropic(float(sec.get("value", 0.0)))
        problems.append(f"dispersion: unknown kind {kind!r}")
    except (TypeError, ValueError) as exc:
        problems.append(f"dispersion: {exc}")
    return Dispersion.identity()


def scenario_from_dict(raw: dict, default_id: str | None = None) -> ScenarioConfig:
    """Build a scenario from a parsed configuration mapping.

    Raises ConfigError listing every detected problem, including unknown
    keys and missing required ones.
    """
    if not isinstance(raw, dict) or not raw:
        raise ConfigError(
            [f"configuration must be a nonempty mapping with keys: {', '.join(_REQUIRED_KEYS)}"]
        )
    problems: list[str] = []
    for k in sorted(set(raw) - _TOP_KEYS):
        problems.append(f"unknown key {k!r}")
    required = [k for k in _REQUIRED_KEYS if k != "scenario_id" or default_id is None]
    missing = [k for k in required if k not in raw]
    if missing:
        problems.append(f"missing required keys: {', '.join(missing)}")

    domain = _parse_domain(raw.get("domain"), problems)
    target = _parse_target(raw.get("target"), problems)
    start = _parse_start(raw.get("start"), problems)

    dyn = _parse_section(
        raw.get("dynamics"),
        "dynamics",
        ("model", "diffusivity", "alpha", "drift", "dispersion"),
        ("model", "diffusivity"),
        problems,
    )
    model, diffusivity, alpha = "diffusive", 1.0, None
    drift, dispersion = Drift.zero(), Dispersion.identity()
    if dyn is not None:
        model = dyn["model"]
        try:
            diffusivity = float(dyn["diffusivity"])
        except (TypeError, ValueError):
            problems.append("dynamics: diffusivity must be a number")
        if "alpha" in dyn:
            try:
                alpha = float(dyn["alpha"])
            except (TypeError, ValueError):
                problems.append("dynamics: alpha must be a number")
        if "drift" in dyn:
            drift = _parse_drift(dyn["drift"], problems)
        if "dispersion" in dyn:
            dispersion = _parse_dispersion(dyn["dispersion"], problems)

    kwargs = {}
    try:
        if "n_list" in raw:
            kwargs["n_list"] = tuple(int(n) for n in raw["n_list"])
        if "replicas" in raw:
            kwargs["replicas"] = int(raw["replicas"])
        if "master_seed" in raw:
            kwargs["master_seed"] = int(raw["master_seed"])
        for k in ("dt", "dx", "ds", "t_max_factor"):
            if k in raw and raw[k] is not None:
                kwargs[k] = float(raw[k])
        if "method" in raw:
            kwargs["method"] = str(raw["method"])
    except (TypeError, ValueError) as exc:
        problems.append(f"run parameters: {exc}")

    if problems:
        raise ConfigError(problems)
    try:
        return ScenarioConfig(
            scenario_id=str(raw.get("scenario_id", default_id)),
            domain=domain,
            target=target,
            start=start,
            detection_radius=float(raw["detection_radius"]),
            model=model,
            diffusivity=diffusivity,
            alpha=alpha,
            drift=drift,
            dispersion=dispersion,
            **kwargs,
        )
    except (TypeError, ValueError) as exc:
        raise ConfigError([str(exc)]) from exc


def load_config(path) -> list[ScenarioConfig]:
    """Load one or more scenarios from a YAML (or JSON) document."""
    p = Path(path)
    if not p.exists():
        raise ConfigError([f"config file not found: {p}"])
    raw = yaml.safe_load(p.read_text(encoding="utf-8"))
    if raw is None:
        raise ConfigError(
            [f"config file is empty; required keys: {', '.join(_REQUIRED_KEYS)}"]
        )
    if isinstance(raw, dict) and "scenarios" in raw:
        extra = set(raw) - {"scenarios"}
        if extra:
            raise ConfigError([f"unknown key {k!r} next to 'scenarios'" for k in sorted(extra)])
        docs = raw["scenarios"]
        if not isinstance(docs, list) or not docs:
            raise ConfigError(["'scenarios' must be a nonempty list"])
        return [scenario_from_dict(d, default_id=f"{p.stem}-{i}") for i, d in enumerate(docs)]
    return [scenario_from_dict(raw, default_id=p.stem)]


# ---- presets ----------------------------------------------------------------

_L_FIG2 = 1.0 / math.sqrt(2.0)
_CENTER_2D = 1.3 / math.sqrt(2.0)

_PRESETS: dict[str, tuple[dict, ...]] = {
    # unit-square torus, full coverage, searchers released at the center
    "fig2-torus2d": (
        {
            "scenario_id": "fig2-torus2d",
            "domain": {"kind": "torus", "dim": 2, "diameter": _L_FIG2},
            "target": {"kind": "full_domain"},
            "start": {"kind": "point", "point": [0.5, 0.5]},
            "dynamics": {"model": "diffusive", "diffusivity": 1.0},
            "detection_radius": 0.3,
            "n_list": [1, 10, 100, 1000, 10000],
            "replicas": 100,
            "master_seed": 20240801,
        },
    ),
    # same square, but only a disk around the far corner must be found
    "fig3-disk-target": (
        {
            "scenario_id": "fig3-disk-target",
            "domain": {"kind": "torus", "dim": 2, "diameter": _L_FIG2},
            "target": {"kind": "balls", "centers": [[0.0, 0.0]], "radius": 0.2},
            "start": {"kind": "point", "point": [0.5, 0.5]},
            "dynamics": {"model": "diffusive", "diffusivity": 1.0},
            "detection_radius": 0.3,
            "n_list": [1, 10, 100, 1000, 10000],
            "replicas": 100,
            "master_seed": 20240802,
        },
    ),
    # several irregularly placed small disks, one at the far corner
    "fig4-multi-disk": (
        {
            "scenario_id": "fig4-multi-disk",
            "domain": {"kind": "torus", "dim": 2, "diameter": _L_FIG2},
            "target": {
                "kind": "balls",
                "centers": [[0.0, 0.0], [0.25, 0.7], [0.6, 0.15], [0.8, 0.55]],
                "radius": 0.1,
            },
            "start": {"kind": "point", "point": [0.5, 0.5]},
            "dynamics": {"model": "diffusive", "diffusivity": 1.0},
            "detection_radius": 0.3,
            "n_list": [1, 10, 100, 1000, 10000],
            "replicas": 100,
            "master_seed": 20240803,
        },
    ),
    # matched length scale L = 1 in dimensions one and two
    "fig5-left-dim-ratio": (
        {
            "scenario_id": "fig5-left-d1",
            "domain": {"kind": "torus", "dim": 1, "diameter": 1.3},
            "target": {"kind": "full_domain"},
            "start": {"kind": "point", "point": [1.3]},
            "dynamics": {"model": "diffusive", "diffusivity": 1.0},
            "detection_radius": 0.3,
            "n_list": [10, 100, 1000, 10000],
            "replicas": 100,
            "master_seed": 20240804,
        },
        {
            "scenario_id": "fig5-left-d2",
            "domain": {"kind": "torus", "dim": 2, "diameter": 1.3},
            "target": {"kind": "full_domain"},
            "start": {"kind": "point", "point": [_CENTER_2D, _CENTER_2D]},
            "dynamics": {"model": "diffusive", "diffusivity": 1.0},
            "detection_radius": 0.3,
            "n_list": [10, 100, 1000, 10000],
            "replicas": 100,
            "master_seed": 20240804,
        },
    ),
    # subdiffusive versus diffusive searchers on the same circle, L = 1
    "fig5-right-subdiffusion": (
        {
            "scenario_id": "fig5-right-sub",
            "domain": {"kind": "torus", "dim": 1, "diameter": 1.3},
            "target": {"kind": "full_domain"},
            "start": {"kind": "point", "point": [1.3]},
            "dynamics": {"model": "subdiffusive", "diffusivity": 1.0, "alpha": 0.5},
            "detection_radius": 0.3,
            "n_list": [10, 100, 1000, 10000],
            "replicas": 100,
            "master_seed": 20240805,
            "t_max_factor": 500.0,
        },
        {
            "scenario_id": "fig5-right-diff",
            "domain": {"kind": "torus", "dim": 1, "diameter": 1.3},
            "target": {"kind": "full_domain"},
            "start": {"kind": "point", "point": [1.3]},
            "dynamics": {"model": "diffusive", "diffusivity": 1.0},
            "detection_radius": 0.3,
            "n_list": [10, 100, 1000, 10000],
            "replicas": 100,
            "master_seed": 20240805,
        },
    ),
}

PRESET_NAMES = tuple(sorted(_PRESETS))


def preset_dicts(name: str) -> list[dict]:
    """Raw configuration mappings behind a preset (for run manifests)."""
    if name not in _PRESETS:
        raise ConfigError([f"unknown preset {name!r}; available: {', '.join(PRESET_NAMES)}"])
    return [dict(d) for d in _PRESETS[name]]


def preset(name: str) -> list[ScenarioConfig]:
    """Named scenario bundles mirroring the package's study configurations."""
    return [scenario_from_dict(d) for d in preset_dicts(name)]
