"""Scenario validation, YAML loading, presets, resolved discretization."""

import math

import numpy as np
import pytest

from coversim.geometry import Domain, StartSet, Target
from coversim.scenarios import (
    PRESET_NAMES,
    ConfigError,
    ScenarioConfig,
    load_config,
    preset,
    scenario_from_dict,
)


def base_dict(**kw):
    d = {
        "scenario_id": "t",
        "domain": {"kind": "torus", "dim": 1, "diameter": 1.0},
        "target": {"kind": "full_domain"},
        "start": {"kind": "point", "point": [1.0]},
        "dynamics": {"model": "diffusive", "diffusivity": 1.0},
        "detection_radius": 0.3,
    }
    d.update(kw)
    return d


def dyn(**kw):
    d = {"model": "diffusive", "diffusivity": 1.0}
    d.update(kw)
    return d


def test_minimal_dict_roundtrip():
    sc = scenario_from_dict(base_dict())
    assert sc.scenario_id == "t"
    assert sc.model == "diffusive"
    assert sc.diffusivity == 1.0
    assert sc.range_eligible
    assert sc.effective_method == "range"


def test_unknown_keys_rejected():
    with pytest.raises(ConfigError, match="bogus"):
        scenario_from_dict(base_dict(bogus=1))
    with pytest.raises(ConfigError, match="cells"):
        scenario_from_dict(
            base_dict(domain={"kind": "torus", "dim": 1, "diameter": 1.0, "cells": 2})
        )
    with pytest.raises(ConfigError, match="temperature"):
        scenario_from_dict(base_dict(dynamics=dyn(temperature=300)))


def test_missing_required_keys_listed_together():
    with pytest.raises(ConfigError) as err:
        scenario_from_dict({"scenario_id": "x"})
    msg = str(err.value)
    for key in ("domain", "target", "start", "dynamics", "detection_radius"):
        assert key in msg


def test_multiple_problems_aggregated():
    bad = base_dict(bogus=1)
    bad["start"] = {"kind": "nowhere"}
    with pytest.raises(ConfigError) as err:
        scenario_from_dict(bad)
    assert len(err.value.problems) == 2
    msg = str(err.value)
    assert "bogus" in msg and "start" in msg


def test_subdiffusive_validation():
    sc = scenario_from_dict(base_dict(dynamics=dyn(model="subdiffusive", alpha=0.5)))
    assert sc.alpha == 0.5
    for bad_alpha in (0.0, 1.0, 1.5, -0.2):
        with pytest.raises(ConfigError, match="alpha"):
            scenario_from_dict(base_dict(dynamics=dyn(model="subdiffusive", alpha=bad_alpha)))
    with pytest.raises(ConfigError, match="alpha"):
        scenario_from_dict(base_dict(dynamics=dyn(alpha=0.5)))  # diffusive forbids alpha
    with pytest.raises(ConfigError, match="drift"):
        scenario_from_dict(
            base_dict(
                dynamics=dyn(
                    model="subdiffusive",
                    alpha=0.5,
                    drift={"kind": "constant", "vector": [1.0]},
                )
            )
        )


def test_inward_drift_needs_free_space():
    inward = {"kind": "inward", "strength": 1.0, "radius": 2.0}
    with pytest.raises(ConfigError, match="free space"):
        scenario_from_dict(base_dict(dynamics=dyn(drift=inward)))
    sc = scenario_from_dict(
        base_dict(
            domain={"kind": "free", "dim": 1},
            target={"kind": "balls", "centers": [[0.0]], "radius": 0.2},
            dynamics=dyn(drift=inward),
        )
    )
    assert not sc.drift.is_zero


def test_full_domain_target_needs_torus():
    with pytest.raises(ConfigError, match="bounded"):
        scenario_from_dict(base_dict(domain={"kind": "free", "dim": 1}))


def test_method_range_requires_eligibility():
    with pytest.raises(ConfigError, match="range"):
        scenario_from_dict(
            base_dict(
                method="range",
                domain={"kind": "torus", "dim": 2, "diameter": 1.0},
                start={"kind": "point", "point": [0.5, 0.5]},
            )
        )
    sc = scenario_from_dict(base_dict(method="lattice"))
    assert sc.effective_method == "lattice"


def test_dx_too_coarse_rejected():
    with pytest.raises(ConfigError, match="dx"):
        scenario_from_dict(base_dict(dx=0.05))
    scenario_from_dict(base_dict(dx=0.03))  # r/10 exactly is fine


def test_nontrivial_geometry_warning():
    sc = scenario_from_dict(base_dict(detection_radius=1.2))
    assert any("trivially" in w for w in sc.warnings())
    assert sc.geodesic_length.trivially_covered
    assert scenario_from_dict(base_dict()).warnings() == []


def test_resolved_dx_divides_torus_side():
    sc = scenario_from_dict(base_dict(detection_radius=0.29))
    side = sc.domain.side
    dx = sc.resolved_dx()
    n = side / dx
    assert abs(n - round(n)) < 1e-9
    assert dx <= 0.029 * (1 + 1e-9)


def test_resolved_dt_by_method():
    rng_sc = scenario_from_dict(base_dict())
    assert rng_sc.resolved_dt(100) == 1e-6
    lat = scenario_from_dict(
        base_dict(
            domain={"kind": "torus", "dim": 2, "diameter": 1.0},
            start={"kind": "point", "point": [0.5, 0.5]},
        )
    )
    dx = lat.resolved_dx()
    assert lat.resolved_dt(100) == pytest.approx(dx * dx / 8)
    sub = scenario_from_dict(base_dict(dynamics=dyn(model="subdiffusive", alpha=0.5)))
    assert sub.resolved_dt(100) == pytest.approx(1e-2 / (4 * math.log(100)))
    assert sub.resolved_ds(100) == sub.resolved_dt(100)
    over = scenario_from_dict(base_dict(dt=1e-3))
    assert over.resolved_dt(10**6) == 1e-3


def test_geodesic_length_closed_form_and_dispersion_rescale():
    sc = scenario_from_dict(base_dict())
    assert sc.geodesic_length.value == pytest.approx(0.7)
    slow = scenario_from_dict(
        base_dict(dynamics=dyn(dispersion={"kind": "isotropic", "value": 0.5}))
    )
    # a = value^2 = 1/4, lengths stretch by 1/sqrt(a) = 2
    assert slow.geodesic_length.value == pytest.approx(1.4)


def test_predicted_moment_uses_geodesic_length():
    sc = scenario_from_dict(base_dict())
    n = 10**4
    want = (0.49 / 4.0) / math.log(n)
    assert sc.predicted_moment(n, 1) == pytest.approx(want)
    assert sc.predicted_moment(n, 2) == pytest.approx(want**2)
    assert sc.predicted_moment(1, 1) is None


def test_t_max_scales_with_horizon_factor():
    a = scenario_from_dict(base_dict())
    b = scenario_from_dict(base_dict(t_max_factor=100.0))
    assert b.t_max(100) == pytest.approx(2 * a.t_max(100))
    assert a.max_steps(100) == math.ceil(a.t_max(100) / a.resolved_dt(100))


def test_yaml_single_scenario(tmp_path):
    p = tmp_path / "one.yaml"
    p.write_text(
        "scenario_id: solo\n"
        "domain: {kind: torus, dim: 1, diameter: 1.0}\n"
        "target: {kind: full_domain}\n"
        "start: {kind: point, point: [1.0]}\n"
        "dynamics: {model: diffusive, diffusivity: 1.0}\n"
        "detection_radius: 0.3\n"
        "n_list: [10, 100]\n"
        "replicas: 7\n"
    )
    scens = load_config(p)
    assert len(scens) == 1
    assert scens[0].scenario_id == "solo"
    assert scens[0].n_list == (10, 100)
    assert scens[0].replicas == 7


def test_yaml_scenario_list_and_default_ids(tmp_path):
    p = tmp_path / "pair.yaml"
    p.write_text(
        "scenarios:\n"
        "  - domain: {kind: torus, dim: 1, diameter: 1.0}\n"
        "    target: {kind: full_domain}\n"
        "    start: {kind: point, point: [1.0]}\n"
        "    dynamics: {model: diffusive, diffusivity: 1.0}\n"
        "    detection_radius: 0.3\n"
        "  - scenario_id: named\n"
        "    domain: {kind: torus, dim: 1, diameter: 1.0}\n"
        "    target: {kind: full_domain}\n"
        "    start: {kind: point, point: [1.0]}\n"
        "    dynamics: {model: diffusive, diffusivity: 1.0}\n"
        "    detection_radius: 0.2\n"
    )
    scens = load_config(p)
    assert [s.scenario_id for s in scens] == ["pair-0", "named"]


def test_yaml_empty_file_lists_required(tmp_path):
    p = tmp_path / "empty.yaml"
    p.write_text("")
    with pytest.raises(ConfigError) as err:
        load_config(p)
    assert "domain" in str(err.value)


def test_yaml_unknown_top_key_next_to_scenarios(tmp_path):
    p = tmp_path / "bad.yaml"
    p.write_text("scenarios: []\nextra: 1\n")
    with pytest.raises(ConfigError, match="extra"):
        load_config(p)


def test_yaml_missing_file():
    with pytest.raises(ConfigError, match="not found"):
        load_config("/nonexistent/nope.yaml")


def test_preset_names_stable():
    assert set(PRESET_NAMES) == {
        "fig2-torus2d",
        "fig3-disk-target",
        "fig4-multi-disk",
        "fig5-left-dim-ratio",
        "fig5-right-subdiffusion",
    }


def test_preset_square_torus():
    (sc,) = preset("fig2-torus2d")
    assert sc.domain.dim == 2
    assert sc.domain.diameter == pytest.approx(1 / math.sqrt(2))
    assert sc.domain.side == pytest.approx(1.0)
    assert sc.detection_radius == 0.3
    assert sc.target.kind == "full_domain"
    np.testing.assert_allclose(sc.start.center_array()[0], [0.5, 0.5])
    assert sc.effective_method == "lattice"


def test_preset_dimension_pair_matches_lengths():
    d1, d2 = preset("fig5-left-dim-ratio")
    assert (d1.domain.dim, d2.domain.dim) == (1, 2)
    assert d1.geodesic_length.value == pytest.approx(1.0)
    assert d2.geodesic_length.value == pytest.approx(1.0)
    assert d1.n_list == d2.n_list


def test_preset_subdiffusion_pair():
    sub, diff = preset("fig5-right-subdiffusion")
    assert sub.model == "subdiffusive" and sub.alpha == 0.5
    assert diff.model == "diffusive"
    assert sub.geodesic_length.value == pytest.approx(diff.geodesic_length.value)
    assert sub.t_max_factor > diff.t_max_factor
    assert 1 not in sub.n_list


def test_presets_all_construct():
    for name in PRESET_NAMES:
        for sc in preset(name):
            assert sc.replicas >= 2
            assert sc.t_max(max(sc.n_list)) > 0


def test_config_error_is_value_error():
    assert issubclass(ConfigError, ValueError)


def test_frozen_config():
    sc = scenario_from_dict(base_dict())
    with pytest.raises(Exception):
        sc.detection_radius = 0.1


def test_direct_constructor_validation():
    with pytest.raises(ValueError, match="n_list"):
        ScenarioConfig(
            scenario_id="bad",
            domain=Domain.torus(1, 1.0),
            target=Target.full_domain(),
            start=StartSet.point([1.0]),
            detection_radius=0.3,
            n_list=(),
        )
