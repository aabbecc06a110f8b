"""Monte Carlo laboratory for cover times of many independent searchers.

N diffusive or subdiffusive searchers explore a flat torus (or free space);
the cover time is the first instant the union of their detection balls
contains the whole target region.  The package simulates that stopping time,
estimates its moments, and compares them against closed-form large-N
asymptotics in which the only surviving geometry is a single geodesic
length scale.
"""

from .asymptotics import (
    RegimePrediction,
    cover_time_regimes,
    diffusive_cover_moment,
    max_via_inclusion_exclusion,
    single_searcher_cover_time,
    subdiffusive_cover_moment,
)
from .coverage import CoverResult, run_replica
from .dynamics import Dispersion, Drift, NumericError
from .estimator import (
    MomentEstimate,
    MomentReport,
    ReplicaResult,
    bootstrap_se,
    derive_replica_seed,
    run_experiment,
)
from .geometry import (
    Domain,
    GeodesicLength,
    StartSet,
    Target,
    geodesic_L,
    lattice_geodesic,
)
from .scenarios import (
    PRESET_NAMES,
    ConfigError,
    ScenarioConfig,
    load_config,
    preset,
    scenario_from_dict,
)
from .subordination import SubdiffusionSpec, inverse_subordinator, sample_theta, subordinator_path

__version__ = "0.1.0"

__all__ = [
    "__version__",
    "Domain",
    "Target",
    "StartSet",
    "GeodesicLength",
    "geodesic_L",
    "lattice_geodesic",
    "Drift",
    "Dispersion",
    "NumericError",
    "SubdiffusionSpec",
    "sample_theta",
    "subordinator_path",
    "inverse_subordinator",
    "CoverResult",
    "run_replica",
    "ScenarioConfig",
    "ConfigError",
    "scenario_from_dict",
    "load_config",
    "preset",
    "PRESET_NAMES",
    "run_experiment",
    "MomentReport",
    "MomentEstimate",
    "ReplicaResult",
    "derive_replica_seed",
    "bootstrap_se",
    "diffusive_cover_moment",
    "subdiffusive_cover_moment",
    "single_searcher_cover_time",
    "cover_time_regimes",
    "RegimePrediction",
    "max_via_inclusion_exclusion",
]
