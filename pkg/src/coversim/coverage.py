"""Cover-time measurement for one replica of N searchers.

Two mechanisms:

* Lattice tracker: target sites on a square lattice of spacing at most
  r/10 are marked covered whenever a searcher's nearest node carries them
  within its detection stencil.  Marking happens at discrete steps only,
  and initial positions count at t = 0.

* Range reduction (dimension one, torus, common point start, full-domain
  target, driftless isotropic diffusion): the wrapped circle is covered
  exactly when the unwrapped ensemble range exceeds 2 (l - r), so only the
  running maximum and minimum need tracking.

A replica is censored when the time horizon ends before full coverage.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import NamedTuple

import numpy as np

from .dynamics import DynamicsSpec, PathStepper, sample_initial
from .geometry import Domain, Target
from .scenarios import ScenarioConfig
from .subordination import SubdiffusionSpec, SubordinatedStepper

__all__ = [
    "CoverResult",
    "CoverageLattice",
    "CoverageTracker",
    "RangeState",
    "build_lattice",
    "mark_detection",
    "run_replica",
    "run_replica_lattice",
    "run_replica_range",
]


class CoverResult(NamedTuple):
    sigma: float
    censored: bool
    trivially_covered: bool


class CoverageLattice:
    """Immutable site geometry shared by every replica of a scenario.

    ``shape`` is the node-grid extent per axis.  On a torus it spans the
    fundamental box and indices wrap; in free space it is a window around
    the target inflated by the detection radius, and nodes outside it can
    never cover a target site.
    """

    def __init__(self, domain: Domain, target: Target, r: float, dx: float):
        if not 0 < dx <= r / 10.0 * (1 + 1e-9):
            raise ValueError("lattice spacing must satisfy 0 < dx <= r / 10")
        self.domain = domain
        self.r = float(r)
        self.dx = float(dx)
        dim = domain.dim
        if domain.is_torus:
            n = int(round(domain.side / dx))
            if abs(n * dx - domain.side) > 1e-9 * domain.side:
                raise ValueError("dx must divide the torus box side exactly")
            self.shape = (n,) * dim
            self.lo = np.zeros(dim, dtype=np.int64)
        else:
            if target.kind == "full_domain":
                raise ValueError("full-domain coverage needs a bounded domain")
            centers = target.center_array()
            lo = np.floor((centers.min(axis=0) - target.radius - r) / dx).astype(np.int64) - 2
            hi = np.ceil((centers.max(axis=0) + target.radius + r) / dx).astype(np.int64) + 2
            self.lo = lo
            self.shape = tuple(int(h - l + 1) for l, h in zip(lo, hi))
        self.n_cells = int(np.prod(self.shape))
        self.strides = np.ones(dim, dtype=np.int64)
        for k in range(dim - 2, -1, -1):
            self.strides[k] = self.strides[k + 1] * self.shape[k + 1]
        self.stencil = self._build_stencil()
        self.target_flat = self._target_sites(target)

    def _build_stencil(self) -> np.ndarray:
        dim = self.domain.dim
        kr = int(math.floor(self.r / self.dx * (1 + 1e-12)))
        axes = []
        for n in self.shape:
            lo = -min(kr, n // 2)
            hi = min(kr, (n - 1) // 2)
            axes.append(np.arange(lo, hi + 1, dtype=np.int64))
        mesh = np.meshgrid(*axes, indexing="ij")
        offs = np.stack([m.ravel() for m in mesh], axis=1)
        keep = (offs.astype(float) ** 2).sum(axis=1) <= (self.r / self.dx) ** 2 * (1 + 1e-12)
        return offs[keep]

    def _node_coords_flat(self) -> np.ndarray:
        axes = [(self.lo[k] + np.arange(self.shape[k])) * self.dx for k in range(self.domain.dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def _target_sites(self, target: Target) -> np.ndarray:
        if target.kind == "full_domain":
            return np.arange(self.n_cells, dtype=np.int64)
        coords = self._node_coords_flat()
        if target.kind == "point":
            p = target.center_array()[0]
            idx = np.rint(p / self.dx).astype(np.int64) - self.lo
            if self.domain.is_torus:
                idx = np.mod(idx, np.asarray(self.shape))
            return np.array([int((idx * self.strides).sum())], dtype=np.int64)
        centers = target.center_array()
        keep = np.zeros(coords.shape[0], dtype=bool)
        for c in centers:
            delta = np.abs(coords - c)
            if self.domain.is_torus:
                delta = np.minimum(delta, self.domain.side - delta)
            keep |= (delta**2).sum(axis=1) <= target.radius**2 * (1 + 1e-12)
        flat = np.flatnonzero(keep).astype(np.int64)
        if flat.size == 0:
            # target thinner than the lattice: fall back to the nearest
            # node of each ball center
            idx = np.rint(centers / self.dx).astype(np.int64) - self.lo
            if self.domain.is_torus:
                idx = np.mod(idx, np.asarray(self.shape))
            flat = np.unique((idx * self.strides).sum(axis=1))
        return flat

    def node_flat(self, positions: np.ndarray) -> np.ndarray:
        """Flat node index of each position; -1 when outside the window."""
        pos = np.atleast_2d(positions)
        idx = np.rint(pos / self.dx).astype(np.int64) - self.lo
        shape = np.asarray(self.shape)
        if self.domain.is_torus:
            idx = np.mod(idx, shape)
            return idx @ self.strides
        inside = np.all((idx >= 0) & (idx < shape), axis=1)
        flat = idx @ self.strides
        flat[~inside] = -1
        return flat

    def tracker(self) -> "CoverageTracker":
        return CoverageTracker(self)


class CoverageTracker:
    """Per-replica covered/visited bitmasks over the lattice nodes."""

    def __init__(self, lattice: CoverageLattice):
        self.lattice = lattice
        self.covered = np.zeros(lattice.n_cells, dtype=bool)
        self.visited = np.zeros(lattice.n_cells, dtype=bool)

    @property
    def remaining(self) -> int:
        lat = self.lattice
        return int(lat.target_flat.size - np.count_nonzero(self.covered[lat.target_flat]))

    def mark_nodes(self, flat_nodes: np.ndarray) -> None:
        """Apply the detection stencil around the given lattice nodes."""
        lat = self.lattice
        if flat_nodes.size == 0:
            return
        shape = np.asarray(lat.shape)
        axes_idx = np.empty((flat_nodes.size, lat.strides.size), dtype=np.int64)
        carry = flat_nodes
        for k, stride in enumerate(lat.strides):
            axes_idx[:, k] = carry // stride
            carry = carry % stride
        neighbor = axes_idx[:, None, :] + lat.stencil[None, :, :]
        if lat.domain.is_torus:
            neighbor = np.mod(neighbor, shape)
            flat = (neighbor * lat.strides).sum(axis=2).ravel()
        else:
            ok = np.all((neighbor >= 0) & (neighbor < shape), axis=2)
            flat = (neighbor * lat.strides).sum(axis=2)[ok].ravel()
        self.covered[flat] = True

    def mark_positions(self, positions: np.ndarray) -> None:
        """Mark detections for an array of searcher positions.

        Nodes already visited by an earlier call are skipped; marking is
        idempotent so the covered set is unchanged by revisits.
        """
        flat = self.lattice.node_flat(positions)
        flat = flat[flat >= 0]
        if flat.size == 0:
            return
        fresh = flat[~self.visited[flat]]
        if fresh.size == 0:
            return
        nodes = np.unique(fresh)
        self.visited[nodes] = True
        self.mark_nodes(nodes)


def mark_detection(tracker: CoverageTracker, position) -> None:
    """Mark every target site within detection range of one position."""
    tracker.mark_positions(np.atleast_2d(np.asarray(position, dtype=float)))


@lru_cache(maxsize=64)
def _cached_lattice(domain: Domain, target: Target, r: float, dx: float) -> CoverageLattice:
    return CoverageLattice(domain, target, r, dx)


def build_lattice(scenario: ScenarioConfig) -> CoverageLattice:
    """Build (or fetch) the shared lattice for a scenario."""
    dx = scenario.resolved_dx()
    return _cached_lattice(scenario.domain, scenario.target, scenario.detection_radius, dx)


@dataclass
class RangeState:
    """Running unwrapped extrema of the searcher ensemble."""

    threshold: float
    max: float = 0.0
    min: float = 0.0

    def update(self, step_maxes: np.ndarray, step_mins: np.ndarray) -> int:
        """Fold in per-step ensemble extrema; return the first index whose
        running range exceeds the threshold, or -1."""
        run_max = np.maximum.accumulate(np.maximum(step_maxes, self.max))
        run_min = np.minimum.accumulate(np.minimum(step_mins, self.min))
        hit = (run_max - run_min) > self.threshold
        if hit.any():
            return int(np.argmax(hit))
        self.max = float(run_max[-1])
        self.min = float(run_min[-1])
        return -1


def _range_chunk(n: int) -> int:
    return max(1, min(4096, 4_194_304 // max(n, 1)))


def run_replica_range(scenario: ScenarioConfig, n_searchers: int, rng: np.random.Generator) -> CoverResult:
    """Cover time via the ensemble-range reduction on the one-dimensional torus."""
    if not scenario.range_eligible:
        raise ValueError(
            "range reduction needs d=1 torus, point start, full-domain target and "
            "driftless isotropic dynamics; use the lattice method instead"
        )
    thr = 2.0 * (scenario.domain.diameter - scenario.detection_radius)
    if thr <= 0:
        return CoverResult(0.0, False, True)
    dt = scenario.resolved_dt(n_searchers)
    max_steps = scenario.max_steps(n_searchers)

    if scenario.model == "subdiffusive":
        spec = scenario.subdiffusion_spec(n_searchers)
        stepper = SubordinatedStepper(spec, np.zeros((n_searchers, 1)), rng)
        gmax = gmin = 0.0
        for m in range(1, max_steps + 1):
            pos = stepper.step()[:, 0]
            gmax = max(gmax, float(pos.max()))
            gmin = min(gmin, float(pos.min()))
            if gmax - gmin > thr:
                return CoverResult(m * dt, False, False)
        return CoverResult(max_steps * dt, True, False)

    scale = math.sqrt(2.0 * scenario.diffusivity * dt)
    state = RangeState(thr)
    x = np.zeros(n_searchers)
    chunk = _range_chunk(n_searchers)
    steps_done = 0
    while steps_done < max_steps:
        k = min(chunk, max_steps - steps_done)
        incr = rng.standard_normal((k, n_searchers))
        incr *= scale
        np.cumsum(incr, axis=0, out=incr)
        incr += x
        hit = state.update(incr.max(axis=1), incr.min(axis=1))
        if hit >= 0:
            return CoverResult((steps_done + hit + 1) * dt, False, False)
        x = incr[-1].copy()
        steps_done += k
    return CoverResult(max_steps * dt, True, False)


def run_replica_lattice(scenario: ScenarioConfig, n_searchers: int, rng: np.random.Generator) -> CoverResult:
    """Cover time via explicit marking of target lattice sites."""
    lattice = build_lattice(scenario)
    tracker = lattice.tracker()
    domain = scenario.domain
    x0 = sample_initial(scenario.start, rng, size=n_searchers, domain=domain)
    dt = scenario.resolved_dt(n_searchers)

    if scenario.model == "subdiffusive":
        spec = scenario.subdiffusion_spec(n_searchers)
        stepper = SubordinatedStepper(spec, x0, rng)
        wrap_each_step = domain.is_torus
    else:
        dyn = DynamicsSpec(
            diffusivity=scenario.diffusivity,
            drift=scenario.drift,
            dispersion=scenario.dispersion,
            dt=dt,
        )
        stepper = PathStepper(dyn, domain, x0, rng)
        wrap_each_step = False

    tracker.mark_positions(domain.wrap(x0) if domain.is_torus else x0)
    if tracker.remaining == 0:
        return CoverResult(0.0, False, True)

    max_steps = scenario.max_steps(n_searchers)
    for m in range(1, max_steps + 1):
        pos = stepper.step()
        tracker.mark_positions(domain.wrap(pos) if wrap_each_step else pos)
        if tracker.remaining == 0:
            return CoverResult(m * dt, False, False)
    return CoverResult(max_steps * dt, True, False)


def run_replica(scenario: ScenarioConfig, n_searchers: int, rng: np.random.Generator) -> CoverResult:
    """Run one replica with the scenario's configured (or automatic) method."""
    if n_searchers < 1:
        raise ValueError("need at least one searcher")
    method = scenario.method
    if method == "auto":
        method = "range" if scenario.range_eligible else "lattice"
    if method == "range":
        return run_replica_range(scenario, n_searchers, rng)
    if method == "lattice":
        return run_replica_lattice(scenario, n_searchers, rng)
    raise ValueError(f"unknown coverage method {method!r}")
