"""Alpha-stable subordinators and time-changed (subdiffusive) searcher paths.

The subordinator T is exact in distribution on its operational grid
``s_k = k * ds``: increments are ``ds**(1/alpha) * Theta`` with Theta drawn
from the standard positive alpha-stable law, so ``E[exp(-lam T(s))] =
exp(-s * lam**alpha)``.  Physical positions are ``Y(t) = X(S(t))`` where X
is a Brownian path on the operational grid and S the right-continuous
inverse of T snapped to the grid.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SubdiffusionSpec",
    "sample_theta",
    "subordinator_path",
    "inverse_subordinator",
    "subdiffusive_position",
    "subdiffusive_displacements",
    "SubordinatedStepper",
]

_V_EPS = 1e-12
_E_FLOOR = 1e-300


@dataclass(frozen=True)
class SubdiffusionSpec:
    """Subdiffusive model: exponent alpha, generalized diffusivity, grids."""

    alpha: float
    diffusivity: float
    ds: float
    dt: float

    def __post_init__(self) -> None:
        if not 0.0 < self.alpha < 1.0:
            raise ValueError("alpha must lie strictly between 0 and 1")
        if not self.diffusivity > 0:
            raise ValueError("diffusivity must be positive")
        if not self.ds > 0 or not self.dt > 0:
            raise ValueError("grid steps must be positive")

    @staticmethod
    def default_step(n_searchers: int) -> float:
        """Default operational and physical step, 1e-2 / (4 ln max(N, 2))."""
        return 1e-2 / (4.0 * math.log(max(n_searchers, 2)))


def sample_theta(alpha: float, rng: np.random.Generator, size: int | None = None):
    """Standard positive alpha-stable draws with Laplace transform exp(-lam**alpha).

    Uses the trigonometric representation with V uniform on
    (-pi/2 + eps, pi/2 - eps) and E exponential clamped below at 1e-300;
    the product is evaluated in log space to avoid overflow for small alpha.
    """
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly between 0 and 1")
    n = 1 if size is None else int(size)
    v = rng.uniform(-0.5 * math.pi + _V_EPS, 0.5 * math.pi - _V_EPS, size=n)
    e = np.maximum(rng.exponential(1.0, size=n), _E_FLOOR)
    a_shift = alpha * (v + 0.5 * math.pi)
    log_theta = (
        np.log(np.sin(a_shift))
        - np.log(np.cos(v)) / alpha
        + ((1.0 - alpha) / alpha) * (np.log(np.cos(v - a_shift)) - np.log(e))
    )
    theta = np.exp(log_theta)
    return float(theta[0]) if size is None else theta


def subordinator_path(
    alpha: float,
    ds: float,
    s_max: float,
    rng: np.random.Generator,
) -> np.ndarray:
    """T on the operational grid 0, ds, ..., up to at least ``s_max``."""
    if not ds > 0 or not s_max > 0:
        raise ValueError("ds and s_max must be positive")
    k = math.ceil(s_max / ds)
    incr = ds ** (1.0 / alpha) * sample_theta(alpha, rng, size=k)
    out = np.empty(k + 1)
    out[0] = 0.0
    np.cumsum(incr, out=out[1:])
    return out


def inverse_subordinator(t_path: np.ndarray, ds: float, t_grid) -> np.ndarray:
    """Grid inverse S(t): the first grid point s_k with T(s_k) >= t.

    Raises if the path ends before the last requested time; callers that
    stream paths extend them lazily instead.
    """
    t_path = np.asarray(t_path, dtype=float)
    times = np.atleast_1d(np.asarray(t_grid, dtype=float))
    if np.any(times < 0):
        raise ValueError("times must be nonnegative")
    if t_path[-1] < times.max():
        raise ValueError(
            f"subordinator path ends at T={t_path[-1]:g} before requested time {times.max():g}"
        )
    k = np.searchsorted(t_path, times, side="left")
    return k * ds


def subdiffusive_position(x_path: np.ndarray, ds: float, s_values) -> np.ndarray:
    """Linear interpolation of the operational path X at operational times.

    For grid-snapped inverse values this reduces to picking the grid node.
    """
    x_path = np.asarray(x_path, dtype=float)
    s = np.atleast_1d(np.asarray(s_values, dtype=float))
    k_max = x_path.shape[0] - 1
    if np.any(s < 0) or np.any(s > k_max * ds * (1 + 1e-12)):
        raise ValueError("operational time outside the simulated path")
    k = np.minimum(np.floor(s / ds).astype(np.int64), k_max - 1)
    w = s / ds - k
    left = x_path[k]
    right = x_path[k + 1]
    if x_path.ndim == 2:
        w = w[:, None]
    out = (1.0 - w) * left + w * right
    return out if np.ndim(s_values) else out[0]


def subdiffusive_displacements(
    spec: SubdiffusionSpec,
    times,
    n_paths: int,
    rng: np.random.Generator,
    chunk: int = 2048,
) -> np.ndarray:
    """Samples of the scalar displacement Y(t) for each requested time.

    Vectorized over paths in chunks; each chunk shares one operational grid
    that is doubled until every path's subordinator clears the horizon.
    """
    times = np.atleast_1d(np.asarray(times, dtype=float))
    t_max = float(times.max())
    scale_t = spec.ds ** (1.0 / spec.alpha)
    scale_x = math.sqrt(2.0 * spec.diffusivity * spec.ds)
    out = np.empty((n_paths, times.size))
    done = 0
    while done < n_paths:
        m = min(chunk, n_paths - done)
        k = 256
        t_incr = scale_t * sample_theta(spec.alpha, rng, size=m * k).reshape(m, k)
        t_full = np.concatenate([np.zeros((m, 1)), np.cumsum(t_incr, axis=1)], axis=1)
        while t_full[:, -1].min() < t_max:
            t_more = scale_t * sample_theta(spec.alpha, rng, size=m * k).reshape(m, k)
            tail = t_full[:, -1][:, None] + np.cumsum(t_more, axis=1)
            t_full = np.concatenate([t_full, tail], axis=1)
            k *= 2
        n_ops = t_full.shape[1] - 1
        x_incr = scale_x * rng.standard_normal((m, n_ops))
        x_full = np.concatenate([np.zeros((m, 1)), np.cumsum(x_incr, axis=1)], axis=1)
        for j, t in enumerate(times):
            idx = (t_full < t).sum(axis=1)
            out[done : done + m, j] = np.take_along_axis(x_full, idx[:, None], axis=1)[:, 0]
        done += m
    return out


class SubordinatedStepper:
    """Subdiffusive searcher positions sampled on the physical grid t_m = m dt.

    Per searcher it tracks the subordinator value and Brownian position at
    the current operational node, advancing each searcher until its
    subordinator first clears the physical time; that node's position is
    Y(t_m).  Draws happen in a fixed order, so results are reproducible
    from the replica generator alone.
    """

    def __init__(
        self,
        spec: SubdiffusionSpec,
        positions: np.ndarray,
        rng: np.random.Generator,
    ):
        self.spec = spec
        self.positions = np.array(np.atleast_2d(positions), dtype=float, copy=True)
        self.rng = rng
        n = self.positions.shape[0]
        self._t_op = np.zeros(n)
        self._m = 0
        self.time = 0.0
        self._scale_t = spec.ds ** (1.0 / spec.alpha)
        self._scale_x = math.sqrt(2.0 * spec.diffusivity * spec.ds)

    def step(self) -> np.ndarray:
        """Advance one physical step; returns current (n, d) positions."""
        spec = self.spec
        self._m += 1
        t = self._m * spec.dt
        active = self._t_op < t
        while True:
            idx = np.flatnonzero(active)
            if idx.size == 0:
                break
            theta = sample_theta(spec.alpha, self.rng, size=idx.size)
            self._t_op[idx] += self._scale_t * theta
            xi = self.rng.standard_normal((idx.size, self.positions.shape[1]))
            self.positions[idx] += self._scale_x * xi
            active[idx] = self._t_op[idx] < t
        self.time = t
        return self.positions
