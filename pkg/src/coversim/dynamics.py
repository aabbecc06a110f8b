"""Euler-Maruyama dynamics for ensembles of independent searchers.

A replica holds all N searcher positions in one ``(N, d)`` array and the
stepper advances them together: ``x <- x + mu(x) dt + sqrt(2 D dt) sigma(x) xi``
with standard normal ``xi``.  On a torus positions are wrapped back into the
fundamental box after every step.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Domain, StartSet

__all__ = [
    "NumericError",
    "Drift",
    "Dispersion",
    "DynamicsSpec",
    "PathStepper",
    "sample_initial",
]


class NumericError(RuntimeError):
    """Raised when the integration produces non-finite state."""


@dataclass(frozen=True)
class Drift:
    """Deterministic drift field mu(x).

    Kinds: ``zero``; ``constant`` with a fixed vector; ``inward``, which
    pulls radially toward the origin with given strength once ``|x|``
    exceeds ``radius`` (keeps free-space searchers effectively confined).
    """

    kind: str = "zero"
    vector: tuple[float, ...] = ()
    strength: float = 0.0
    radius: float = 0.0

    @classmethod
    def zero(cls) -> "Drift":
        return cls("zero")

    @classmethod
    def constant(cls, vector) -> "Drift":
        v = np.atleast_1d(np.asarray(vector, dtype=float))
        return cls("constant", vector=tuple(v))

    @classmethod
    def inward(cls, strength: float, radius: float) -> "Drift":
        if not strength > 0 or not radius > 0:
            raise ValueError("inward drift needs positive strength and radius")
        return cls("inward", strength=float(strength), radius=float(radius))

    @property
    def is_zero(self) -> bool:
        return self.kind == "zero"

    def __call__(self, positions: np.ndarray) -> np.ndarray:
        x = np.atleast_2d(positions)
        if self.kind == "zero":
            return np.zeros_like(x)
        if self.kind == "constant":
            return np.broadcast_to(np.asarray(self.vector, dtype=float), x.shape)
        if self.kind == "inward":
            norms = np.linalg.norm(x, axis=1, keepdims=True)
            active = norms > self.radius
            with np.errstate(invalid="ignore", divide="ignore"):
                unit = np.where(norms > 0, x / norms, 0.0)
            return np.where(active, -self.strength * unit, 0.0)
        raise ValueError(f"unknown drift kind {self.kind!r}")


@dataclass(frozen=True)
class Dispersion:
    """Dimensionless noise shaping sigma(x) applied to the Wiener increment."""

    kind: str = "identity"
    value: float = 1.0

    @classmethod
    def identity(cls) -> "Dispersion":
        return cls("identity")

    @classmethod
    def isotropic(cls, value: float) -> "Dispersion":
        if not value > 0:
            raise ValueError("isotropic dispersion must be positive")
        return cls("isotropic", float(value))

    @property
    def is_identity(self) -> bool:
        return self.kind == "identity"

    def apply(self, positions: np.ndarray, noise: np.ndarray) -> np.ndarray:
        if self.kind == "identity":
            return noise
        if self.kind == "isotropic":
            return self.value * noise
        raise ValueError(f"unknown dispersion kind {self.kind!r}")

    def a_value(self) -> float:
        """Isotropic value of a = sigma sigma^T (for the geodesic metric)."""
        return 1.0 if self.kind == "identity" else self.value**2


@dataclass(frozen=True)
class DynamicsSpec:
    """Diffusive model: diffusivity D, drift, dispersion and time step."""

    diffusivity: float
    drift: Drift = Drift.zero()
    dispersion: Dispersion = Dispersion.identity()
    dt: float = 1e-3

    def __post_init__(self) -> None:
        if not self.diffusivity > 0:
            raise ValueError("diffusivity must be positive")
        if not self.dt > 0:
            raise ValueError("time step must be positive")


class PathStepper:
    """Advances an (n, d) ensemble of searcher positions by one dt per step."""

    def __init__(
        self,
        spec: DynamicsSpec,
        domain: Domain,
        positions: np.ndarray,
        rng: np.random.Generator,
        check_every: int = 16,
    ):
        self.spec = spec
        self.domain = domain
        self.positions = np.array(np.atleast_2d(positions), dtype=float, copy=True)
        if self.positions.shape[1] != domain.dim:
            raise ValueError("positions do not match domain dimension")
        self.rng = rng
        self.time = 0.0
        self.steps = 0
        self._noise_scale = np.sqrt(2.0 * spec.diffusivity * spec.dt)
        self._check_every = check_every

    def step(self) -> np.ndarray:
        """One Euler-Maruyama update of every searcher; returns positions."""
        spec = self.spec
        x = self.positions
        xi = self.rng.standard_normal(x.shape)
        incr = self._noise_scale * spec.dispersion.apply(x, xi)
        if not spec.drift.is_zero:
            incr = incr + spec.drift(x) * spec.dt
        x += incr
        if self.domain.is_torus:
            np.mod(x, self.domain.side, out=x)
        self.steps += 1
        self.time = self.steps * spec.dt
        if self.steps % self._check_every == 0 and not np.all(np.isfinite(x)):
            raise NumericError(f"non-finite position at step {self.steps} (t={self.time:g})")
        return x


def sample_initial(
    start: StartSet,
    rng: np.random.Generator,
    size: int = 1,
    domain: Domain | None = None,
) -> np.ndarray:
    """Draw ``size`` initial positions from the start set.

    Ball unions are sampled uniformly by rejection inside the union's
    bounding box, which stays uniform even when balls overlap.  On a torus
    the draws are wrapped into the fundamental box.
    """
    centers = start.center_array()
    dim = centers.shape[1]
    if start.kind == "point":
        out = np.tile(centers[0], (size, 1))
    else:
        lo = centers.min(axis=0) - start.radius
        hi = centers.max(axis=0) + start.radius
        out = np.empty((size, dim))
        filled = 0
        while filled < size:
            cand = rng.uniform(lo, hi, size=(max(size - filled, 16), dim))
            ok = np.zeros(cand.shape[0], dtype=bool)
            for c in centers:
                ok |= np.linalg.norm(cand - c, axis=1) <= start.radius
            good = cand[ok]
            take = min(good.shape[0], size - filled)
            out[filled : filled + take] = good[:take]
            filled += take
    if domain is not None and domain.is_torus:
        out = domain.wrap(out)
    return out
