"""Closed-form large-N cover-time asymptotics and related identities.

For N independent diffusive searchers with detection radius r, start set
U0 and geodesic length scale L to the farthest inflated target point, the
m-th cover-time moment satisfies

    E[sigma_N ** m]  ->  (L**2 / (4 D ln N)) ** m        (diffusive)

and for subdiffusive searchers with exponent alpha in (0, 1)

    E[sigma_N ** m]  ->  (alpha (2-alpha)**((2-alpha)/alpha)
                          (L**2 / (4 D))**(1/alpha)
                          / (ln N)**(2/alpha - 1)) ** m.

Evaluating the subdiffusive expression at alpha = 1 reproduces the
diffusive one exactly, so alpha = 1 is allowed here even though the
dynamics themselves treat it as plain diffusion.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

__all__ = [
    "diffusive_cover_moment",
    "subdiffusive_cover_moment",
    "single_searcher_cover_time",
    "RegimePrediction",
    "cover_time_regimes",
    "max_via_inclusion_exclusion",
]


def _check_common(length: float, diffusivity: float, n: int, order: int) -> None:
    if not length > 0:
        raise ValueError("length scale must be positive")
    if not diffusivity > 0:
        raise ValueError("diffusivity must be positive")
    if n < 2:
        raise ValueError("asymptotic formulas need N >= 2 (ln N must be positive)")
    if order < 1:
        raise ValueError("moment order must be a positive integer")


def diffusive_cover_moment(length: float, diffusivity: float, n: int, order: int = 1) -> float:
    """Large-N m-th moment of the cover time for diffusive searchers."""
    _check_common(length, diffusivity, n, order)
    base = (length * length / (4.0 * diffusivity)) / math.log(n)
    return base**order


def subdiffusive_cover_moment(
    length: float,
    diffusivity: float,
    alpha: float,
    n: int,
    order: int = 1,
) -> float:
    """Large-N m-th moment for subdiffusive searchers with exponent alpha."""
    _check_common(length, diffusivity, n, order)
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    base = (
        alpha
        * (2.0 - alpha) ** ((2.0 - alpha) / alpha)
        * (length * length / (4.0 * diffusivity)) ** (1.0 / alpha)
        / math.log(n) ** (2.0 / alpha - 1.0)
    )
    return base**order


def single_searcher_cover_time(dim: int, volume: float, r: float, diffusivity: float) -> float:
    """Small-r expected cover time of a single searcher in a bounded domain.

    Diverges as (ln 1/r)**2 in dimension two and as r**(2-d) ln(1/r) in
    dimension three and higher; there is no such formula in dimension one.
    """
    if dim < 2:
        raise ValueError("single-searcher asymptote requires dimension >= 2")
    if not 0.0 < r < 1.0:
        raise ValueError("detection radius must lie in (0, 1)")
    if not volume > 0:
        raise ValueError("domain volume must be positive")
    if not diffusivity > 0:
        raise ValueError("diffusivity must be positive")
    if dim == 2:
        return (volume / (math.pi * diffusivity)) * math.log(1.0 / r) ** 2
    coeff = dim * math.gamma(dim / 2.0) / (2.0 * (dim - 2) * math.pi ** (dim / 2.0))
    return coeff * volume * r ** (2 - dim) * math.log(1.0 / r) / diffusivity


@dataclass(frozen=True)
class RegimePrediction:
    """Crossover estimate between few-searcher and many-searcher regimes."""

    single_branch: float  # E[sigma_1] / N
    crowd_branch: float  # L^2 / (4 D ln N)
    value: float
    active: str  # "single" | "crowd"


def cover_time_regimes(
    sigma1_mean: float,
    length: float,
    diffusivity: float,
    n: int,
) -> RegimePrediction:
    """Max of the rescaled single-searcher mean and the large-N formula.

    A heuristic interpolation across all N; reported for comparison, never
    asserted against simulation.
    """
    if not sigma1_mean >= 0:
        raise ValueError("single-searcher mean must be nonnegative")
    _check_common(length, diffusivity, max(n, 2), 1)
    if n < 1:
        raise ValueError("N must be >= 1")
    single = sigma1_mean / n
    crowd = (length * length / (4.0 * diffusivity)) / math.log(max(n, 2))
    if single >= crowd:
        return RegimePrediction(single, crowd, single, "single")
    return RegimePrediction(single, crowd, crowd, "crowd")


@lru_cache(maxsize=32)
def _subset_tables(k: int):
    masks = np.arange(1, 2**k, dtype=np.uint32)
    member = ((masks[:, None] >> np.arange(k, dtype=np.uint32)[None, :]) & 1).astype(bool)
    sizes = member.sum(axis=1)
    signs = np.where(sizes % 2 == 1, 1.0, -1.0)
    return member, signs


def max_via_inclusion_exclusion(values) -> float:
    """Evaluate sum_j (-1)**(j-1) sum_{|I|=j} min_{i in I} l_i by enumeration.

    Algebraically this telescopes to max(values); the direct subset sum is
    kept as an independent identity check.  Guarded at 20 entries since the
    enumeration is exponential.
    """
    vals = np.asarray(values, dtype=float).ravel()
    k = vals.size
    if k == 0:
        raise ValueError("need at least one value")
    if k > 20:
        raise ValueError("subset enumeration is limited to 20 values")
    member, signs = _subset_tables(k)
    mins = np.where(member, vals[None, :], np.inf).min(axis=1)
    return float(signs @ mins)
