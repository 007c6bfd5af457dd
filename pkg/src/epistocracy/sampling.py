"""Latin hypercube initialization and box clamping."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import Bounds, ConfigurationError

__all__ = ["LhsPlan", "lhs_sample", "clamp_to_bounds", "uniform_sample"]


@dataclass(frozen=True)
class LhsPlan:
    samples: int
    bounds: Bounds

    def __post_init__(self):
        if int(self.samples) < 1:
            raise ConfigurationError(f"LHS needs at least one sample, got {self.samples}")

    @property
    def dimension(self) -> int:
        return self.bounds.dim


def lhs_sample(plan: LhsPlan, rng: np.random.Generator) -> np.ndarray:
    """Draw ``plan.samples`` points, one per stratum in every dimension.

    Each axis is cut into ``samples`` equal-width strata.  Strata are
    assigned to samples by an independent permutation per axis and the
    coordinate is uniform inside its stratum.

    Returns
    -------
    ndarray of shape (samples, dimension)
    """
    n, d = plan.samples, plan.dimension
    strata = np.column_stack([rng.permutation(n) for _ in range(d)])
    unit = (strata + rng.random((n, d))) / n
    X = plan.bounds.lower + unit * plan.bounds.width
    # guard the float edge case unit*width overshooting upper
    return np.minimum(X, plan.bounds.upper)


def uniform_sample(n: int, bounds: Bounds, rng: np.random.Generator) -> np.ndarray:
    return bounds.lower + rng.random((n, bounds.dim)) * bounds.width


def clamp_to_bounds(x, bounds: Bounds) -> np.ndarray:
    """Move every out-of-range coordinate onto the nearest bound.

    Works on a single position or on a stack of positions (last axis is
    the dimension).
    """
    return np.clip(np.asarray(x, dtype=float), bounds.lower, bounds.upper)
