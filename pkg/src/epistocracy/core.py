"""Domain types, objective contract, seeded RNG streams, evaluation and ranking."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

__all__ = [
    "Bounds",
    "ObjectiveSpec",
    "Individual",
    "RunRecord",
    "ConfigurationError",
    "EvaluationError",
    "make_rng",
    "Purpose",
    "evaluate_population",
    "rank",
    "separate",
    "governor_count",
]


class ConfigurationError(ValueError):
    """Invalid optimizer, plan or experiment configuration."""


class EvaluationError(RuntimeError):
    """The objective returned a non-finite value."""

    def __init__(self, message, position=None):
        super().__init__(message)
        self.position = position


@dataclass(frozen=True)
class Bounds:
    """Axis-aligned box ``lower <= x <= upper``."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.atleast_1d(np.asarray(self.lower, dtype=float))
        upper = np.atleast_1d(np.asarray(self.upper, dtype=float))
        if lower.ndim != 1 or lower.shape != upper.shape or lower.size < 1:
            raise ConfigurationError("bounds need matching 1-D lower/upper arrays")
        if not np.all(lower < upper):
            raise ConfigurationError(f"lower < upper violated: {lower} vs {upper}")
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @classmethod
    def uniform(cls, low: float, high: float, dim: int) -> "Bounds":
        return cls(np.full(dim, float(low)), np.full(dim, float(high)))

    @property
    def dim(self) -> int:
        return self.lower.size

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower

    def contains(self, x) -> bool:
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower) and np.all(x <= self.upper))


@dataclass(frozen=True)
class ObjectiveSpec:
    """A box-bounded minimization problem.

    ``evaluator`` maps a position vector to a real and must be deterministic.
    Maximization problems are expressed by negating the evaluator, see
    :meth:`maximize`.
    """

    bounds: Bounds
    evaluator: Callable[[np.ndarray], float]
    name: str = "objective"
    optimum: Optional[float] = None
    vectorized: bool = False
    # told the iteration number before each iteration's evaluations
    on_iteration: Optional[Callable[[int], None]] = None

    @property
    def dimension(self) -> int:
        return self.bounds.dim

    def __call__(self, x) -> float:
        value = float(self.evaluator(np.asarray(x, dtype=float)))
        if not math.isfinite(value):
            raise EvaluationError(
                f"{self.name} returned {value} at position {np.asarray(x).tolist()}",
                position=np.asarray(x, dtype=float).copy(),
            )
        return value

    def evaluate_many(self, X) -> np.ndarray:
        """Evaluate each row of ``X``; results are in row order."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if not self.vectorized:
            return np.array([self(x) for x in X], dtype=float)
        values = np.asarray(self.evaluator(X), dtype=float).reshape(X.shape[0])
        bad = ~np.isfinite(values)
        if bad.any():
            i = int(np.argmax(bad))
            raise EvaluationError(
                f"{self.name} returned {values[i]} at position {X[i].tolist()}",
                position=X[i].copy(),
            )
        return values

    @classmethod
    def maximize(cls, bounds, evaluator, name="objective", optimum=None):
        """Wrap a function to be maximized as a minimization problem."""
        return cls(
            bounds,
            lambda x: -evaluator(x),
            name=name,
            optimum=None if optimum is None else -optimum,
        )


_ids = itertools.count()


@dataclass
class Individual:
    position: np.ndarray
    actual_perf: float = math.nan
    prev_perf: float = math.nan
    adjusted_perf: float = math.nan
    role: str = "citizen"
    governor_id: Optional[int] = None
    prev_step: Optional[np.ndarray] = None
    id: int = field(default_factory=lambda: next(_ids))

    def __post_init__(self):
        self.position = np.asarray(self.position, dtype=float)

    @property
    def evaluated(self) -> bool:
        return not math.isnan(self.actual_perf)


@dataclass
class RunRecord:
    """Outcome of one optimizer run.

    ``trace[t]`` is the best objective value known after iteration ``t``;
    ``trace[0]`` belongs to the initial population.
    """

    trace: np.ndarray
    best_position: np.ndarray
    best_value: float
    evaluations: int = 0
    first_hit_iteration: Optional[int] = None
    extra: dict = field(default_factory=dict)


class Purpose:
    """Stream identifiers for the per-run RNG sub-streams."""

    INIT = 0
    OPTIMIZER = 1
    BASELINE = 2
    TABLE = 3


def make_rng(seed: int, stream_id: int = 0) -> np.random.Generator:
    """Independent generator for ``(seed, stream_id)``.

    The same pair always yields the same sequence (PCG64 over a
    ``SeedSequence`` with ``stream_id`` as spawn key).
    """
    if seed < 0 or stream_id < 0:
        raise ConfigurationError("seed and stream_id must be non-negative")
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(int(stream_id),))
    return np.random.Generator(np.random.PCG64(ss))


def evaluate_population(pop: Sequence[Individual], obj: ObjectiveSpec) -> list:
    """Evaluate every individual in place and return the same list.

    The previous value is shifted into ``prev_perf``; on the first evaluation
    ``prev_perf`` equals the new ``actual_perf``.  Citizens get
    ``adjusted_perf = actual_perf``.
    """
    for ind in pop:
        value = obj(ind.position)
        ind.prev_perf = value if not ind.evaluated else ind.actual_perf
        ind.actual_perf = value
        if ind.role != "governor" or math.isnan(ind.adjusted_perf):
            ind.adjusted_perf = value
    return list(pop)


def rank(pop) -> list:
    """Indices sorted by ascending performance, ties by original index.

    Accepts individuals or plain numbers.
    """
    perfs = [p.actual_perf if isinstance(p, Individual) else float(p) for p in pop]
    return sorted(range(len(perfs)), key=lambda i: (perfs[i], i))


def governor_count(pop_size: int, fraction: float) -> int:
    if pop_size < 2:
        raise ConfigurationError(f"population size {pop_size} < 2")
    if not 0.0 < fraction < 1.0:
        raise ConfigurationError(f"governor fraction {fraction} not in (0, 1)")
    # round-half-up, keeping at least two governors and one citizen
    k = int(math.floor(fraction * pop_size + 0.5))
    return min(max(2, k), pop_size)


def separate(pop, governor_fraction, bounds=None, space_resolution=0.001, rng=None):
    """Split a ranked population into ``(governors, citizens)``.

    ``pop`` must already be ordered best first (see :func:`rank`).  New
    governors receive an initial step vector when ``bounds`` is given.
    """
    from .optimizer import init_prev_step

    k = governor_count(len(pop), governor_fraction)
    governors, citizens = list(pop[:k]), list(pop[k:])
    for g in governors:
        if g.role != "governor" or g.prev_step is None:
            g.role = "governor"
            g.governor_id = None
            if bounds is not None:
                g.prev_step = init_prev_step(bounds, space_resolution, rng)
    for c in citizens:
        if c.role == "governor":
            c.role = "citizen"
            c.prev_step = None
            c.adjusted_perf = c.actual_perf
    return governors, citizens
