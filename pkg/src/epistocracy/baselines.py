"""Reference optimizers run under the same budget: a generational GA and a
global-best PSO with inertia weight."""

from __future__ import annotations

from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .core import ConfigurationError, ObjectiveSpec, Purpose, RunRecord, make_rng
from .optimizer import _Evaluator, mutate, single_point_crossover, tournament_select
from .sampling import clamp_to_bounds, uniform_sample

__all__ = ["GaConfig", "PsoConfig", "run_ga", "run_pso", "pso_velocity"]


@dataclass
class GaConfig:
    population_size: int = 100
    iterations: int = 100
    crossover_rate: float = 0.5
    mutation_rate: float = 0.2
    tournament_size: int = 5
    elitism_count: int = 1
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.population_size < 2:
            raise ConfigurationError("population_size must be at least 2")
        if self.iterations < 0:
            raise ConfigurationError("iterations must be non-negative")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1]")
        if not 1 <= self.tournament_size <= self.population_size:
            raise ConfigurationError("tournament_size must be in [1, population_size]")
        if not 0 <= self.elitism_count < self.population_size:
            raise ConfigurationError("elitism_count must be in [0, population_size)")

    def to_dict(self):
        return asdict(self)


@dataclass
class PsoConfig:
    population_size: int = 100
    iterations: int = 100
    inertia: float = 0.7
    cognitive: float = 1.5
    social: float = 1.5
    velocity_clamp: float = 0.5
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.population_size < 1:
            raise ConfigurationError("population_size must be positive")
        if self.iterations < 0:
            raise ConfigurationError("iterations must be non-negative")
        if not 0.0 < self.inertia < 1.0:
            raise ConfigurationError("inertia must lie in (0, 1)")
        if self.cognitive < 0 or self.social < 0:
            raise ConfigurationError("acceleration coefficients must be non-negative")
        if not self.velocity_clamp > 0:
            raise ConfigurationError("velocity_clamp must be positive")

    def to_dict(self):
        return asdict(self)


def _hit(value, target, tolerance):
    return target is not None and value <= target + tolerance


def run_ga(
    obj: ObjectiveSpec,
    cfg: GaConfig,
    rng: Optional[np.random.Generator] = None,
    target: Optional[float] = None,
    tolerance: float = 0.0,
) -> RunRecord:
    """Generational GA with tournament selection and elitism.

    Each pair of tournament winners is recombined with probability
    ``crossover_rate`` (single split point), every child is mutated with
    probability ``mutation_rate`` (one gene redrawn uniformly), and the
    ``elitism_count`` best parents survive unchanged.
    """
    cfg.validate()
    if rng is None:
        rng = make_rng(cfg.seed, Purpose.BASELINE)
    bounds = obj.bounds
    n, dim = cfg.population_size, bounds.dim
    evaluate = _Evaluator(obj)

    X = uniform_sample(n, bounds, rng)
    f = evaluate(X)
    best_i = int(np.argmin(f))
    best_x, best_f = X[best_i].copy(), float(f[best_i])
    trace = [best_f]
    first_hit = 0 if _hit(best_f, target, tolerance) else None

    for it in range(1, cfg.iterations + 1):
        evaluate.iteration = it
        elite = np.argsort(f, kind="stable")[: cfg.elitism_count]
        children = [X[i].copy() for i in elite]
        while len(children) < n:
            a = X[tournament_select(f, cfg.tournament_size, rng)]
            b = X[tournament_select(f, cfg.tournament_size, rng)]
            if dim >= 2 and rng.random() < cfg.crossover_rate:
                a, b = single_point_crossover(a, b, int(rng.integers(1, dim)))
            for child in (a, b):
                if rng.random() < cfg.mutation_rate:
                    child = mutate(child, bounds, rng)
                children.append(np.array(child, dtype=float))
        X_new = np.array(children[:n])
        f_new = np.empty(n)
        f_new[: len(elite)] = f[elite]
        f_new[len(elite):] = evaluate(X_new[len(elite):])
        X, f = X_new, f_new

        i = int(np.argmin(f))
        if f[i] < best_f:
            best_f, best_x = float(f[i]), X[i].copy()
        trace.append(best_f)
        if first_hit is None and _hit(best_f, target, tolerance):
            first_hit = it

    return RunRecord(np.array(trace), best_x, best_f, evaluate.count, first_hit)


def pso_velocity(v, x, pbest, gbest, inertia, c1, c2, r1, r2):
    """Inertia-weight velocity update."""
    return inertia * v + c1 * r1 * (pbest - x) + c2 * r2 * (gbest - x)


def run_pso(
    obj: ObjectiveSpec,
    cfg: PsoConfig,
    rng: Optional[np.random.Generator] = None,
    target: Optional[float] = None,
    tolerance: float = 0.0,
) -> RunRecord:
    """Global-best PSO; velocities are limited to ``velocity_clamp`` times the
    range per dimension and positions are clamped to the box."""
    cfg.validate()
    if rng is None:
        rng = make_rng(cfg.seed, Purpose.BASELINE)
    bounds = obj.bounds
    n, dim = cfg.population_size, bounds.dim
    vmax = cfg.velocity_clamp * bounds.width
    evaluate = _Evaluator(obj)

    X = uniform_sample(n, bounds, rng)
    V = rng.uniform(-vmax, vmax, size=(n, dim))
    f = evaluate(X)
    pbest, pbest_f = X.copy(), f.copy()
    g = int(np.argmin(pbest_f))
    gbest, gbest_f = pbest[g].copy(), float(pbest_f[g])
    trace = [gbest_f]
    first_hit = 0 if _hit(gbest_f, target, tolerance) else None

    for it in range(1, cfg.iterations + 1):
        evaluate.iteration = it
        r1 = rng.random((n, dim))
        r2 = rng.random((n, dim))
        V = pso_velocity(V, X, pbest, gbest, cfg.inertia, cfg.cognitive, cfg.social, r1, r2)
        V = np.clip(V, -vmax, vmax)
        X = clamp_to_bounds(X + V, bounds)
        f = evaluate(X)
        better = f < pbest_f
        pbest[better], pbest_f[better] = X[better], f[better]
        g = int(np.argmin(pbest_f))
        if pbest_f[g] < gbest_f:
            gbest, gbest_f = pbest[g].copy(), float(pbest_f[g])
        trace.append(gbest_f)
        if first_hit is None and _hit(gbest_f, target, tolerance):
            first_hit = it

    return RunRecord(np.array(trace), gbest, gbest_f, evaluate.count, first_hit)
