"""The Epistocracy optimizer.

A population is split each iteration into a small council of governors
(the best individuals) and citizens.  Citizens pick a governor by a
roulette over gravitational attraction, walk towards it with a step scaled
by their group's improvement and spread, governors probe along their own
step memory and only keep moves that do not worsen them, and the groups
then vote on their governor's standing through a distance-weighted
improvement fed into a linear regression.  Crossover and mutation refresh
the worst citizens at the end of each iteration.

The scalar formulas are exposed as functions that broadcast over numpy
arrays; :func:`run_epistocracy` composes them.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Optional, Sequence

import numpy as np

from .core import (
    ConfigurationError,
    EvaluationError,
    Individual,
    ObjectiveSpec,
    Purpose,
    RunRecord,
    governor_count,
    make_rng,
)
from .sampling import LhsPlan, clamp_to_bounds, lhs_sample

__all__ = [
    "EpistocracyConfig",
    "Government",
    "normalize_performance",
    "euclidean_distance",
    "gravitational_force",
    "selection_probabilities",
    "roulette_select",
    "assign_governors",
    "compute_improvements",
    "step_improvements",
    "position_variance",
    "scalar_variance",
    "citizen_step",
    "resolve_duplicates",
    "init_prev_step",
    "governor_trial_step",
    "governor_step",
    "vote_weight",
    "weighted_avg_improvement",
    "fit_regression",
    "predict_performance",
    "adjust_performance",
    "tournament_select",
    "single_point_crossover",
    "crossover",
    "mutate",
    "run_epistocracy",
]


@dataclass
class EpistocracyConfig:
    """Optimizer settings.

    ``epsilon`` guards every division and logarithm.  ``mass_epsilon`` is
    the floor inside the inverse normalisation that turns governor
    performances into gravitational masses; it bounds how much heavier the
    best governor is than the worst (``1 + 1/mass_epsilon`` times), which
    keeps rebels and several sub-populations alive.
    """

    population_size: int = 100
    iterations: int = 100
    governor_fraction: float = 0.05
    gravity_constant: float = 1.0
    phi: float = 0.1
    space_resolution: float = 0.001
    crossover_rate: float = 0.5
    mutation_rate: float = 0.2
    tournament_size: int = 5
    epsilon: float = 1e-9
    mass_epsilon: float = 1.0
    seed: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.population_size < 2:
            raise ConfigurationError("population_size must be at least 2")
        if self.iterations < 0:
            raise ConfigurationError("iterations must be non-negative")
        if not 0.0 < self.governor_fraction < 1.0:
            raise ConfigurationError("governor_fraction must lie in (0, 1)")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ConfigurationError(f"{name} must lie in [0, 1]")
        for name in ("gravity_constant", "phi", "space_resolution", "epsilon", "mass_epsilon"):
            if not getattr(self, name) > 0.0:
                raise ConfigurationError(f"{name} must be positive")
        if not 1 <= self.tournament_size <= self.population_size:
            raise ConfigurationError("tournament_size must be in [1, population_size]")
        if self.seed < 0:
            raise ConfigurationError("seed must be non-negative")

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class Government:
    governor: Individual
    citizens: list
    avg_improvement: float = 0.0
    weighted_avg_improvement: float = 0.0
    position_variance: Optional[np.ndarray] = None


# ---------------------------------------------------------------------------
# assignment
# ---------------------------------------------------------------------------


def normalize_performance(p, governor_perfs, eps=1e-9):
    """Inverse min-max normalisation against the council's performances.

    The best governor gets ``1/eps`` and the worst ``~1``.  Performances
    better than the best governor are treated as equal to it.  A flat
    council (max == min) gives ``1/eps`` everywhere.
    """
    gp = np.asarray(governor_perfs, dtype=float)
    if gp.size < 2:
        raise ConfigurationError("normalisation needs at least two governor performances")
    lo, hi = gp.min(), gp.max()
    p = np.asarray(p, dtype=float)
    if hi == lo:
        out = np.full(p.shape, 1.0 / eps)
    else:
        frac = np.maximum((p - lo) / (hi - lo), 0.0)
        out = 1.0 / (frac + eps)
    return out if out.ndim else float(out)


def euclidean_distance(a, b):
    d = np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float), axis=-1)
    return d if np.ndim(d) else float(d)


def gravitational_force(m_gov, m_cit, r, G=1.0, eps=1e-9):
    """``G * m_gov * m_cit / r**2`` with ``r**2`` floored at ``eps``."""
    r = np.asarray(r, dtype=float)
    out = G * np.asarray(m_gov) * np.asarray(m_cit) / np.maximum(r * r, eps)
    return out if np.ndim(out) else float(out)


def selection_probabilities(forces):
    """Roulette probabilities ``F_j / sum(F)`` along the last axis.

    Rows whose forces sum to zero (or are not finite) fall back to uniform.
    """
    F = np.asarray(forces, dtype=float)
    total = F.sum(axis=-1, keepdims=True)
    ok = np.isfinite(total) & (total > 0)
    safe = np.where(ok, total, 1.0)
    return np.where(ok, F / safe, 1.0 / F.shape[-1])


def roulette_select(probs, rng):
    """Draw one index per row of ``probs`` (a 1-D input draws a single index)."""
    P = np.atleast_2d(np.asarray(probs, dtype=float))
    cdf = np.cumsum(P, axis=1)
    u = rng.random(P.shape[0]) * cdf[:, -1]
    idx = (cdf <= u[:, None]).sum(axis=1)
    idx = np.minimum(idx, P.shape[1] - 1)
    return int(idx[0]) if np.ndim(probs) == 1 else idx


def _assignment_probs(cit_pos, cit_perf, gov_pos, gov_perf, G, eps):
    m_gov = normalize_performance(gov_perf, gov_perf, eps)
    m_cit = normalize_performance(cit_perf, gov_perf, eps)
    r = np.linalg.norm(cit_pos[:, None, :] - gov_pos[None, :, :], axis=-1)
    F = gravitational_force(m_gov[None, :], np.asarray(m_cit)[:, None], r, G, eps)
    return selection_probabilities(F)


def assign_governors(citizens, governors, rng, G=1.0, eps=1e-9):
    """Give every citizen a ``governor_id`` drawn by gravitational roulette.

    Governor masses come from their adjusted performance, citizen masses
    from their actual performance.
    """
    if len(governors) < 2:
        raise ConfigurationError("assignment needs at least two governors")
    if not citizens:
        return citizens
    cit_pos = np.array([c.position for c in citizens])
    gov_pos = np.array([g.position for g in governors])
    probs = _assignment_probs(
        cit_pos,
        np.array([c.actual_perf for c in citizens]),
        gov_pos,
        np.array([g.adjusted_perf for g in governors]),
        G,
        eps,
    )
    picks = roulette_select(probs, rng)
    for c, j in zip(citizens, picks):
        c.governor_id = governors[j].id
    return citizens


# ---------------------------------------------------------------------------
# citizen movement
# ---------------------------------------------------------------------------


def compute_improvements(prev_perf, actual_perf, eps=1e-9):
    """Per-citizen improvement and the floored average / minimum.

    Returns ``(I, I_avg, I_min)`` where ``I = prev - actual`` and both
    aggregates are floored at ``eps``.  An empty group gives ``eps`` for both.
    """
    I = np.asarray(prev_perf, dtype=float) - np.asarray(actual_perf, dtype=float)
    if I.size == 0:
        return I, eps, eps
    return I, max(float(I.mean()), eps), max(float(I.min()), eps)


def step_improvements(I):
    """Average and minimum improvement over the citizens that improved.

    Used for the citizen step ratio; when nobody improved the ratio is
    neutral (both values 1).
    """
    I = np.asarray(I, dtype=float)
    gained = I[I > 0]
    if gained.size == 0:
        return 1.0, 1.0
    return float(gained.mean()), float(gained.min())


def position_variance(positions) -> np.ndarray:
    """Per-dimension population variance (divisor n)."""
    X = np.atleast_2d(np.asarray(positions, dtype=float))
    return X.var(axis=0)


def scalar_variance(positions) -> float:
    return float(position_variance(positions).mean())


def citizen_step(cit_pos, gov_pos, I_avg, I_min, variance, phi, bounds):
    """Move citizens towards their governor.

    The step length is ``(I_avg / I_min) * variance * d * phi``, capped at
    ``d`` so a citizen never passes its governor.  Accepts one citizen or a
    stack of citizens sharing the same governor.
    """
    x = np.asarray(cit_pos, dtype=float)
    g = np.asarray(gov_pos, dtype=float)
    delta = g - x
    d = np.linalg.norm(delta, axis=-1, keepdims=True)
    length = np.minimum((I_avg / I_min) * variance * d * phi, d)
    with np.errstate(invalid="ignore", divide="ignore"):
        move = np.where(d > 0, delta * (length / np.where(d > 0, d, 1.0)), 0.0)
    # a capped step lands exactly on the governor
    new = np.where(length >= d, g, x + move)
    return clamp_to_bounds(new, bounds)


def _replace_gene(x, bounds, rng):
    x = np.array(x, dtype=float)
    k = rng.integers(x.size)
    x[k] = rng.uniform(bounds.lower[k], bounds.upper[k])
    return clamp_to_bounds(x, bounds)


def _dedupe_group(positions, gov_pos, bounds, rng):
    out = np.array(positions, dtype=float, copy=True)
    seen = {np.asarray(gov_pos, dtype=float).tobytes()}
    for i in range(out.shape[0]):
        key = out[i].tobytes()
        if key in seen:
            out[i] = _replace_gene(out[i], bounds, rng)
            key = out[i].tobytes()
        seen.add(key)
    return out


def resolve_duplicates(pop: Sequence[Individual], bounds, rng):
    """Mutate citizens that sit exactly on their governor or on an earlier
    citizen of the same group.  One random gene is redrawn uniformly."""
    by_id = {ind.id: ind for ind in pop}
    groups: dict = {}
    for ind in pop:
        if ind.role == "citizen" and ind.governor_id is not None:
            groups.setdefault(ind.governor_id, []).append(ind)
    for gid, members in groups.items():
        gov = by_id.get(gid)
        gov_pos = gov.position if gov is not None else np.full(bounds.dim, np.nan)
        new = _dedupe_group([m.position for m in members], gov_pos, bounds, rng)
        for m, x in zip(members, new):
            m.position = x
    return list(pop)


# ---------------------------------------------------------------------------
# governor movement
# ---------------------------------------------------------------------------


def init_prev_step(bounds, space_resolution=0.001, rng=None):
    """Initial governor step: range times resolution, random sign per axis."""
    mag = bounds.width * space_resolution
    if rng is None:
        return mag.copy()
    return mag * rng.choice((-1.0, 1.0), size=mag.size)


def governor_trial_step(prev_step, I_avg, I_j, variance):
    return (I_avg / I_j) * variance * np.asarray(prev_step, dtype=float)


def _governor_move(x, f, prev_step, I_avg, I_j, variance, obj):
    """Returns ``(x, f, prev_step, accepted, evaluated)``."""
    delta = governor_trial_step(prev_step, I_avg, I_j, variance)
    trial = clamp_to_bounds(x + delta, obj.bounds)
    taken = trial - x
    if not np.any(taken):
        # zero move: nothing to test, keep the memory but try the other way
        return x, f, -prev_step, False, False
    f_trial = obj(trial)
    if f_trial - f <= 0.0:
        return trial, f_trial, taken, True, True
    return x, f, -prev_step, False, True


def governor_step(gov: Individual, I_avg, I_j, variance, obj: ObjectiveSpec) -> Individual:
    """Conditional governor move: keep the trial only if it is no worse."""
    if gov.prev_step is None:
        raise ConfigurationError("governor has no step memory")
    x, f, step, accepted, _ = _governor_move(
        gov.position, gov.actual_perf, gov.prev_step, I_avg, I_j, variance, obj
    )
    gov.prev_perf = gov.actual_perf
    gov.position, gov.actual_perf, gov.prev_step = x, f, step
    return gov


# ---------------------------------------------------------------------------
# voting and performance adjustment
# ---------------------------------------------------------------------------


def vote_weight(d_ig, total_d, p_cit, p_gov, eps=1e-9):
    """Vote weight of a citizen in its governor's review.

    ``-log10(d / total) * |p_cit| / (|p_gov - p_cit| + eps)``, floored at
    ``eps``; distances are floored at ``eps`` too.
    """
    d = np.maximum(np.asarray(d_ig, dtype=float), eps)
    total = np.maximum(np.asarray(total_d, dtype=float), eps)
    p_cit = np.asarray(p_cit, dtype=float)
    closeness = -np.log10(np.minimum(d / total, 1.0))
    standing = np.abs(p_cit) / (np.abs(np.asarray(p_gov) - p_cit) + eps)
    w = np.maximum(closeness * standing, eps)
    return w if w.ndim else float(w)


def weighted_avg_improvement(I, w) -> float:
    I = np.asarray(I, dtype=float)
    w = np.asarray(w, dtype=float)
    if I.size == 0:
        return 0.0
    if I.shape != w.shape:
        raise ValueError("improvements and weights differ in length")
    return float(np.sum(w * I) / np.sum(w))


def fit_regression(I_avg, P_actual):
    """Least-squares line ``P = b0 + b1 * I_avg``.

    Returns ``(b0, b1)``, or ``None`` when there are fewer than two points
    or all ``I_avg`` coincide.
    """
    x = np.asarray(I_avg, dtype=float)
    y = np.asarray(P_actual, dtype=float)
    if x.size < 2 or np.all(x == x[0]):
        return None
    xm, ym = x.mean(), y.mean()
    sxx = np.sum((x - xm) ** 2)
    if sxx == 0.0:
        return None
    b1 = np.sum((x - xm) * (y - ym)) / sxx
    return float(ym - b1 * xm), float(b1)


def predict_performance(I_avg, P_actual) -> np.ndarray:
    """Regression prediction per governor; ``P_actual`` itself when skipped."""
    coef = fit_regression(I_avg, P_actual)
    P = np.asarray(P_actual, dtype=float)
    if coef is None:
        return P.copy()
    b0, b1 = coef
    return b0 + b1 * np.asarray(I_avg, dtype=float)


def adjust_performance(p_actual, p_predicted, s_j, total_s, n_governors):
    """``p_actual + eta * (p_actual - p_predicted)`` with
    ``eta = (s_j / total_s) / n_governors``."""
    s_j = np.asarray(s_j, dtype=float)
    eta = np.where(total_s > 0, s_j / max(total_s, 1), 0.0) / n_governors
    out = np.asarray(p_actual) + eta * (np.asarray(p_actual) - np.asarray(p_predicted))
    return out if np.ndim(out) else float(out)


# ---------------------------------------------------------------------------
# genetic operators
# ---------------------------------------------------------------------------


def tournament_select(perfs, size, rng) -> int:
    """Index of the best of ``size`` distinct, uniformly sampled entries."""
    perfs = np.asarray(perfs, dtype=float)
    cand = rng.choice(perfs.size, size=min(size, perfs.size), replace=False)
    return int(cand[np.argmin(perfs[cand])])


def single_point_crossover(p1, p2, k):
    p1, p2 = np.asarray(p1), np.asarray(p2)
    return np.concatenate([p1[:k], p2[k:]]), np.concatenate([p2[:k], p1[k:]])


def crossover(positions, perfs, crossover_rate, tournament_size, rng, count=None) -> np.ndarray:
    """Offspring from tournament-selected parent pairs.

    Produces ``round(crossover_rate * len(positions))`` children unless
    ``count`` is given.  One split point per pair, uniform in
    ``[1, dim - 1]``; for 1-D chromosomes children are copies of their
    parents.
    """
    X = np.asarray(positions, dtype=float)
    n, dim = X.shape
    if count is None:
        count = int(math.floor(crossover_rate * n + 0.5))
    tournament_size = min(tournament_size, n)
    children = []
    while len(children) < count:
        a = tournament_select(perfs, tournament_size, rng)
        b = tournament_select(perfs, tournament_size, rng)
        if dim >= 2:
            k = int(rng.integers(1, dim))
            children.extend(single_point_crossover(X[a], X[b], k))
        else:
            children.extend((X[a].copy(), X[b].copy()))
    return np.array(children[:count]).reshape(count, dim)


def mutate(x, bounds, rng) -> np.ndarray:
    """Redraw one random gene uniformly within its bounds, then clamp."""
    return _replace_gene(x, bounds, rng)


# ---------------------------------------------------------------------------
# main loop
# ---------------------------------------------------------------------------


class _Evaluator:
    def __init__(self, obj):
        self.obj = obj
        self.count = 0
        self.iteration = 0

    @property
    def iteration(self):
        return self._iteration

    @iteration.setter
    def iteration(self, it):
        self._iteration = it
        if self.obj.on_iteration is not None:
            self.obj.on_iteration(it)

    def __call__(self, X):
        X = np.atleast_2d(X)
        self.count += X.shape[0]
        try:
            return self.obj.evaluate_many(X)
        except EvaluationError as exc:
            raise EvaluationError(
                f"iteration {self.iteration}: {exc}", position=exc.position
            ) from exc


def run_epistocracy(
    obj: ObjectiveSpec,
    cfg: EpistocracyConfig,
    rng: Optional[np.random.Generator] = None,
    target: Optional[float] = None,
    tolerance: float = 0.0,
) -> RunRecord:
    """Minimise ``obj`` and return the best-so-far trace.

    Parameters
    ----------
    obj : ObjectiveSpec
    cfg : EpistocracyConfig
    rng : numpy Generator, optional
        Defaults to the optimizer stream derived from ``cfg.seed``.
    target, tolerance : float, optional
        When given, the first iteration whose best is within ``tolerance``
        of ``target`` is recorded in ``RunRecord.first_hit_iteration``.

    Notes
    -----
    ``RunRecord.extra["leader_share"]`` holds, per iteration, the share of
    citizens that followed the governor with the best adjusted performance.
    """
    cfg.validate()
    if rng is None:
        rng = make_rng(cfg.seed, Purpose.OPTIMIZER)
    bounds = obj.bounds
    eps = cfg.epsilon
    n = cfg.population_size
    k = governor_count(n, cfg.governor_fraction)
    n_offspring = int(math.floor(cfg.crossover_rate * n + 0.5))
    evaluate = _Evaluator(obj)

    X = lhs_sample(LhsPlan(n, bounds), rng)
    f = evaluate(X)
    f_prev = f.copy()
    f_adj = f.copy()
    uid = np.arange(n)
    next_uid = n
    steps: dict = {}

    best_i = int(np.argmin(f))
    best_x, best_f = X[best_i].copy(), float(f[best_i])
    trace = [best_f]
    leader_share = []

    def hit(value):
        return target is not None and value <= target + tolerance

    first_hit = 0 if hit(best_f) else None

    for it in range(1, cfg.iterations + 1):
        evaluate.iteration = it

        # separation; step memory follows the individual while it governs
        order = np.argsort(f, kind="stable")
        gov, cit = order[:k], order[k:]
        current = set(uid[gov].tolist())
        steps = {u: s for u, s in steps.items() if u in current}
        for g in gov:
            if uid[g] not in steps:
                steps[uid[g]] = init_prev_step(bounds, cfg.space_resolution, rng)
        f_adj[cit] = f[cit]

        # gravitational roulette
        probs = _assignment_probs(
            X[cit], f[cit], X[gov], f_adj[gov], cfg.gravity_constant, cfg.mass_epsilon
        )
        assign = roulette_select(probs, rng)
        leader_share.append(float(np.mean(assign == np.argmin(f_adj[gov]))))
        members = [cit[assign == j] for j in range(k)]

        # citizens walk towards their governor
        group_I_avg = np.full(k, eps)
        for j, g in enumerate(gov):
            m = members[j]
            if m.size == 0:
                continue
            I, group_I_avg[j], _ = compute_improvements(f_prev[m], f[m], eps)
            I_avg, I_min = step_improvements(I)
            var = scalar_variance(np.vstack([X[g], X[m]]))
            moved = citizen_step(X[m], X[g], I_avg, I_min, var, cfg.phi, bounds)
            X[m] = _dedupe_group(moved, X[g], bounds, rng)

        # conditional governor steps
        var_gov = scalar_variance(X[gov])
        for j, g in enumerate(gov):
            I_j = max(f_prev[g] - f[g], eps)
            try:
                x_new, f_new, steps[uid[g]], _, tested = _governor_move(
                    X[g], f[g], steps[uid[g]], group_I_avg[j], I_j, var_gov, obj
                )
            except EvaluationError as exc:
                raise EvaluationError(f"iteration {it}: {exc}", position=exc.position) from exc
            evaluate.count += int(tested)
            f_prev[g] = f[g]
            X[g], f[g] = x_new, f_new

        f_moved = evaluate(X[cit])
        f_prev[cit] = f[cit]
        f[cit] = f_moved

        # distance-weighted votes and the regression adjustment
        weighted = np.zeros(k)
        sizes = np.array([m.size for m in members], dtype=float)
        for j, g in enumerate(gov):
            m = members[j]
            if m.size == 0:
                continue
            d = np.linalg.norm(X[m] - X[g], axis=1)
            w = np.atleast_1d(vote_weight(d, d.sum(), f[m], f[g], eps))
            weighted[j] = weighted_avg_improvement(f_prev[m] - f[m], w)
        predicted = predict_performance(weighted, f[gov])
        f_adj[gov] = adjust_performance(f[gov], predicted, sizes, sizes.sum(), k)

        # recombination among citizens; offspring replace the worst citizens
        count = min(n_offspring, cit.size)
        if count:
            offspring = crossover(
                X[cit], f[cit], cfg.crossover_rate, cfg.tournament_size, rng, count=count
            )
            for i in range(count):
                if rng.random() < cfg.mutation_rate:
                    offspring[i] = mutate(offspring[i], bounds, rng)
            worst = cit[np.argsort(f[cit], kind="stable")[::-1][:count]]
            f_off = evaluate(offspring)
            X[worst] = offspring
            f[worst] = f_prev[worst] = f_adj[worst] = f_off
            uid[worst] = np.arange(next_uid, next_uid + count)
            next_uid += count

        i = int(np.argmin(f))
        if f[i] < best_f:
            best_f, best_x = float(f[i]), X[i].copy()
        trace.append(best_f)
        if first_hit is None and hit(best_f):
            first_hit = it

    return RunRecord(
        trace=np.array(trace),
        best_position=best_x,
        best_value=best_f,
        evaluations=evaluate.count,
        first_hit_iteration=first_hit,
        extra={"leader_share": np.array(leader_share)},
    )
