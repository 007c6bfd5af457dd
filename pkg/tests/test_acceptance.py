"""Acceptance criteria at full scale: population 100, 100 iterations and
100 runs per benchmark cell, plus the property criteria.

Every criterion prints one PASS/FAIL line (collected again in the terminal
summary).  Set ``EPISTOCRACY_JOBS`` to spread the runs over processes.
"""

import os
from fractions import Fraction

import numpy as np
import pytest

from epistocracy.baselines import GaConfig, PsoConfig
from epistocracy.benchmarks import BenchmarkId, make_benchmark
from epistocracy.cli import main
from epistocracy.core import Bounds, ObjectiveSpec, make_rng
from epistocracy.gridtuner import MNIST_GRID, TableObjective, synthetic_table, tune
from epistocracy.harness import ExperimentConfig, run_experiment
from epistocracy.optimizer import (
    EpistocracyConfig,
    adjust_performance,
    citizen_step,
    compute_improvements,
    euclidean_distance,
    fit_regression,
    governor_trial_step,
    gravitational_force,
    init_prev_step,
    normalize_performance,
    position_variance,
    roulette_select,
    run_epistocracy,
    scalar_variance,
    selection_probabilities,
    vote_weight,
    weighted_avg_improvement,
)
from epistocracy.sampling import LhsPlan, lhs_sample

pytestmark = pytest.mark.acceptance

RUNS = 100
SEED = 2024
JOBS = int(os.environ.get("EPISTOCRACY_JOBS", "1"))

_cache = {}


def stats(algo, name, dim=2):
    key = (algo, name, dim)
    if key not in _cache:
        cls = {"epistocracy": EpistocracyConfig, "ga": GaConfig, "pso": PsoConfig}[algo]
        cfg = ExperimentConfig(algo, BenchmarkId(name, dim), cls(), runs=RUNS, base_seed=SEED, keep_traces=False)
        _cache[key] = run_experiment(cfg, jobs=JOBS)
    return _cache[key]


def test_c01_rastrigin5(verdict):
    s = stats("epistocracy", "rastrigin", 5)
    verdict(1, s.mean <= 1e-2 and s.std <= 1e-2, f"Rastrigin-5D mean={s.mean:.3e} std={s.std:.3e} (<= 1e-2 each)")


def test_c02_eggholder(verdict):
    s = stats("epistocracy", "eggholder")
    reached = bool(np.any(np.abs(s.finals - -959.6407) <= 1e-2))
    stuck = int(np.sum(s.finals > -955))
    verdict(
        2,
        s.mean <= -955 and s.std <= 5 and reached,
        f"Eggholder mean={s.mean:.4f} (<= -955) std={s.std:.4f} (<= 5) min={s.min:.4f} "
        f"reached optimum={reached}; {stuck}/{RUNS} runs finished above -955",
    )


def test_c03_schaffer4(verdict):
    s = stats("epistocracy", "schaffer4")
    verdict(
        3,
        s.mean <= 0.2936 and abs(s.min - 0.2926) <= 1e-4,
        f"Schaffer-4 mean={s.mean:.6f} (<= 0.2936) min={s.min:.6f} (0.2926 +- 1e-4)",
    )


def test_c04_crossintray(verdict):
    s = stats("epistocracy", "crossintray")
    verdict(4, abs(s.mean - -2.0626) <= 1e-3, f"CrossInTray mean={s.mean:.6f} (-2.0626 +- 1e-3)")


def test_c05_griewank(verdict):
    g2 = stats("epistocracy", "griewank", 2)
    g5 = stats("epistocracy", "griewank", 5)
    verdict(
        5,
        g2.mean <= 0.02 and g5.mean <= 0.10,
        f"Griewank-2D mean={g2.mean:.4e} (<= 0.02), Griewank-5D mean={g5.mean:.4e} (<= 0.10)",
    )


def test_c06_baselines(verdict):
    ga, pso = stats("ga", "crossintray"), stats("pso", "crossintray")
    epi = stats("epistocracy", "rastrigin", 5)
    ga_r, pso_r = stats("ga", "rastrigin", 5), stats("pso", "rastrigin", 5)
    ok = (
        abs(ga.mean - -2.0625) <= 1e-3
        and abs(pso.mean - -2.0626) <= 1e-3
        and ga_r.mean > epi.mean
        and pso_r.mean > epi.mean
    )
    verdict(
        6,
        ok,
        f"CrossInTray GA={ga.mean:.6f} PSO={pso.mean:.6f}; Rastrigin-5D GA={ga_r.mean:.4f} "
        f"PSO={pso_r.mean:.4f} vs Epistocracy={epi.mean:.2e}",
    )


def test_c07_grid_tuner(verdict):
    obj = TableObjective(MNIST_GRID, synthetic_table(seed=0))
    best_point, best_score = obj.best()
    cfg = EpistocracyConfig(population_size=20, iterations=100, governor_fraction=0.10)
    r = tune(MNIST_GRID, obj, "epistocracy", cfg, runs=RUNS, base_seed=SEED, jobs=JOBS)
    m = r.metrics
    identity = all(p == best_point for p, h in zip(r.run_best_points, r.first_hits) if h is not None)
    identity &= all(h is not None for s, h in zip(r.run_best_scores, r.first_hits) if s == best_score)
    avg = m.avg_hit_iteration if m.avg_hit_iteration is not None else float("inf")
    verdict(
        7,
        m.hit_rate >= 0.15 and avg <= 25 and identity,
        f"grid tuner hit_rate={m.hit_rate:.2f} (>= 0.15) avg_hit_iteration={avg:.2f} (<= 25) "
        f"best point matches brute force={identity}",
    )


def test_c08_equation_oracles(verdict):
    eps = 1e-9
    b = Bounds.uniform(-10, 10, 2)
    cases = [
        ("normalize mid", normalize_performance(6, [2, 10], eps), 1 / (0.5 + eps)),
        ("normalize best", normalize_performance(2, [2, 10], eps) * eps, 1.0),
        ("normalize worst", normalize_performance(10, [2, 10], eps), 1 / (1 + eps)),
        ("force", gravitational_force(2, 1, 2, 1.0), 0.5),
        ("force unit", gravitational_force(1, 1, 1, 1.0), 1.0),
        ("force floor", gravitational_force(1, 1, 0, 1.0, eps) * eps, 1.0),
        ("distance", euclidean_distance((0, 0), (3, 4)), 5.0),
        ("distance 4d", euclidean_distance((1, 1, 1, 1), (0, 0, 0, 0)), 2.0),
        ("roulette", selection_probabilities([3.0, 1.0])[0], 0.75),
        ("I_avg", compute_improvements([3, 5], [2, 2])[1], 2.0),
        ("I_min", compute_improvements([3, 5], [2, 2])[2], 1.0),
        ("I_min floor", compute_improvements([0, 6], [2, 2], eps)[2], eps),
        ("variance", position_variance([[1.0], [3.0]])[0], 1.0),
        ("variance scalar", scalar_variance([[0, 0], [2, 0]]), 0.5),
        ("citizen step", citizen_step([0.0, 0.0], [4.0, 0.0], 2.0, 1.0, 0.5, 0.1, b)[0], 0.4),
        ("citizen cap", citizen_step([0.0, 0.0], [4.0, 0.0], 25.0, 1.0, 1.0, 0.1, b)[0], 4.0),
        ("prev step", init_prev_step(Bounds.uniform(-512, 512, 1), 0.001)[0], 1.024),
        ("governor step", governor_trial_step([0.01], 2.0, 1.0, 0.25)[0], 0.005),
        ("vote weight", vote_weight(1, 10, 2, 4, 1e-6), 2 / (2 + 1e-6)),
        ("vote floor", vote_weight(10, 10, 2, 4, eps), eps),
        ("weighted I", weighted_avg_improvement([2, 4], [1, 3]), 3.5),
        ("regression b1", fit_regression([1, 2], [2, 4])[1], 2.0),
        ("regression b0", fit_regression([0, 1, 2], [0, 1, 2])[0], 0.0),
        ("adjusted", adjust_performance(10, 8, 30, 50, 2), 10.6),
        ("adjusted s=0", adjust_performance(10, 8, 0, 50, 2), 10.0),
    ]
    bad = [(n, got, want) for n, got, want in cases if not abs(got - want) <= 1e-10]
    verdict(8, not bad, f"{len(cases) - len(bad)}/{len(cases)} formula oracles within 1e-10 {bad or ''}")


def _exact_ols(x, y):
    """Closed-form OLS in exact rational arithmetic."""
    xs = [Fraction(float(v)) for v in x]
    ys = [Fraction(float(v)) for v in y]
    n = len(xs)
    sx, sy = sum(xs), sum(ys)
    sxy = n * sum(a * b for a, b in zip(xs, ys)) - sx * sy
    sxx = n * sum(a * a for a in xs) - sx * sx
    b1 = sxy / sxx
    return float((sy - b1 * sx) / n), float(b1)


def test_c09_regression_oracle(verdict):
    rng = make_rng(SEED, 9)
    worst = 0.0
    for _ in range(1000):
        n = int(rng.integers(2, 11))
        x = rng.normal(0, 3, n)
        y = rng.normal(0, 10, n) + rng.normal() * x
        b0, b1 = fit_regression(x, y)
        r0, r1 = _exact_ols(x, y)
        worst = max(worst, abs(b0 - r0), abs(b1 - r1))
    verdict(9, worst <= 1e-10, f"OLS vs exact closed form on 1000 datasets, max abs diff={worst:.2e}")


def test_c10_lhs_and_roulette(verdict):
    exact = True
    for n, d in [(1, 1), (2, 3), (4, 1), (10, 5), (37, 2), (100, 2), (256, 7)]:
        bounds = Bounds.uniform(-512, 512, d)
        X = lhs_sample(LhsPlan(n, bounds), make_rng(SEED, n))
        idx = np.minimum(((X - bounds.lower) / bounds.width * n).astype(int), n - 1)
        exact &= all((np.bincount(idx[:, k], minlength=n) == 1).all() for k in range(d))
    p = selection_probabilities([5.0, 3.0, 1.5, 0.5])
    draws = roulette_select(np.tile(p, (100_000, 1)), make_rng(SEED, 10))
    freq = np.bincount(draws, minlength=4) / 100_000
    se = np.sqrt(p * (1 - p) / 100_000)
    z = np.abs(freq - p) / se
    verdict(10, exact and (z <= 3).all(), f"LHS stratification exact={exact}; roulette max |z|={z.max():.2f} (<= 3)")


def test_c11_invariants(verdict, tmp_path):
    base = make_benchmark("eggholder")
    outside = []

    def check(x):
        if not base.bounds.contains(x):
            outside.append(x)
        return base(x)

    spy = ObjectiveSpec(base.bounds, check)
    rec = run_epistocracy(spy, EpistocracyConfig(iterations=50), make_rng(SEED, 1))
    monotone = bool(np.all(np.diff(rec.trace) <= 0))
    again = run_epistocracy(spy, EpistocracyConfig(iterations=50), make_rng(SEED, 1))
    deterministic = np.array_equal(rec.trace, again.trace)
    outputs = []
    for jobs in ("1", "4"):
        out = tmp_path / f"j{jobs}.csv"
        tr = tmp_path / f"t{jobs}.csv"
        code = main(["bench", "--function", "rastrigin5", "--runs", "8", "--iters", "20", "--seed", str(SEED),
                     "--jobs", jobs, "--out", str(out), "--trace-out", str(tr)])
        outputs.append((code, out.read_bytes(), tr.read_bytes()))
    parallel = outputs[0] == outputs[1] and outputs[0][0] == 0
    verdict(
        11,
        not outside and monotone and deterministic and parallel,
        f"in bounds={not outside} monotone trace={monotone} deterministic={deterministic} "
        f"--jobs 1 == --jobs 4: {parallel}",
    )


def test_c12_force_scaling(verdict):
    rng = make_rng(SEED, 12)
    worst = 0.0
    for _ in range(1000):
        F = rng.uniform(1e-3, 1e3, int(rng.integers(2, 20)))
        c = 10 ** rng.uniform(-6, 6)
        worst = max(worst, float(np.abs(selection_probabilities(F * c) - selection_probabilities(F)).max()))
    verdict(12, worst <= 1e-12, f"probabilities under force scaling, max abs diff={worst:.2e} (<= 1e-12)")
