"""Epistocracy: a multi-population metaheuristic for box-bounded
minimization, with GA/PSO baselines, benchmark functions, an experiment
harness and a discrete hyper-parameter grid tuner."""

from .baselines import GaConfig, PsoConfig, run_ga, run_pso
from .benchmarks import BENCHMARKS, BenchmarkId, make_benchmark, parse_benchmark
from .core import (
    Bounds,
    ConfigurationError,
    EvaluationError,
    Individual,
    ObjectiveSpec,
    Purpose,
    RunRecord,
    make_rng,
)
from .harness import (
    ExperimentConfig,
    ExperimentError,
    ExperimentStats,
    SuccessMetrics,
    emit_results,
    run_experiment,
    success_metrics,
)
from .optimizer import EpistocracyConfig, run_epistocracy
from .sampling import LhsPlan, clamp_to_bounds, lhs_sample

__version__ = "0.1.0"

__all__ = [
    "Bounds",
    "ObjectiveSpec",
    "Individual",
    "RunRecord",
    "ConfigurationError",
    "EvaluationError",
    "Purpose",
    "make_rng",
    "LhsPlan",
    "lhs_sample",
    "clamp_to_bounds",
    "BENCHMARKS",
    "BenchmarkId",
    "make_benchmark",
    "parse_benchmark",
    "EpistocracyConfig",
    "run_epistocracy",
    "GaConfig",
    "PsoConfig",
    "run_ga",
    "run_pso",
    "ExperimentConfig",
    "ExperimentStats",
    "ExperimentError",
    "SuccessMetrics",
    "run_experiment",
    "success_metrics",
    "emit_results",
]
