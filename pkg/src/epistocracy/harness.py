"""Repeated-run experiments, summary statistics and result files.

Run ``i`` of an experiment uses seed ``base_seed + i``, so results do not
depend on how runs are spread over worker processes.
"""

from __future__ import annotations

import csv
import json
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Optional, Sequence

import numpy as np

from .baselines import GaConfig, PsoConfig, run_ga, run_pso
from .benchmarks import BenchmarkId, make_benchmark
from .core import ConfigurationError, ObjectiveSpec, Purpose, RunRecord, make_rng
from .optimizer import EpistocracyConfig, run_epistocracy

__all__ = [
    "ALGORITHMS",
    "ExperimentConfig",
    "ExperimentStats",
    "ExperimentError",
    "SuccessMetrics",
    "run_experiment",
    "summarize",
    "success_metrics",
    "default_tolerance",
    "emit_results",
    "write_summary_csv",
    "write_trace_csv",
    "write_per_run_csv",
    "write_json",
    "read_json",
    "SUMMARY_COLUMNS",
    "TRACE_COLUMNS",
    "PER_RUN_COLUMNS",
]

# name -> (config class, runner, rng purpose)
ALGORITHMS = {
    "epistocracy": (EpistocracyConfig, run_epistocracy, Purpose.OPTIMIZER),
    "ga": (GaConfig, run_ga, Purpose.BASELINE),
    "pso": (PsoConfig, run_pso, Purpose.BASELINE),
}

SUMMARY_COLUMNS = [
    "function", "algorithm", "dimension", "population", "iterations", "runs",
    "min", "max", "mean", "std",
]
TRACE_COLUMNS = ["run", "iteration", "best_fitness"]
PER_RUN_COLUMNS = ["function", "algorithm", "run", "final_best"]


class ExperimentError(RuntimeError):
    def __init__(self, message, run_index=None):
        super().__init__(message)
        self.run_index = run_index


@dataclass
class ExperimentConfig:
    """One algorithm on one objective, repeated ``runs`` times.

    ``objective`` may be a :class:`BenchmarkId`, a ready
    :class:`ObjectiveSpec`, or any object with a
    ``make_objective(run_index)`` method (used when each run needs fresh
    state, e.g. a memoising grid objective).  Worker processes require it
    to be picklable.
    """

    algorithm: str
    objective: Any
    algo_config: Any = None
    runs: int = 100
    base_seed: int = 0
    target: Optional[float] = None
    tolerance: float = 0.0
    keep_traces: bool = True

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ConfigurationError(
                f"unknown algorithm {self.algorithm!r}; choose from {sorted(ALGORITHMS)}"
            )
        if self.runs < 1:
            raise ConfigurationError("runs must be at least 1")
        if self.base_seed < 0:
            raise ConfigurationError("base_seed must be non-negative")
        cls = ALGORITHMS[self.algorithm][0]
        if self.algo_config is None:
            self.algo_config = cls()
        elif not isinstance(self.algo_config, cls):
            raise ConfigurationError(
                f"{self.algorithm} needs a {cls.__name__}, got {type(self.algo_config).__name__}"
            )

    @property
    def function_label(self) -> str:
        o = self.objective
        if isinstance(o, BenchmarkId):
            return o.label
        return getattr(o, "name", type(o).__name__)


@dataclass
class SuccessMetrics:
    hit_rate: float
    avg_hit_iteration: Optional[float]
    hits: int = 0
    runs: int = 0


@dataclass
class ExperimentStats:
    function: str
    algorithm: str
    dimension: int
    population: int
    iterations: int
    runs: int
    min: float
    max: float
    mean: float
    std: float
    finals: np.ndarray
    traces: Optional[np.ndarray] = None
    first_hits: list = field(default_factory=list)
    best_positions: Optional[np.ndarray] = None
    config: dict = field(default_factory=dict)

    def summary_row(self) -> dict:
        return {c: getattr(self, c) for c in SUMMARY_COLUMNS}

    def success(self) -> Optional[SuccessMetrics]:
        """Hit statistics when the experiment had a target."""
        if self.config.get("target") is None:
            return None
        return _metrics_from_first_hits(self.first_hits)


def summarize(finals) -> tuple:
    """``(min, max, mean, std)`` with the sample standard deviation
    (divisor ``n - 1``); a single run has std 0."""
    a = np.asarray(finals, dtype=float)
    if a.size == 0:
        raise ValueError("no values to summarize")
    std = float(a.std(ddof=1)) if a.size > 1 else 0.0
    return float(a.min()), float(a.max()), float(a.mean()), std


def _resolve_objective(source, run_index) -> ObjectiveSpec:
    if isinstance(source, BenchmarkId):
        return make_benchmark(source)
    if isinstance(source, ObjectiveSpec):
        return source
    if hasattr(source, "make_objective"):
        return source.make_objective(run_index)
    raise ConfigurationError(f"cannot build an objective from {source!r}")


def _run_one(cfg: ExperimentConfig, run_index: int) -> RunRecord:
    cls, runner, purpose = ALGORITHMS[cfg.algorithm]
    seed = cfg.base_seed + run_index
    algo_cfg = replace(cfg.algo_config, seed=seed)
    obj = _resolve_objective(cfg.objective, run_index)
    try:
        return runner(obj, algo_cfg, make_rng(seed, purpose), target=cfg.target, tolerance=cfg.tolerance)
    finally:
        close = getattr(obj, "close", None) or getattr(cfg.objective, "close_run", None)
        if close is not None:
            close()


def _guarded(args):
    cfg, i = args
    try:
        return _run_one(cfg, i)
    except Exception as exc:  # surfaced with the run index by the caller
        return ExperimentError(f"run {i} failed: {type(exc).__name__}: {exc}", run_index=i)


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> ExperimentStats:
    """Execute all runs and aggregate their final best values.

    Any failing run aborts the experiment with an :class:`ExperimentError`
    naming the run; no partial statistics are returned.
    """
    tasks = [(cfg, i) for i in range(cfg.runs)]
    if jobs > 1 and cfg.runs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            records = list(pool.map(_guarded, tasks))
    else:
        records = [_guarded(t) for t in tasks]
    for r in records:
        if isinstance(r, ExperimentError):
            raise r

    finals = np.array([r.best_value for r in records])
    lo, hi, mean, std = summarize(finals)
    algo = cfg.algo_config
    dim = records[0].best_position.size
    return ExperimentStats(
        function=cfg.function_label,
        algorithm=cfg.algorithm,
        dimension=dim,
        population=algo.population_size,
        iterations=algo.iterations,
        runs=cfg.runs,
        min=lo,
        max=hi,
        mean=mean,
        std=std,
        finals=finals,
        traces=np.array([r.trace for r in records]) if cfg.keep_traces else None,
        first_hits=[r.first_hit_iteration for r in records],
        best_positions=np.array([r.best_position for r in records]),
        config={
            "algorithm": cfg.algorithm,
            "algo_config": {k: v for k, v in algo.to_dict().items() if k != "seed"},
            "function": cfg.function_label,
            "runs": cfg.runs,
            "base_seed": cfg.base_seed,
            "target": cfg.target,
            "tolerance": cfg.tolerance,
        },
    )


# ---------------------------------------------------------------------------
# success metrics
# ---------------------------------------------------------------------------


def default_tolerance(target: float) -> float:
    """``1e-4`` relative to the optimum, absolute ``1e-4`` near zero."""
    return 1e-4 * max(1.0, abs(target))


def _metrics_from_first_hits(first_hits) -> SuccessMetrics:
    hits = [h for h in first_hits if h is not None]
    n = len(first_hits)
    return SuccessMetrics(
        hit_rate=len(hits) / n if n else 0.0,
        avg_hit_iteration=float(np.mean(hits)) if hits else None,
        hits=len(hits),
        runs=n,
    )


def success_metrics(traces, target_value: float, tolerance: float) -> SuccessMetrics:
    """Share of runs whose best-so-far reached ``target + tolerance`` and the
    mean first iteration at which the successful ones got there."""
    first = []
    for tr in traces:
        tr = np.asarray(tr, dtype=float)
        idx = np.flatnonzero(tr <= target_value + tolerance)
        first.append(int(idx[0]) if idx.size else None)
    return _metrics_from_first_hits(first)


# ---------------------------------------------------------------------------
# output files
# ---------------------------------------------------------------------------


def _fmt(v):
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return str(int(v))
    return v


class _Borrowed:
    """Context wrapper that leaves a caller's stream open."""

    def __init__(self, fh):
        self.fh = fh

    def __enter__(self):
        return self.fh

    def __exit__(self, *exc):
        self.fh.flush()


def _open_for_write(path):
    """Open ``path`` for writing; an already open text stream is used as is."""
    if hasattr(path, "write"):
        return _Borrowed(path)
    try:
        d = os.path.dirname(os.fspath(path))
        if d:
            os.makedirs(d, exist_ok=True)
        return open(path, "w", newline="")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc.strerror or exc}") from exc


def write_summary_csv(stats: Sequence[ExperimentStats], path) -> None:
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(SUMMARY_COLUMNS)
        for s in stats:
            w.writerow([_fmt(s.summary_row()[c]) for c in SUMMARY_COLUMNS])


def write_trace_csv(stats: ExperimentStats, path) -> None:
    if stats.traces is None:
        raise ValueError("experiment was run without keep_traces")
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(TRACE_COLUMNS)
        for run, tr in enumerate(stats.traces):
            for it, v in enumerate(tr):
                w.writerow([run, it, _fmt(v)])


def write_per_run_csv(stats: Sequence[ExperimentStats], path) -> None:
    with _open_for_write(path) as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(PER_RUN_COLUMNS)
        for s in stats:
            for run, v in enumerate(s.finals):
                w.writerow([s.function, s.algorithm, run, _fmt(v)])


def _json_ready(s: ExperimentStats, per_run: bool) -> dict:
    out = {c: s.summary_row()[c] for c in SUMMARY_COLUMNS}
    for c in ("min", "max", "mean", "std"):
        out[c] = float(out[c])
    out["config"] = s.config
    sm = s.success()
    if sm is not None:
        out["hit_rate"] = sm.hit_rate
        out["avg_hit_iteration"] = sm.avg_hit_iteration
    if per_run:
        out["finals"] = [float(v) for v in s.finals]
    return out


def write_json(stats: Sequence[ExperimentStats], path, per_run: bool = True) -> None:
    with _open_for_write(path) as fh:
        json.dump({"experiments": [_json_ready(s, per_run) for s in stats]}, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path) -> list:
    with open(path) as fh:
        return json.load(fh)["experiments"]


def emit_results(stats, format: str, path, per_run: bool = True) -> None:
    """Write experiment results as ``"csv"`` (summary rows) or ``"json"``."""
    if isinstance(stats, ExperimentStats):
        stats = [stats]
    if format == "csv":
        write_summary_csv(stats, path)
    elif format == "json":
        write_json(stats, path, per_run=per_run)
    else:
        raise ValueError(f"unknown format {format!r}")
