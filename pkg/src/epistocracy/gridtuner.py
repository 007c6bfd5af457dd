"""Discrete hyper-parameter grids searched with the continuous optimizers.

Optimizers move in index space: axis ``k`` spans ``[0, L_k - 1]`` and a
position is snapped to the nearest level index (ties round up) before it is
scored.  Scores come either from a complete lookup table or from an
external evaluator process speaking a one-line request/response protocol::

    -> EVAL <run_id> <iteration> filters=28 size=6 neurons=50 dropout=0.3
    <- OK 0.9951            (or: ERR <message>)

Scores are maximized by default; internally the optimizers minimize the
negated score.  Every grid point is scored at most once per run.
"""

from __future__ import annotations

import csv
import itertools
import math
import queue
import shlex
import subprocess
import threading
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .core import Bounds, ConfigurationError, EvaluationError, ObjectiveSpec, Purpose, make_rng
from .harness import ExperimentConfig, SuccessMetrics, run_experiment

__all__ = [
    "GridSpace",
    "GridObjective",
    "TableObjective",
    "ExternalObjective",
    "GridEvaluationError",
    "TuneResult",
    "enumerate_grid",
    "snap_indices",
    "snap_to_grid",
    "parse_grid_file",
    "table_objective",
    "external_objective",
    "synthetic_table",
    "write_table",
    "tune",
    "MNIST_GRID",
    "MNIST_BEST",
]


class GridEvaluationError(EvaluationError):
    """Scoring a grid point failed; ``point`` names it."""

    def __init__(self, message, point=None):
        super().__init__(message)
        self.point = point


def _parse_level(text: str):
    text = text.strip()
    try:
        return int(text)
    except ValueError:
        return float(text)


@dataclass(frozen=True)
class GridSpace:
    """Ordered axes, each a name and an increasing list of levels."""

    axes: tuple

    def __post_init__(self):
        axes = tuple((str(name), tuple(levels)) for name, levels in self.axes)
        if not axes:
            raise ConfigurationError("a grid needs at least one axis")
        names = [a[0] for a in axes]
        if len(set(names)) != len(names):
            raise ConfigurationError(f"duplicate axis names in {names}")
        for name, levels in axes:
            if len(levels) < 2:
                raise ConfigurationError(f"axis {name!r} needs at least 2 levels")
            if any(b <= a for a, b in zip(levels, levels[1:])):
                raise ConfigurationError(f"levels of axis {name!r} must be distinct and sorted: {levels}")
        object.__setattr__(self, "axes", axes)

    @property
    def names(self) -> list:
        return [a[0] for a in self.axes]

    @property
    def sizes(self) -> list:
        return [len(a[1]) for a in self.axes]

    @property
    def size(self) -> int:
        return math.prod(self.sizes)

    @property
    def bounds(self) -> Bounds:
        """Index-space box ``[0, L_k - 1]`` per axis."""
        return Bounds(np.zeros(len(self.axes)), np.array(self.sizes, dtype=float) - 1.0)

    def point(self, indices) -> tuple:
        return tuple(levels[int(i)] for (_, levels), i in zip(self.axes, indices))

    def format_point(self, point) -> str:
        return " ".join(f"{n}={v}" for n, v in zip(self.names, point))


# Axes of the exhaustive MNIST CNN search and its best configuration
MNIST_GRID = GridSpace((
    ("filter_number", (12, 16, 20, 24, 28, 32)),
    ("filter_size", (3, 4, 5, 6, 7)),
    ("neuron_size", (50, 100, 150, 200)),
    ("dropout_rate", (0.1, 0.2, 0.3, 0.4)),
))
MNIST_BEST = ((28, 6, 50, 0.3), 0.9951)


def enumerate_grid(space: GridSpace) -> list:
    """All grid points, lexicographic in axis order."""
    return list(itertools.product(*(levels for _, levels in space.axes)))


def snap_indices(x, space: GridSpace) -> tuple:
    x = np.asarray(x, dtype=float)
    if x.shape != (len(space.axes),):
        raise ConfigurationError(f"position has shape {x.shape}, grid has {len(space.axes)} axes")
    idx = np.floor(x + 0.5).astype(int)
    return tuple(int(i) for i in np.clip(idx, 0, np.array(space.sizes) - 1))


def snap_to_grid(x, space: GridSpace) -> tuple:
    """Nearest grid point to an index-space position (half rounds up)."""
    return space.point(snap_indices(x, space))


def parse_grid_file(path) -> GridSpace:
    """Read ``name: v1, v2, ...`` lines; blank lines and ``#`` comments skipped."""
    axes = []
    with open(path) as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            name, sep, values = line.partition(":")
            if not sep or not name.strip():
                raise ConfigurationError(f"{path}:{lineno}: expected 'name: v1, v2, ...'")
            try:
                levels = [_parse_level(v) for v in values.split(",") if v.strip()]
            except ValueError as exc:
                raise ConfigurationError(f"{path}:{lineno}: {exc}") from None
            axes.append((name.strip(), levels))
    return GridSpace(tuple(axes))


# ---------------------------------------------------------------------------
# objectives
# ---------------------------------------------------------------------------


class GridObjective:
    """Base for grid objectives: snapping, direction and per-run memo.

    Subclasses implement ``_score(point)``.
    """

    def __init__(self, space: GridSpace, maximize: bool = True, name: str = "grid"):
        self.space = space
        self.maximize = maximize
        self.name = name
        self.cache: dict = {}
        self.exchanges = 0
        self.iteration = 0
        self.run_id = 0

    def _score(self, point) -> float:
        raise NotImplementedError

    def score(self, point) -> float:
        point = tuple(point)
        if point not in self.cache:
            self.exchanges += 1
            self.cache[point] = float(self._score(point))
        return self.cache[point]

    def value(self, x) -> float:
        """Minimization value of an index-space position."""
        s = self.score(snap_to_grid(x, self.space))
        return -s if self.maximize else s

    def _set_iteration(self, it):
        self.iteration = it

    def objective_spec(self) -> ObjectiveSpec:
        return ObjectiveSpec(self.space.bounds, self.value, name=self.name, on_iteration=self._set_iteration)

    def make_objective(self, run_index: int) -> ObjectiveSpec:
        """Fresh memo for run ``run_index``; used by the harness."""
        self.reset(run_index)
        return self.objective_spec()

    def reset(self, run_id: int = 0):
        self.cache = {}
        self.exchanges = 0
        self.iteration = 0
        self.run_id = run_id

    def close_run(self):
        pass


class TableObjective(GridObjective):
    """Scores looked up in a complete table of every grid point."""

    def __init__(self, space: GridSpace, scores: dict, maximize: bool = True, name: str = "table"):
        super().__init__(space, maximize, name)
        missing = [p for p in enumerate_grid(space) if p not in scores]
        if missing:
            shown = ", ".join(space.format_point(p) for p in missing[:5])
            more = f" (and {len(missing) - 5} more)" if len(missing) > 5 else ""
            raise ConfigurationError(f"table is missing {len(missing)} grid point(s): {shown}{more}")
        extra = len(scores) - space.size
        if extra:
            raise ConfigurationError(f"table has {extra} point(s) outside the grid")
        self.table = {tuple(p): float(v) for p, v in scores.items()}

    def _score(self, point) -> float:
        return self.table[point]

    def best(self) -> tuple:
        """Brute-force best ``(point, score)``; ties go to the first in grid order."""
        pick = max if self.maximize else min
        best_p = pick(enumerate_grid(self.space), key=lambda p: self.table[p])
        return best_p, self.table[best_p]


def _match_level(text, levels, axis, where):
    try:
        v = float(text)
    except ValueError:
        raise ConfigurationError(f"{where}: {axis}={text!r} is not a number") from None
    for lv in levels:
        if float(lv) == v:
            return lv
    raise ConfigurationError(f"{where}: {axis}={text} is not a level of the grid")


def table_objective(path, space: GridSpace, maximize: bool = True) -> TableObjective:
    """Load ``axis1,...,axisN,score`` rows covering every grid point once."""
    scores = {}
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ConfigurationError(f"{path}: empty table") from None
        if header != space.names + ["score"]:
            raise ConfigurationError(
                f"{path}: header {header} does not match {space.names + ['score']}"
            )
        for lineno, row in enumerate(reader, 2):
            if not row or all(not c.strip() for c in row):
                continue
            where = f"{path}:{lineno}"
            if len(row) != len(header):
                raise ConfigurationError(f"{where}: malformed row with {len(row)} fields, expected {len(header)}")
            point = tuple(
                _match_level(c.strip(), levels, name, where)
                for c, (name, levels) in zip(row, space.axes)
            )
            try:
                score = float(row[-1])
            except ValueError:
                raise ConfigurationError(f"{where}: malformed score {row[-1]!r}") from None
            if not math.isfinite(score):
                raise ConfigurationError(f"{where}: non-finite score")
            if point in scores:
                raise ConfigurationError(f"{where}: duplicate point {space.format_point(point)}")
            scores[point] = score
    return TableObjective(space, scores, maximize, name=str(path))


def write_table(path, space: GridSpace, scores: dict) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(space.names + ["score"])
        for p in enumerate_grid(space):
            w.writerow(list(p) + [repr(float(scores[p]))])


def synthetic_table(space: GridSpace = MNIST_GRID, seed: int = 0, best=MNIST_BEST, noise: float = 0.002) -> dict:
    """Plausible accuracy surface with a unique maximum at ``best``.

    Accuracy falls off quadratically with index distance from the best
    point, plus independent noise kept strictly below the best score.
    """
    best_point, best_score = best
    rng = make_rng(seed, Purpose.TABLE)
    best_idx = np.array([levels.index(v) for (_, levels), v in zip(space.axes, best_point)])
    span = np.array(space.sizes, dtype=float) - 1.0
    scores = {}
    for idx in itertools.product(*(range(n) for n in space.sizes)):
        d = (np.array(idx) - best_idx) / span
        p = space.point(idx)
        if p == tuple(best_point):
            scores[p] = best_score
            continue
        s = best_score - 0.004 - 0.02 * float(d @ d) - noise * rng.random()
        scores[p] = round(s, 6)
    return scores


class _LineReader:
    """Background reader so responses can be awaited with a timeout."""

    def __init__(self, stream):
        self.lines: queue.Queue = queue.Queue()
        t = threading.Thread(target=self._pump, args=(stream,), daemon=True)
        t.start()

    def _pump(self, stream):
        for line in stream:
            self.lines.put(line)
        self.lines.put(None)

    def get(self, timeout):
        return self.lines.get(timeout=timeout)


class ExternalObjective(GridObjective):
    """Scores produced by a user process, one process per run."""

    def __init__(self, command, space: GridSpace, timeout: float = 600.0, maximize: bool = True, name: str = "external"):
        super().__init__(space, maximize, name)
        if isinstance(command, str):
            command = shlex.split(command)
        if not command:
            raise ConfigurationError("empty evaluator command")
        if not timeout > 0:
            raise ConfigurationError("timeout must be positive")
        self.command = list(command)
        self.timeout = float(timeout)
        self._proc = None
        self._reader = None

    def __getstate__(self):
        state = dict(self.__dict__)
        state["_proc"] = state["_reader"] = None
        return state

    def _start(self):
        try:
            self._proc = subprocess.Popen(
                self.command, stdin=subprocess.PIPE, stdout=subprocess.PIPE, text=True, bufsize=1
            )
        except OSError as exc:
            raise GridEvaluationError(f"cannot start evaluator {self.command}: {exc}") from exc
        self._reader = _LineReader(self._proc.stdout)

    def _score(self, point) -> float:
        if self._proc is None:
            self._start()
        desc = self.space.format_point(point)
        request = f"EVAL {self.run_id} {self.iteration} {desc}\n"
        try:
            self._proc.stdin.write(request)
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError):
            self.close_run()
            raise GridEvaluationError(f"evaluator exited before scoring {desc}", point) from None
        try:
            line = self._reader.get(self.timeout)
        except queue.Empty:
            self._proc.kill()
            self.close_run()
            raise GridEvaluationError(f"evaluator timed out after {self.timeout:g} s on {desc}", point) from None
        if line is None:
            code = self._proc.wait()
            self._proc = None
            raise GridEvaluationError(f"evaluator exited with status {code} while scoring {desc}", point)
        kind, _, rest = line.strip().partition(" ")
        if kind == "OK":
            try:
                score = float(rest)
            except ValueError:
                score = math.nan
            if not math.isfinite(score):
                raise GridEvaluationError(f"evaluator sent bad score {rest!r} for {desc}", point)
            return score
        if kind == "ERR":
            raise GridEvaluationError(f"evaluator error on {desc}: {rest}", point)
        raise GridEvaluationError(f"unexpected evaluator response {line.strip()!r} for {desc}", point)

    def close_run(self):
        proc, self._proc = self._proc, None
        if proc is None:
            return
        try:
            proc.stdin.close()
        except OSError:
            pass
        try:
            proc.wait(timeout=5)
        except subprocess.TimeoutExpired:
            proc.kill()
            proc.wait()


def external_objective(command, space: GridSpace, timeout: float = 600.0, maximize: bool = True) -> ExternalObjective:
    return ExternalObjective(command, space, timeout=timeout, maximize=maximize)


# ---------------------------------------------------------------------------
# tuning
# ---------------------------------------------------------------------------


@dataclass
class TuneResult:
    best_point: tuple
    best_score: float
    run_best_points: list
    run_best_scores: list
    first_hits: list
    metrics: Optional[SuccessMetrics]
    known_best: Optional[tuple] = None
    config: dict = field(default_factory=dict)

    @property
    def mean_best_score(self) -> float:
        return float(np.mean(self.run_best_scores))


def tune(
    space: GridSpace,
    objective: GridObjective,
    algorithm: str = "epistocracy",
    algo_config=None,
    runs: int = 1,
    base_seed: int = 0,
    jobs: int = 1,
    known_best: Optional[float] = None,
) -> TuneResult:
    """Search ``space`` with one of the optimizers over repeated runs.

    A run is a hit when it finds a point scoring ``known_best`` (for a
    table, the brute-force best unless given).  Without a known best no
    hit statistics are reported.
    """
    if objective.space != space:
        raise ConfigurationError("objective was built for a different grid")
    brute = None
    if known_best is None and isinstance(objective, TableObjective):
        brute, known_best = objective.best()
    target = None
    if known_best is not None:
        target = -known_best if objective.maximize else known_best
    stats = run_experiment(
        ExperimentConfig(
            algorithm, objective, algo_config, runs=runs, base_seed=base_seed, target=target, tolerance=0.0
        ),
        jobs=jobs,
    )
    sign = -1.0 if objective.maximize else 1.0
    points = [snap_to_grid(x, space) for x in stats.best_positions]
    scores = [sign * v for v in stats.finals]
    i = int(np.argmin(stats.finals))
    return TuneResult(
        best_point=points[i],
        best_score=scores[i],
        run_best_points=points,
        run_best_scores=scores,
        first_hits=stats.first_hits,
        metrics=stats.success(),
        known_best=brute,
        config=dict(stats.config, grid={n: list(l) for n, l in space.axes}),
    )
