"""Command-line entry point.

Subcommands
-----------
bench    one algorithm on one benchmark, repeated runs, summary row
compare  every algorithm x function pair, one summary row each
tune     search a discrete hyper-parameter grid (table or evaluator process)
trace    best-so-far traces of repeated runs

Settings are resolved as: explicit flag > ``--config`` file > built-in
default.  The seed falls back to ``EPISTOCRACY_SEED`` and then to 0.

Exit codes: 0 success, 1 usage error, 2 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import fields

from .baselines import GaConfig, PsoConfig
from .benchmarks import BENCHMARKS, parse_benchmark
from .core import ConfigurationError
from .harness import (
    ALGORITHMS,
    ExperimentConfig,
    default_tolerance,
    run_experiment,
    write_json,
    write_per_run_csv,
    write_summary_csv,
    write_trace_csv,
)
from .optimizer import EpistocracyConfig

DEFAULTS = {
    "algo": "epistocracy",
    "algos": "epistocracy,ga,pso",
    "function": "rastrigin",
    "functions": "eggholder,schaffer4,crossintray,griewank2,griewank5,rastrigin5",
    "dim": 2,
    "iters": 100,
    "runs": 100,
    "jobs": 1,
    "timeout_secs": 600.0,
}
# population default differs for grid tuning
POP_DEFAULT = {"tune": 20}

# epistocracy-only knobs and the shared genetic ones
EPI_FLAGS = ("governor_fraction", "phi", "space_resolution", "epsilon")
GENETIC_FLAGS = ("crossover_rate", "mutation_rate", "tournament_size")


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _add_algo_flags(p):
    g = p.add_argument_group("optimizer settings")
    g.add_argument("--pop", type=int, help="population size (default 100; 20 for tune)")
    g.add_argument("--iters", type=int, help="iterations per run (default 100)")
    g.add_argument("--governor-fraction", type=float, help="share of the population acting as governors (epistocracy)")
    g.add_argument("--phi", type=float, help="citizen step scale (epistocracy)")
    g.add_argument("--space-resolution", type=float, help="initial governor step as a share of the range (epistocracy)")
    g.add_argument("--epsilon", type=float, help="numerical floor (epistocracy)")
    g.add_argument("--crossover-rate", type=float, help="share of the population replaced by offspring (epistocracy, ga)")
    g.add_argument("--mutation-rate", type=float, help="per-offspring mutation probability (epistocracy, ga)")
    g.add_argument("--tournament-size", type=int, help="tournament size (epistocracy, ga)")


def _add_run_flags(p):
    g = p.add_argument_group("experiment")
    g.add_argument("--runs", type=int, help="independent runs (default 100)")
    g.add_argument("--seed", type=int, help="base seed; run i uses seed+i (default $EPISTOCRACY_SEED or 0)")
    g.add_argument("--jobs", type=int, help="worker processes; results do not depend on it (default 1)")
    g.add_argument("--config", help="key=value lines or a JSON object; explicit flags win")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="epistocracy", description="Epistocracy optimizer, baselines and benchmark harness.")
    sub = parser.add_subparsers(dest="command", metavar="{bench,compare,tune,trace}", parser_class=_Parser)
    sub.required = True
    benches = ", ".join(sorted(BENCHMARKS))

    p = sub.add_parser("bench", help="one algorithm on one benchmark")
    p.add_argument("--algo", choices=sorted(ALGORITHMS), help="algorithm (default epistocracy)")
    p.add_argument("--function", help=f"benchmark name or label such as rastrigin5 ({benches})")
    p.add_argument("--dim", type=int, help="dimension when the label has none (default 2)")
    p.add_argument("--out", help="summary file (.json for JSON, otherwise CSV); stdout if omitted")
    p.add_argument("--trace-out", help="write best-so-far traces as CSV")
    p.add_argument("--per-run-out", help="write per-run final bests as CSV")
    _add_algo_flags(p)
    _add_run_flags(p)

    p = sub.add_parser("compare", help="algorithms x functions summary table")
    p.add_argument("--algos", help="comma-separated algorithms (default epistocracy,ga,pso)")
    p.add_argument("--functions", help="comma-separated benchmark labels")
    p.add_argument("--dim", type=int, help="dimension for labels without one (default 2)")
    p.add_argument("--out", help="summary file (.json for JSON, otherwise CSV); stdout if omitted")
    p.add_argument("--trace-out", help="trace CSV; one file per pair, suffixed _<function>_<algo>")
    p.add_argument("--per-run-out", help="write per-run final bests as CSV")
    _add_algo_flags(p)
    _add_run_flags(p)

    p = sub.add_parser("tune", help="search a hyper-parameter grid")
    p.add_argument("--grid", help="grid file with 'name: v1, v2, ...' lines")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--table", help="CSV with every grid point and its score")
    src.add_argument("--evaluator", help="command speaking the EVAL/OK/ERR line protocol")
    p.add_argument("--algo", choices=sorted(ALGORITHMS), help="algorithm (default epistocracy)")
    p.add_argument("--minimize", action="store_true", default=None, help="treat scores as costs instead of maximizing them")
    p.add_argument("--known-best", type=float, help="score counted as a hit (default: table maximum)")
    p.add_argument("--timeout-secs", type=float, help="evaluator response timeout (default 600)")
    p.add_argument("--out", help="JSON result file; stdout if omitted")
    _add_algo_flags(p)
    _add_run_flags(p)

    p = sub.add_parser("trace", help="best-so-far trace export")
    p.add_argument("--algo", choices=sorted(ALGORITHMS), help="algorithm (default epistocracy)")
    p.add_argument("--function", help=f"benchmark label ({benches})")
    p.add_argument("--dim", type=int, help="dimension when the label has none (default 2)")
    p.add_argument("--out", help="trace CSV; stdout if omitted")
    _add_algo_flags(p)
    _add_run_flags(p)
    return parser


def load_config_file(path) -> dict:
    """``key=value`` lines (``#`` comments allowed) or one JSON object."""
    try:
        with open(path) as fh:
            text = fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read config {path}: {exc.strerror}") from None
    if text.lstrip().startswith("{"):
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise UsageError(f"{path}: invalid JSON: {exc}") from None
    else:
        data = {}
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected key=value")
            data[key.strip()] = value.strip()
    return {k.replace("-", "_"): v for k, v in data.items()}


def _resolve(args, parser) -> dict:
    """Merge flags, config file and defaults into one settings dict."""
    opts = {k: v for k, v in vars(args).items() if k not in ("command", "config")}
    if args.config:
        cfg = load_config_file(args.config)
        unknown = sorted(set(cfg) - set(opts))
        if unknown:
            raise UsageError(f"unknown config key(s): {', '.join(unknown)}")
        for k, v in cfg.items():
            if opts[k] is None:
                opts[k] = v
    for k, v in DEFAULTS.items():
        if k in opts and opts[k] is None:
            opts[k] = v
    if opts.get("pop") is None:
        opts["pop"] = POP_DEFAULT.get(args.command, 100)
    if opts.get("seed") is None:
        opts["seed"] = os.environ.get("EPISTOCRACY_SEED", 0)
    # config-file values arrive as strings; coerce through the parser's types
    for action in parser._subparsers._group_actions[0].choices[args.command]._actions:
        k = action.dest
        if k in opts and isinstance(opts[k], str) and action.type not in (None, str):
            try:
                opts[k] = action.type(opts[k])
            except ValueError:
                raise UsageError(f"invalid value for {k}: {opts[k]!r}") from None
    try:
        opts["seed"] = int(opts["seed"])
    except (TypeError, ValueError):
        raise UsageError(f"invalid seed {opts['seed']!r}") from None
    for k in ("runs", "jobs", "pop"):
        if opts.get(k) is not None and int(opts[k]) < 1:
            raise UsageError(f"--{k} must be at least 1")
    if opts["seed"] < 0:
        raise UsageError("--seed must be non-negative")
    return opts


def algo_config(algo: str, opts: dict):
    common = {"population_size": opts["pop"], "iterations": opts["iters"]}
    if algo == "epistocracy":
        keys = EPI_FLAGS + GENETIC_FLAGS
        cls = EpistocracyConfig
    elif algo == "ga":
        keys = GENETIC_FLAGS
        cls = GaConfig
    else:
        keys, cls = (), PsoConfig
    names = {f.name for f in fields(cls)}
    extra = {k: opts[k] for k in keys if opts.get(k) is not None and k in names}
    return cls(**common, **extra)


def _experiment(algo, label, opts, keep_traces=True):
    bid = parse_benchmark(label, opts["dim"])
    target = BENCHMARKS[bid.name].optimum
    return ExperimentConfig(
        algo,
        bid,
        algo_config(algo, opts),
        runs=opts["runs"],
        base_seed=opts["seed"],
        target=target,
        tolerance=default_tolerance(target),
        keep_traces=keep_traces,
    )


def _summary_line(s) -> str:
    return (
        f"{s.function} {s.algorithm}: min={s.min:.6g} max={s.max:.6g} "
        f"mean={s.mean:.6g} std={s.std:.6g} ({s.runs} runs)"
    )


def _write_summary(stats, out):
    if out is None:
        write_summary_csv(stats, sys.stdout)
    elif out.endswith(".json"):
        write_json(stats, out)
    else:
        write_summary_csv(stats, out)


def _trace_path(base, s, many):
    if not many:
        return base
    stem, ext = os.path.splitext(base)
    return f"{stem}_{s.function}_{s.algorithm}{ext or '.csv'}"


def cmd_bench(opts):
    s = run_experiment(_experiment(opts["algo"], opts["function"], opts), jobs=opts["jobs"])
    if opts["out"] is not None:
        _write_summary([s], opts["out"])
    if opts["trace_out"]:
        write_trace_csv(s, opts["trace_out"])
    if opts["per_run_out"]:
        write_per_run_csv([s], opts["per_run_out"])
    print(_summary_line(s))
    if opts["out"] is None:
        _write_summary([s], None)


def _split(text):
    return [t.strip() for t in text.split(",") if t.strip()]


def cmd_compare(opts):
    algos = _split(opts["algos"])
    bad = [a for a in algos if a not in ALGORITHMS]
    if bad:
        raise UsageError(f"unknown algorithm(s): {', '.join(bad)}")
    labels = _split(opts["functions"])
    for lb in labels:
        parse_benchmark(lb, opts["dim"])
    stats = []
    for lb in labels:
        for a in algos:
            s = run_experiment(_experiment(a, lb, opts, keep_traces=bool(opts["trace_out"])), jobs=opts["jobs"])
            print(_summary_line(s))
            stats.append(s)
    if opts["out"] is not None:
        _write_summary(stats, opts["out"])
    if opts["trace_out"]:
        for s in stats:
            write_trace_csv(s, _trace_path(opts["trace_out"], s, len(stats) > 1))
    if opts["per_run_out"]:
        write_per_run_csv(stats, opts["per_run_out"])
    if opts["out"] is None:
        _write_summary(stats, None)


def cmd_trace(opts):
    s = run_experiment(_experiment(opts["algo"], opts["function"], opts), jobs=opts["jobs"])
    write_trace_csv(s, opts["out"] or sys.stdout)


def cmd_tune(opts):
    from .gridtuner import external_objective, parse_grid_file, table_objective, tune

    if not opts["grid"]:
        raise UsageError("tune needs --grid")
    if not (opts["table"] or opts["evaluator"]):
        raise UsageError("tune needs --table or --evaluator")
    space = parse_grid_file(opts["grid"])
    maximize = not opts["minimize"]
    if opts["table"]:
        obj = table_objective(opts["table"], space, maximize=maximize)
    else:
        obj = external_objective(opts["evaluator"], space, timeout=opts["timeout_secs"], maximize=maximize)
    r = tune(
        space,
        obj,
        opts["algo"],
        algo_config(opts["algo"], opts),
        runs=opts["runs"],
        base_seed=opts["seed"],
        jobs=opts["jobs"],
        known_best=opts["known_best"],
    )
    m = r.metrics
    result = {
        "best_point": dict(zip(space.names, r.best_point)),
        "best_score": r.best_score,
        "mean_best_score": r.mean_best_score,
        "known_best_point": None if r.known_best is None else dict(zip(space.names, r.known_best)),
        "hit_rate": None if m is None else m.hit_rate,
        "avg_hit_iteration": None if m is None else m.avg_hit_iteration,
        "first_hits": r.first_hits,
        "run_best_scores": r.run_best_scores,
        "config": r.config,
    }
    text = json.dumps(result, indent=2, sort_keys=True) + "\n"
    if opts["out"]:
        with open(opts["out"], "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    hits = "n/a" if m is None else f"{m.hit_rate:.0%}"
    avg = "n/a" if m is None or m.avg_hit_iteration is None else f"{m.avg_hit_iteration:.2f}"
    print(
        f"tune {opts['algo']}: best {space.format_point(r.best_point)} score={r.best_score:.6g} "
        f"hit_rate={hits} avg_hit_iteration={avg}",
        file=sys.stderr if not opts["out"] else sys.stdout,
    )


COMMANDS = {"bench": cmd_bench, "compare": cmd_compare, "tune": cmd_tune, "trace": cmd_trace}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        opts = _resolve(args, parser)
        COMMANDS[args.command](opts)
    except (UsageError, ConfigurationError) as exc:
        print(f"epistocracy {args.command}: error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:
        print(f"epistocracy {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
