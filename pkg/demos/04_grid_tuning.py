# %% [markdown]
# # Tuning a discrete hyper-parameter grid
#
# Four CNN hyper-parameters, 480 combinations.  The optimizers move in
# index space and every position is snapped to the nearest grid point.
# Real accuracies would come from training; here a synthetic table stands
# in, with its best at filters 28, size 6, 50 neurons, dropout 0.3.

# %%
from epistocracy.gridtuner import MNIST_GRID, TableObjective, enumerate_grid, snap_to_grid, synthetic_table, tune
from epistocracy import EpistocracyConfig, GaConfig, PsoConfig

print(MNIST_GRID.size, "grid points")
print("index position (4.2, 2.5, 0.1, 1.6) ->", snap_to_grid([4.2, 2.5, 0.1, 1.6], MNIST_GRID))

table = TableObjective(MNIST_GRID, synthetic_table(seed=0))
print("brute-force best", table.best())

# %%
configs = {
    "epistocracy": EpistocracyConfig(population_size=20, governor_fraction=0.10),
    "ga": GaConfig(population_size=20),
    "pso": PsoConfig(population_size=20),
}
for algo, cfg in configs.items():
    r = tune(MNIST_GRID, table, algo, cfg, runs=30, base_seed=1)
    print(f"{algo:12s} hit rate {r.metrics.hit_rate:.0%}  avg first hit {r.metrics.avg_hit_iteration:.2f}")

# %% [markdown]
# ## External evaluators
#
# Any program that reads `EVAL <run> <iteration> name=value ...` lines and
# answers `OK <score>` can be plugged in.  This one scores by distance
# from a target point.  Each grid point is asked for at most once per run.

# %%
import sys
import tempfile
from pathlib import Path

from epistocracy.gridtuner import external_objective

script = Path(tempfile.mkdtemp()) / "evaluator.py"
script.write_text(
    "import sys\n"
    "target = {'filter_number': 24, 'filter_size': 5, 'neuron_size': 100, 'dropout_rate': 0.2}\n"
    "for line in sys.stdin:\n"
    "    kv = dict(t.split('=') for t in line.split()[3:])\n"
    "    print('OK', -sum(abs(float(kv[k]) - v) / v for k, v in target.items()), flush=True)\n"
)
obj = external_objective([sys.executable, str(script)], MNIST_GRID, timeout=30)
r = tune(MNIST_GRID, obj, "epistocracy", EpistocracyConfig(population_size=20, iterations=30), runs=3)
print("best point", dict(zip(MNIST_GRID.names, r.best_point)), "score", r.best_score)
print("distinct points scored in the last run:", obj.exchanges, "of", len(enumerate_grid(MNIST_GRID)))
