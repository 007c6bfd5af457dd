# %% [markdown]
# # Epistocracy vs GA vs PSO
#
# Same budget for everyone: population 100, 100 iterations.  Runs use
# seeds `base_seed + i`.  Twenty runs per cell keeps this demo under a
# minute; the acceptance suite uses 100.

# %%
from epistocracy import BenchmarkId, ExperimentConfig, run_experiment
from epistocracy.harness import write_summary_csv
import sys

cells = []
for fn in (BenchmarkId("crossintray"), BenchmarkId("griewank", 2), BenchmarkId("rastrigin", 5)):
    for algo in ("epistocracy", "ga", "pso"):
        s = run_experiment(ExperimentConfig(algo, fn, runs=20, base_seed=7, keep_traces=False))
        cells.append(s)
        print(f"{s.function:12s} {algo:12s} mean {s.mean: .6g}  std {s.std:.3g}")

# %%
write_summary_csv(cells, sys.stdout)

# %% [markdown]
# Success rates need a target.  Here a run counts as a hit when its best is
# within 1e-4 of the Rastrigin optimum.

# %%
from epistocracy import success_metrics

s = run_experiment(ExperimentConfig("epistocracy", BenchmarkId("rastrigin", 5), runs=20, base_seed=7))
m = success_metrics(s.traces, 0.0, 1e-4)
print(f"hit rate {m.hit_rate:.0%}, first hit on average at iteration {m.avg_hit_iteration}")
