# %% [markdown]
# # Benchmarks and Latin hypercube starts
#
# The benchmark functions take one point or a batch and return plain floats
# or arrays, so a landscape can be scanned in one call.

# %%
import numpy as np

from epistocracy import BENCHMARKS, LhsPlan, lhs_sample, make_benchmark, make_rng

for name, entry in BENCHMARKS.items():
    print(f"{name:12s} domain [{entry.low}, {entry.high}]  optimum {entry.optimum:.6f}")

# %%
egg = make_benchmark("eggholder")
xs = np.linspace(-512, 512, 401)
grid = np.stack(np.meshgrid(xs, xs), axis=-1).reshape(-1, 2)
values = egg.evaluate_many(grid)
i = np.argmin(values)
print("coarse scan best", grid[i], values[i])
print("share of the box within 25 of the optimum:", np.mean(values < egg.optimum + 25))

# %% [markdown]
# Initial populations are Latin hypercube samples: every axis is cut into
# `n` strata and each stratum holds exactly one point.

# %%
plan = LhsPlan(8, egg.bounds)
X = lhs_sample(plan, make_rng(1))
strata = ((X - egg.bounds.lower) / egg.bounds.width * 8).astype(int)
print(X.round(1))
print("strata per axis:", sorted(strata[:, 0].tolist()), sorted(strata[:, 1].tolist()))
