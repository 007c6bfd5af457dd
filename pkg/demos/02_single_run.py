# %% [markdown]
# # One Epistocracy run, step by step
#
# A run returns the best-so-far trace, the best point and a per-iteration
# diagnostic: how many citizens follow the strongest governor.

# %%
import numpy as np

from epistocracy import EpistocracyConfig, make_benchmark, make_rng, run_epistocracy

obj = make_benchmark("rastrigin", 5)
cfg = EpistocracyConfig(seed=3)
rec = run_epistocracy(obj, cfg, make_rng(3, 1))

print("best value", rec.best_value)
print("best point", rec.best_position.round(6))
print("evaluations", rec.evaluations)

# %%
for it in (0, 1, 5, 10, 25, 50, 100):
    print(f"iteration {it:3d}: best {rec.trace[it]:.6g}")

# %% [markdown]
# With five governors an even split would give each a 0.2 share.  The
# mass floor keeps the leader's pull close to that.

# %%
share = rec.extra["leader_share"]
print("mean leader share", share.mean().round(3), "last 10", share[-10:].round(2))

# %%
# A floor of 1e-9 makes the best governor dominate the roulette.
heavy = run_epistocracy(obj, EpistocracyConfig(mass_epsilon=1e-9), make_rng(3, 1))
print("leader share with a 1e-9 floor", heavy.extra["leader_share"].mean().round(3))
print("final best with a 1e-9 floor", heavy.best_value)
