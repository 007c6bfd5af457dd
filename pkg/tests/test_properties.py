import numpy as np
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from epistocracy.benchmarks import sphere
from epistocracy.core import Bounds, Individual, ObjectiveSpec, make_rng, rank
from epistocracy.gridtuner import GridSpace, enumerate_grid, snap_indices, snap_to_grid
from epistocracy.harness import success_metrics
from epistocracy.optimizer import (
    adjust_performance,
    fit_regression,
    governor_step,
    selection_probabilities,
    vote_weight,
    weighted_avg_improvement,
)
from epistocracy.sampling import LhsPlan, clamp_to_bounds, lhs_sample

finite = st.floats(-1e6, 1e6, allow_nan=False)
seeds = st.integers(0, 2**32 - 1)


@st.composite
def boxes(draw, max_dim=6):
    dim = draw(st.integers(1, max_dim))
    lo = np.array(draw(st.lists(st.floats(-1e3, 1e3), min_size=dim, max_size=dim)))
    width = np.array(draw(st.lists(st.floats(1e-2, 1e3), min_size=dim, max_size=dim)))
    return Bounds(lo, lo + width)


@given(boxes(), st.integers(1, 200), seeds)
def test_lhs_marginal_stratification(bounds, n, seed):
    X = lhs_sample(LhsPlan(n, bounds), make_rng(seed))
    assert X.shape == (n, bounds.dim)
    assert (X >= bounds.lower).all() and (X <= bounds.upper).all()
    # each stratum [lo + k*w/n, lo + (k+1)*w/n] holds exactly one sample
    edges = bounds.lower + np.arange(n + 1)[:, None] * bounds.width / n
    for d in range(bounds.dim):
        xs = np.sort(X[:, d])
        assert np.all(xs >= edges[:-1, d] - 1e-9 * bounds.width[d])
        assert np.all(xs <= edges[1:, d] + 1e-9 * bounds.width[d])


@given(boxes(), st.data())
def test_clamp_idempotent_and_inside(bounds, data):
    x = np.array(data.draw(st.lists(st.floats(-1e4, 1e4), min_size=bounds.dim, max_size=bounds.dim)))
    once = clamp_to_bounds(x, bounds)
    assert bounds.contains(once)
    np.testing.assert_array_equal(clamp_to_bounds(once, bounds), once)


@given(st.lists(st.sampled_from([-3.0, 0.0, 1.5, 2.0, 1e3]), min_size=1, max_size=40))
def test_rank_is_stable_permutation(perfs):
    order = rank(perfs)
    assert sorted(order) == list(range(len(perfs)))
    ranked = [perfs[i] for i in order]
    assert ranked == sorted(perfs)
    for a, b in zip(order, order[1:]):
        if perfs[a] == perfs[b]:
            assert a < b


@given(arrays(float, st.integers(2, 12), elements=st.floats(1e-6, 1e6)))
def test_probabilities_sum_to_one(forces):
    p = selection_probabilities(forces)
    assert abs(p.sum() - 1.0) <= 1e-12 and (p >= 0).all()


@given(arrays(float, st.integers(2, 12), elements=st.floats(1e-6, 1e6)), st.floats(1e-6, 1e6))
def test_force_scaling_invariance(forces, c):
    np.testing.assert_allclose(selection_probabilities(forces * c), selection_probabilities(forces), rtol=0, atol=1e-12)


@settings(max_examples=200)
@given(
    st.integers(2, 12).flatmap(
        lambda n: st.tuples(
            arrays(float, n, elements=st.floats(-100, 100)), arrays(float, n, elements=st.floats(-1e3, 1e3))
        )
    )
)
def test_regression_matches_lstsq(data):
    x, y = data
    coef = fit_regression(x, y)
    if np.ptp(x) < 1e-6:
        return
    A = np.column_stack([np.ones_like(x), x])
    ref, *_ = np.linalg.lstsq(A, y, rcond=None)
    scale = 1 + np.abs(ref).max() + np.abs(y).max()
    np.testing.assert_allclose(coef, ref, atol=1e-10 * scale, rtol=0)


@given(finite, st.integers(0, 50), st.integers(1, 100), st.integers(2, 10))
def test_no_change_when_prediction_matches(p, s, extra, n):
    assert adjust_performance(p, p, s, s + extra, n) == p


@given(
    st.integers(1, 8).flatmap(
        lambda n: st.tuples(
            arrays(float, n, elements=st.floats(1e-3, 10)),
            arrays(float, n, elements=st.floats(-50, 50)),
            arrays(float, n, elements=st.floats(-50, 50)),
        )
    ),
    st.floats(0.1, 20),
)
def test_weighted_average_ignores_log_base(data, base):
    d, p, I = data
    w = vote_weight(d, d.sum(), p, 0.5)
    w = np.atleast_1d(w)
    rescaled = w * np.log(10) / np.log(base + 1.01)
    np.testing.assert_allclose(weighted_avg_improvement(I, rescaled), weighted_avg_improvement(I, w), rtol=1e-9, atol=1e-9)


@given(st.floats(-4, 4), st.floats(-2, 2).filter(lambda s: abs(s) > 1e-6), st.floats(0.1, 3), st.floats(0.1, 3))
def test_governor_never_accepts_worse(x0, step, ratio, var):
    obj = ObjectiveSpec(Bounds.uniform(-5, 5, 1), sphere)
    g = Individual([x0], actual_perf=x0 * x0, role="governor", prev_step=np.array([step]))
    governor_step(g, ratio, 1.0, var, obj)
    assert g.actual_perf <= g.prev_perf
    assert -5 <= g.position[0] <= 5


@st.composite
def grids(draw):
    axes = []
    for k in range(draw(st.integers(1, 4))):
        levels = sorted(set(draw(st.lists(st.integers(-50, 50), min_size=2, max_size=6))))
        if len(levels) < 2:
            levels = [0, 1]
        axes.append((f"x{k}", tuple(levels)))
    return GridSpace(tuple(axes))


@given(grids(), st.data())
def test_snap_idempotent_and_on_grid(space, data):
    x = np.array(data.draw(st.lists(st.floats(-3, 10), min_size=len(space.axes), max_size=len(space.axes))))
    p = snap_to_grid(x, space)
    assert p in set(enumerate_grid(space))
    idx = np.array(snap_indices(x, space), dtype=float)
    assert snap_to_grid(idx, space) == p


@given(
    st.lists(st.lists(st.floats(0, 10), min_size=3, max_size=3), min_size=1, max_size=10),
    st.floats(0, 5),
    st.floats(0, 5),
)
def test_hit_rate_monotone_in_tolerance(raw, t1, t2):
    traces = [np.minimum.accumulate(tr) for tr in raw]
    lo, hi = sorted((t1, t2))
    assert success_metrics(traces, 0.0, lo).hit_rate <= success_metrics(traces, 0.0, hi).hit_rate
