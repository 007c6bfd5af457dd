import numpy as np
import pytest

from epistocracy.baselines import GaConfig, PsoConfig, pso_velocity, run_ga, run_pso
from epistocracy.benchmarks import make_benchmark
from epistocracy.core import ConfigurationError, ObjectiveSpec, make_rng


def test_ga_sphere_smoke():
    rec = run_ga(make_benchmark("sphere", 2), GaConfig(), make_rng(0, 2))
    assert rec.best_value <= 1e-2
    assert np.all(np.diff(rec.trace) <= 0)


def test_pso_sphere_smoke():
    rec = run_pso(make_benchmark("sphere", 2), PsoConfig(), make_rng(0, 2))
    assert rec.best_value <= 1e-6


@pytest.mark.parametrize("runner, cfg", [(run_ga, GaConfig(iterations=0)), (run_pso, PsoConfig(iterations=0))])
def test_zero_iterations(runner, cfg):
    obj = make_benchmark("rastrigin", 3)
    rec = runner(obj, cfg, make_rng(1))
    assert rec.trace.shape == (1,) and rec.best_value == obj(rec.best_position)


def test_pso_velocity_rule():
    x = np.array([1.0, 2.0])
    np.testing.assert_array_equal(pso_velocity(np.zeros(2), x, x, x, 0.7, 1.5, 1.5, 0.3, 0.9), [0, 0])
    v = pso_velocity(np.array([1.0, 0.0]), x, np.zeros(2), np.zeros(2), 0.7, 0.0, 0.0, 0.5, 0.5)
    np.testing.assert_allclose(v, [0.7, 0.0], atol=1e-15)


@pytest.mark.parametrize("runner, cfg", [(run_ga, GaConfig(iterations=25)), (run_pso, PsoConfig(iterations=25))])
def test_bounds_monotone_and_determinism(runner, cfg):
    base = make_benchmark("eggholder")
    seen = []
    spy = ObjectiveSpec(base.bounds, lambda x: seen.append(np.array(x)) or base(x))
    a = runner(spy, cfg, make_rng(4, 2))
    assert all(base.bounds.contains(x) for x in seen)
    assert np.all(np.diff(a.trace) <= 0)
    b = runner(base, cfg, make_rng(4, 2))
    np.testing.assert_array_equal(a.trace, b.trace)


def test_config_validation():
    with pytest.raises(ConfigurationError):
        GaConfig(crossover_rate=1.5)
    with pytest.raises(ConfigurationError):
        GaConfig(population_size=3, tournament_size=5)
    with pytest.raises(ConfigurationError):
        PsoConfig(inertia=1.0)
    with pytest.raises(ConfigurationError):
        PsoConfig(cognitive=-1.0)
