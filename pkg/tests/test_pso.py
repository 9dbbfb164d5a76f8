import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dgopt.pso import PsoParams, inertia, run_pso

LO6, HI6 = -5 * np.ones(6), 5 * np.ones(6)


def sphere(x):
    return float(np.sum(np.asarray(x) ** 2))


class Recorder:
    def __init__(self):
        self.batches = []

    def many(self, X):
        self.batches.append(np.asarray(X).copy())
        return np.sum(np.asarray(X) ** 2, axis=1)


def test_sphere():
    trace = run_pso(PsoParams(seed=0), sphere, LO6, HI6)
    assert len(trace) == 35
    assert trace.final <= 1e-2
    assert trace.is_monotone()


def test_frozen_swarm_keeps_best_initial_sample():
    params = PsoParams(c1=0.0, c2=0.0, inertia_mode="constant", omega=0.0, population=12, seed=3)
    obj = Recorder()
    trace = run_pso(params, obj, LO6, HI6)
    first = obj.batches[0]
    for later in obj.batches[1:]:
        np.testing.assert_array_equal(later, first)
    assert trace.final == np.sum(first**2, axis=1).min()
    assert len(set(trace.best_objective)) == 1


def test_same_seed_same_trace():
    a = run_pso(PsoParams(seed=9, population=20), sphere, LO6, HI6)
    b = run_pso(PsoParams(seed=9, population=20), sphere, LO6, HI6)
    assert a.best_objective == b.best_objective
    np.testing.assert_array_equal(a.best_x, b.best_x)


def test_inertia_schedule():
    p = PsoParams(iterations=35)
    assert inertia(1, p) == pytest.approx(0.9)
    assert inertia(35, p) == pytest.approx(0.4)
    assert inertia(18, p) == pytest.approx(0.65)
    assert inertia(7, PsoParams(inertia_mode="constant")) == 0.78


def test_evaluation_budget():
    trace = run_pso(PsoParams(population=10, iterations=5), sphere, LO6, HI6)
    assert trace.evaluations == [20, 30, 40, 50, 60]


@given(st.integers(0, 10_000))
@settings(max_examples=15, deadline=None)
def test_bounds_velocity_and_pbest(seed):
    lo = np.array([0.0, 2.0, -1.0])
    hi = np.array([2500.0, 33.0, 1.0])
    params = PsoParams(seed=seed, population=10, iterations=10)
    obj = Recorder()
    run_pso(params, obj, lo, hi)
    X = np.stack(obj.batches)  # (iterations + 1, n, d)
    assert np.all((X >= lo) & (X <= hi))
    step = np.abs(np.diff(X, axis=0))
    assert np.all(step <= params.v_clamp_fraction * (hi - lo) * (1 + 1e-12))
    f = np.sum(X**2, axis=2)
    pbest = np.minimum.accumulate(f, axis=0)
    assert np.all(np.diff(pbest, axis=0) <= 0)


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(c1=-1.0),
        dict(w_min=0.0),
        dict(w_min=0.9, w_max=0.4),
        dict(v_clamp_fraction=0.0),
        dict(v_clamp_fraction=1.5),
        dict(inertia_mode="chaotic"),
        dict(population=0),
    ],
)
def test_invalid_params(kwargs):
    with pytest.raises(ValueError):
        PsoParams(**kwargs)
