"""Monte Carlo validation layer: determinism, substreams, edge cases."""

import numpy as np
import pytest

from ccto import (draw_parameters, estimate_violation, rollout, solve_problem,
                  trial_rng)
from ccto.montecarlo import worker_count
from conftest import random_small_problem, strip_noise


@pytest.fixture(scope="module")
def small_solved():
    rng = np.random.default_rng(123)
    problem = random_small_problem(rng)
    result = solve_problem(problem)
    return problem, result.plan


def test_trial_rng_substreams():
    a = trial_rng(0, 1).standard_normal(4)
    b = trial_rng(0, 1).standard_normal(4)
    c = trial_rng(0, 2).standard_normal(4)
    d = trial_rng(1, 1).standard_normal(4)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, c)
    assert not np.array_equal(a, d)


def test_draw_parameters_shapes(small_solved):
    problem, _ = small_solved
    draw = draw_parameters(problem.model, trial_rng(0, 0))
    assert draw.C.shape == problem.model.C.shape
    assert draw.F.shape == problem.model.F.shape
    assert draw.h.shape == problem.model.h.shape
    # This problem has no parameter noise, so the draw is the nominal model.
    assert np.array_equal(draw.F, problem.model.F)


def test_estimate_violation_deterministic(small_solved):
    problem, plan = small_solved
    a = estimate_violation(problem, plan, trials=50, seed=3)
    b = estimate_violation(problem, plan, trials=50, seed=3)
    assert a.violations == b.violations
    assert a.per_constraint == b.per_constraint
    assert a.obtained_delta == b.obtained_delta


def test_single_trial_is_binary(small_solved):
    problem, plan = small_solved
    rep = estimate_violation(problem, plan, trials=1, seed=0)
    assert rep.obtained_delta in (0.0, 1.0)


def test_trials_validation(small_solved):
    problem, plan = small_solved
    with pytest.raises(ValueError):
        estimate_violation(problem, plan, trials=0, seed=0)


def test_noise_free_rollout_matches_plan():
    rng = np.random.default_rng(321)
    problem = strip_noise(random_small_problem(rng))
    result = solve_problem(problem)
    sample = draw_parameters(problem.model, trial_rng(0, 0))
    out = rollout(problem, result.plan, sample, trial_rng(0, 0))
    assert not out.violated
    assert np.max(np.abs(out.states - result.plan.x_mean)) <= 1e-6
    rep = estimate_violation(problem, result.plan, trials=20, seed=0)
    assert rep.obtained_delta == 0.0


def test_rollout_shape_validation(small_solved):
    problem, plan = small_solved
    bad = type(plan)(x_mean=plan.x_mean, u=plan.u[:-1], lam=plan.lam,
                     z=plan.z, objective=plan.objective)
    sample = draw_parameters(problem.model, trial_rng(0, 0))
    with pytest.raises(ValueError):
        rollout(problem, bad, sample, trial_rng(0, 0))


def test_ci_and_counts(small_solved):
    problem, plan = small_solved
    rep = estimate_violation(problem, plan, trials=100, seed=1)
    assert 0.0 <= rep.obtained_delta <= 1.0
    assert rep.ci95 >= 0.0
    # Every violated trial breaks at least one constraint.
    assert sum(rep.per_constraint.values()) >= rep.violations


def test_worker_count_env(monkeypatch):
    monkeypatch.delenv("CCTO_THREADS", raising=False)
    assert worker_count() == 1
    monkeypatch.setenv("CCTO_THREADS", "4")
    assert worker_count() == 4
    monkeypatch.setenv("CCTO_THREADS", "garbage")
    assert worker_count() == 1
    monkeypatch.setenv("CCTO_THREADS", "-2")
    assert worker_count() == 1
