"""Shared helpers for the test suite."""

import decimal
import math
from itertools import product

import numpy as np
import pytest

from ccto import (ChanceSpec, LinearChanceConstraint, SdlcsModel,
                  TrajectoryProblem, allocate_budget, encode, norm_cdf,
                  propagate_covariance)
from ccto.qp import INFEASIBLE, QpRelaxationEngine


def random_p_matrix(rng, n):
    """Random strictly diagonally dominant matrix with positive diagonal.

    Diagonal dominance with a positive diagonal implies every principal
    minor is positive, so the result is a P-matrix by construction.
    """
    F = rng.uniform(-1.0, 1.0, (n, n))
    np.fill_diagonal(F, 0.0)
    diag = np.abs(F).sum(axis=1) + rng.uniform(0.1, 1.0, n)
    return F + np.diag(diag)


def random_small_problem(rng):
    """A random well-scaled trajectory problem with N <= 4, n_c <= 2."""
    N = int(rng.integers(2, 5))
    n_x = int(rng.integers(1, 3))
    n_u = 1
    n_c = int(rng.integers(1, 3))
    A = rng.uniform(-0.4, 0.4, (n_x, n_x))
    np.fill_diagonal(A, rng.uniform(0.4, 0.9, n_x))
    B = rng.uniform(-1.0, 1.0, (n_x, n_u))
    C = rng.uniform(-0.5, 0.5, (n_x, n_c))
    D = rng.uniform(-1.0, 1.0, (n_c, n_x))
    E = rng.uniform(-1.0, 1.0, (n_c, n_u))
    F = random_p_matrix(rng, n_c)
    g = rng.uniform(-0.2, 0.2, n_x)
    h = rng.uniform(0.2, 1.0, n_c)
    sigma = 0.005
    model = SdlcsModel(
        A=A, B=B, C=C, D=D, E=E, F=F, g=g, h=h,
        W=np.zeros((n_x, n_x)), V=np.diag(np.full(n_c, sigma ** 2)),
        sigma_C=np.zeros((n_x, n_c)), sigma_F=np.zeros((n_c, n_c)),
        sigma_h=np.zeros(n_c),
    )
    a = np.zeros(n_x)
    a[0] = 1.0
    path = [LinearChanceConstraint(a=a, b=5.0, steps=range(N + 1),
                                   label="x0<=5")]
    chance = ChanceSpec(delta=0.2, path_constraints=path,
                        terminal_constraints=[], epsilon=0.1, big_m=5.0)
    return TrajectoryProblem(
        name="random", model=model, N=N,
        x_s=rng.uniform(-1.0, 1.0, n_x), Sigma_s=np.zeros((n_x, n_x)),
        Q=np.zeros((n_x, n_x)), R=0.1 * np.eye(n_u),
        u_bounds=[(-5.0, 5.0)] * n_u, lambda_u=5.0, chance=chance,
    )


def encode_problem(problem):
    budget = allocate_budget(problem.chance.delta, problem.N,
                             problem.model.n_c,
                             problem.chance.constraints_per_step)
    cov = propagate_covariance(problem)
    return encode(problem, budget, cov)


def enumerate_best_objective(mi):
    """Exhaustive oracle: best objective over all binary mode assignments."""
    engine = QpRelaxationEngine(mi)
    n_c = mi.var_map["n_c"]
    best = np.inf
    for modes in product((0, 1), repeat=len(mi.binary_pairs)):
        fixed = dict(enumerate(modes))
        if any(fixed[k * n_c + i] != mode
               for (k, i), mode in mi.forced_modes.items()):
            continue
        res = engine.solve(fixed)
        if res.status != INFEASIBLE:
            best = min(best, mi.objective_value(res.v))
    return best


def strip_noise(problem):
    """Copy of a problem with every covariance and parameter deviation zero."""
    m = problem.model
    noise_free = SdlcsModel.noise_free(A=m.A, B=m.B, C=m.C, D=m.D, E=m.E,
                                       F=m.F, g=m.g, h=m.h)
    return TrajectoryProblem(
        name=problem.name, model=noise_free, N=problem.N, x_s=problem.x_s,
        Sigma_s=np.zeros_like(problem.Sigma_s), Q=problem.Q, R=problem.R,
        u_bounds=problem.u_bounds, lambda_u=problem.lambda_u,
        chance=problem.chance, lambda_cov=problem.lambda_cov,
    )


def plan_to_vector(mi, plan):
    """Rebuild the flat MIQP variable vector from a PlanSolution."""
    v = np.empty(mi.n_vars)
    vm = mi.var_map
    v[: plan.x_mean.size] = plan.x_mean.reshape(-1)
    v[vm["u"]: vm["u"] + plan.u.size] = plan.u.reshape(-1)
    v[vm["lam"]: vm["lam"] + plan.lam.size] = plan.lam.reshape(-1)
    z0 = plan.z.reshape(-1).astype(float)
    z = np.empty(2 * z0.size)
    z[0::2] = z0
    z[1::2] = 1.0 - z0
    v[vm["z"]:] = z
    return v


def phi_bisection(p, tol=1e-12):
    """Independent quantile oracle: bisection on a series-evaluated Phi.

    Phi is computed through the Maclaurin series of erf, not through erfc,
    so the oracle shares no code path with the implementation under test.
    """
    lo, hi = -10.0, 10.0
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if phi_series(mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


_PI_60 = decimal.Decimal(
    "3.14159265358979323846264338327950288419716939937510582097494459")


def phi_series(x):
    # The alternating erf series cancels catastrophically in double
    # precision for |x| > 3, so it is summed in 60-digit decimals.
    with decimal.localcontext() as ctx:
        ctx.prec = 60
        z = decimal.Decimal(repr(x)) / decimal.Decimal(2).sqrt()
        term = z
        total = z
        n = 0
        limit = decimal.Decimal("1e-40")
        while abs(term) > limit:
            n += 1
            term *= -z * z / n
            total += term / (2 * n + 1)
        erf = 2 / _PI_60.sqrt() * total
        return float((1 + erf) / 2)


@pytest.fixture(scope="session")
def norm_cdf_fn():
    return norm_cdf
