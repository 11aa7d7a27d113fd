"""Monte Carlo validation of planned trajectories.

Each trial redraws the uncertain model (C, F, h entries once per trial;
additive state and complementarity noise per step), replays the planned
control sequence, and re-solves the complementarity system at every step.
Violation is checked on realized states against the nominal constraint
bounds; the tightening is the planner's margin, not the plant's constraint.
"""

import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import NoSolution
from .lcp import LcpInstance, solve_lcp
from .miqp import PlanSolution
from .models import SdlcsModel, TrajectoryProblem


@dataclass(eq=False)
class ParameterDraw:
    """One trial's sampled model perturbations."""

    C: np.ndarray
    F: np.ndarray
    h: np.ndarray


@dataclass(eq=False)
class TrialOutcome:
    states: np.ndarray
    violated: bool
    first_violation: tuple = None  # (step, constraint label)
    lcp_failures: int = 0


@dataclass(eq=False)
class MonteCarloReport:
    trials: int
    violations: int
    per_constraint: dict
    seed: int
    lcp_failures: int = 0

    @property
    def obtained_delta(self) -> float:
        return self.violations / self.trials

    @property
    def ci95(self) -> float:
        p = self.obtained_delta
        return 1.96 * math.sqrt(p * (1.0 - p) / self.trials)


def trial_rng(seed: int, trial: int) -> np.random.Generator:
    """Counter-based substream: Philox keyed on (seed, trial index).

    Streams are independent across trials, so results do not depend on
    execution order and parallel runs match sequential ones bit for bit.
    """
    return np.random.Generator(np.random.Philox(key=[seed & 0xFFFFFFFFFFFFFFFF,
                                                     trial]))


def draw_parameters(model: SdlcsModel, rng: np.random.Generator) -> ParameterDraw:
    """Sample one trial's stochastic C, F, and offset entries."""
    C = model.C + rng.standard_normal(model.C.shape) * model.sigma_C
    F = model.F + rng.standard_normal(model.F.shape) * model.sigma_F
    h = model.h + rng.standard_normal(model.h.shape) * model.sigma_h
    return ParameterDraw(C=C, F=F, h=h)


def rollout(problem: TrajectoryProblem, plan: PlanSolution,
            sample: ParameterDraw, rng: np.random.Generator,
            lcp_tol: float = 1e-9) -> TrialOutcome:
    """Roll the SDLCS forward under one sampled model.

    At each step the LCP (F_sampled, D x + E u + h + v) supplies the forces,
    then the state advances through the sampled dynamics.  A failed LCP
    solve marks the trial violated (counting it as a success would bias the
    violation estimate downward).
    """
    m = problem.model
    N = problem.N
    if plan.u.shape != (N, m.n_u):
        raise ValueError(
            f"plan controls have shape {plan.u.shape}, expected {(N, m.n_u)}"
        )
    x = np.empty((N + 1, m.n_x))
    if np.any(problem.Sigma_s):
        L = np.linalg.cholesky(
            problem.Sigma_s + 1e-15 * np.eye(m.n_x)
        )
        x[0] = problem.x_s + L @ rng.standard_normal(m.n_x)
    else:
        x[0] = problem.x_s

    w_std = np.sqrt(np.diag(m.W))
    v_std = np.sqrt(np.diag(m.V))
    lcp_failures = 0
    for k in range(N):
        v_k = rng.standard_normal(m.n_c) * v_std
        w_k = rng.standard_normal(m.n_x) * w_std
        q = m.D @ x[k] + m.E @ plan.u[k] + sample.h + v_k
        try:
            sol = solve_lcp(LcpInstance(F=sample.F, q=q), tol=lcp_tol)
            lam = sol.lam
        except NoSolution:
            lcp_failures += 1
            states = x[: k + 1]
            return TrialOutcome(states=states, violated=True,
                                first_violation=(k, "lcp_failure"),
                                lcp_failures=lcp_failures)
        x[k + 1] = m.A @ x[k] + m.B @ plan.u[k] + sample.C @ lam + m.g + w_k

    violated = False
    first = None
    for con in problem.all_constraints():
        for k in con.steps:
            if float(con.a @ x[k]) > con.b:
                violated = True
                if first is None or k < first[0]:
                    first = (k, con.label)
    return TrialOutcome(states=x, violated=violated, first_violation=first,
                        lcp_failures=lcp_failures)


def estimate_violation(problem: TrajectoryProblem, plan: PlanSolution,
                       trials: int, seed: int,
                       trajectory_sink=None) -> MonteCarloReport:
    """Run independent rollouts and estimate the violation probability.

    Fully reproducible given the seed.  ``trajectory_sink``, if given, is a
    writable text stream receiving one row per (trial, step) for plotting.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    violations = 0
    lcp_failures = 0
    per_constraint = {c.label: 0 for c in problem.all_constraints()}
    per_constraint["lcp_failure"] = 0

    for t in range(trials):
        rng = trial_rng(seed, t)
        sample = draw_parameters(problem.model, rng)
        out = rollout(problem, plan, sample, rng)
        if out.violated:
            violations += 1
        lcp_failures += out.lcp_failures
        _count_per_constraint(problem, out, per_constraint)
        if trajectory_sink is not None:
            for k, row in enumerate(out.states):
                vals = " ".join(repr(float(v)) for v in row)
                trajectory_sink.write(f"{t} {k} {vals}\n")

    per_constraint = {k: v for k, v in per_constraint.items() if v}
    return MonteCarloReport(trials=trials, violations=violations,
                            per_constraint=per_constraint, seed=seed,
                            lcp_failures=lcp_failures)


def _count_per_constraint(problem, outcome, counter):
    if outcome.first_violation and outcome.first_violation[1] == "lcp_failure":
        counter["lcp_failure"] += 1
        return
    x = outcome.states
    for con in problem.all_constraints():
        if any(float(con.a @ x[k]) > con.b for k in con.steps
               if k < x.shape[0]):
            counter[con.label] += 1


def worker_count() -> int:
    """Worker cap from CCTO_THREADS; defaults to 1 (serial)."""
    try:
        return max(1, int(os.environ.get("CCTO_THREADS", "1")))
    except ValueError:
        return 1
