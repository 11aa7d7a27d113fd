"""End-to-end planning pipeline: budget -> covariance -> MIQP -> search."""

from dataclasses import dataclass

from .bnb import DEFAULT_GAP_TOL, DEFAULT_NODE_LIMIT, branch_and_bound
from .chance import (CovarianceTrajectory, RiskBudget, allocate_budget,
                     propagate_covariance)
from .errors import NodeLimitReached
from .miqp import MiqpProblem, PlanSolution, encode
from .models import TrajectoryProblem


@dataclass(eq=False)
class SolveResult:
    plan: PlanSolution
    budget: RiskBudget
    cov: CovarianceTrajectory
    miqp: MiqpProblem


def solve_problem(problem: TrajectoryProblem,
                  gap_tol: float = DEFAULT_GAP_TOL,
                  node_limit: int = DEFAULT_NODE_LIMIT,
                  accept_incumbent: bool = True,
                  initial_modes=None) -> SolveResult:
    """Plan a trajectory for the given problem.

    Allocates the risk budget uniformly, propagates the pre-solve
    covariances, encodes the mixed-integer QP, and solves it by branch and
    bound.  Raises BudgetTooLoose, InfeasibleByLemma1, Infeasible, or
    NodeLimitReached as the corresponding stage fails.

    When ``accept_incumbent`` is true (the default) and the node budget runs
    out after an integer-feasible plan was found, that incumbent is returned
    instead of raising; its ``solver_stats.gap_closed`` flag is False because
    its optimality gap is not certified.  NodeLimitReached still propagates
    when no incumbent exists.
    """
    budget = allocate_budget(
        problem.chance.delta, problem.N, problem.model.n_c,
        problem.chance.constraints_per_step,
    )
    cov = propagate_covariance(problem)
    miqp = encode(problem, budget, cov)
    try:
        plan = branch_and_bound(miqp, gap_tol=gap_tol, node_limit=node_limit,
                                initial_modes=initial_modes)
    except NodeLimitReached as exc:
        if not accept_incumbent or exc.incumbent is None:
            raise
        plan = exc.incumbent
    return SolveResult(plan=plan, budget=budget, cov=cov, miqp=miqp)
