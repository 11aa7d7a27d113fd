"""Chance-constrained trajectory optimization for contact-rich systems.

Plans open-loop trajectories for stochastic discrete-time linear
complementarity systems by encoding chance complementarity constraints and
tightened linear state constraints into a mixed-integer QP, and validates
the plans with Monte Carlo rollouts that re-solve the contact problem under
sampled uncertainty.
"""

from .benchmarks import (BUILDERS, build_cartpole, build_dual_manipulators,
                         build_sliding_box)
from .bnb import branch_and_bound
from .chance import (CccFeasibility, CovarianceTrajectory, RiskBudget,
                     allocate_budget, ccc_feasibility, inv_norm_cdf, norm_cdf,
                     propagate_covariance, tighten_linear)
from .errors import (BudgetTooLoose, CctoError, ConfigError,
                     DimensionMismatch, DimensionTooLarge, Infeasible,
                     InfeasibleByLemma1, NegativeVariance, NodeLimitReached,
                     NoSolution, OutOfDomain, QpInfeasible,
                     QpNumericalFailure)
from .lcp import (LcpInstance, LcpSolution, complementarity_residual,
                  enumerate_lcp_solutions, is_p_matrix, solve_lcp)
from .miqp import MiqpProblem, PlanSolution, SolverStats, encode, extract_plan
from .models import (ChanceSpec, LinearChanceConstraint, SdlcsModel,
                     TrajectoryProblem)
from .montecarlo import (MonteCarloReport, TrialOutcome, draw_parameters,
                         estimate_violation, rollout, trial_rng)
from .planner import SolveResult, solve_problem

__version__ = "1.0.0"

__all__ = [
    "BUILDERS", "BudgetTooLoose", "CccFeasibility", "CctoError", "ChanceSpec",
    "ConfigError", "CovarianceTrajectory", "DimensionMismatch",
    "DimensionTooLarge", "Infeasible", "InfeasibleByLemma1", "LcpInstance",
    "LcpSolution", "LinearChanceConstraint", "MiqpProblem",
    "MonteCarloReport", "NegativeVariance", "NoSolution", "NodeLimitReached",
    "OutOfDomain", "PlanSolution", "QpInfeasible", "QpNumericalFailure",
    "RiskBudget", "SdlcsModel", "SolveResult", "SolverStats",
    "TrajectoryProblem", "TrialOutcome", "allocate_budget",
    "branch_and_bound", "build_cartpole", "build_dual_manipulators",
    "build_sliding_box", "ccc_feasibility", "complementarity_residual",
    "draw_parameters", "encode", "enumerate_lcp_solutions",
    "estimate_violation", "extract_plan", "inv_norm_cdf", "is_p_matrix",
    "norm_cdf", "propagate_covariance", "rollout", "solve_lcp",
    "solve_problem", "tighten_linear", "trial_rng",
]
