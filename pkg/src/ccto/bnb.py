"""Branch and bound over complementarity-mode binaries.

The continuous relaxation leaves the mode indicators almost perfectly
fractional (the big-M rows are loose there), so branching is driven by the
physical complementarity violation instead: the node branches on the
(step, row) pair whose relaxed force and gap are both furthest from zero,
and the child matching the relaxed physics (contact when the gap sits below
the separation threshold, separation otherwise) is explored first.  Ties
resolve to the smallest pair index.  Every leaf is re-solved with all pairs
hard-fixed so returned plans are exactly integer feasible.
"""

import time
from dataclasses import dataclass

import numpy as np

from .errors import Infeasible, NodeLimitReached, QpNumericalFailure
from .miqp import MiqpProblem, PlanSolution, SolverStats, extract_plan
from .qp import INFEASIBLE, OK, QpRelaxationEngine

DEFAULT_GAP_TOL = 1e-6
DEFAULT_NODE_LIMIT = 1_000_000

# Safety margin subtracted from bounds whose QP did not converge to full
# accuracy, so they stay valid lower bounds.
_INACCURATE_SLACK = 1e-6
# A pair counts as complementary when min(lam, y) is below this fraction of
# its scale (lambda bound, epsilon respectively).
_COMP_TOL = 1e-6


@dataclass
class _Node:
    fixed: dict
    parent_bound: float
    depth: int


class _Physics:
    """Extracts per-(step, row) forces and gaps from a relaxation iterate."""

    def __init__(self, prob: MiqpProblem):
        p = prob.problem
        m = p.model
        self.N, self.n_c = p.N, m.n_c
        self.m = m
        self.var_map = prob.var_map
        self.eps = p.chance.epsilon
        self.lam_scale = min(p.lambda_u, p.chance.big_m)

    def lam_y(self, v):
        vm = self.var_map
        N, n_c, m = self.N, self.n_c, self.m
        n_x, n_u = m.n_x, m.n_u
        x = v[: (N + 1) * n_x].reshape(N + 1, n_x)
        u = v[vm["u"]: vm["u"] + N * n_u].reshape(N, n_u)
        lam = v[vm["lam"]: vm["lam"] + N * n_c].reshape(N, n_c)
        y = x[:N] @ m.D.T + u @ m.E.T + lam @ m.F.T + m.h
        return lam, y


def branch_and_bound(prob: MiqpProblem, gap_tol: float = DEFAULT_GAP_TOL,
                     node_limit: int = DEFAULT_NODE_LIMIT,
                     initial_modes: np.ndarray = None) -> PlanSolution:
    """Solve the MIQP to the requested relative gap.

    Returns a PlanSolution whose objective is within gap_tol (relative) of
    the global optimum.  Raises Infeasible when no integer-feasible leaf
    exists and NodeLimitReached (carrying the incumbent, if any) when the
    node budget runs out first.

    ``initial_modes`` (N x n_c, 1 = contact) optionally warm-starts the
    incumbent: the fully fixed assignment is evaluated once before the
    search, so the returned plan is never worse than that candidate.
    """
    if gap_tol < 0:
        raise ValueError("gap_tol must be nonnegative")
    t0 = time.perf_counter()
    engine = QpRelaxationEngine(prob)
    phys = _Physics(prob)
    n_pairs = len(prob.binary_pairs)
    n_c = prob.var_map["n_c"]
    eps = prob.problem.chance.epsilon
    lam_scale = min(prob.problem.lambda_u, prob.problem.chance.big_m)

    root_fixed = {k * n_c + i: mode for (k, i), mode in prob.forced_modes.items()}
    stack = [_Node(fixed=root_fixed, parent_bound=-np.inf, depth=0)]
    incumbent_v = None
    incumbent_obj = np.inf
    root_bound = -np.inf
    nodes = 0

    if initial_modes is not None:
        modes = np.asarray(initial_modes)
        if modes.shape != (phys.N, phys.n_c):
            raise ValueError(
                f"initial_modes has shape {modes.shape}, expected "
                f"({phys.N}, {phys.n_c})"
            )
        # Pair mode convention: 0 selects contact (z0), 1 separation.
        seed = {j: (0 if flag else 1)
                for j, flag in enumerate(modes.reshape(-1))}
        seed.update(root_fixed)
        try:
            res = engine.solve(seed)
        except QpNumericalFailure:
            res = None
        nodes += 1
        if res is not None and res.status != INFEASIBLE:
            incumbent_obj = res.objective
            incumbent_v = res.v

    def gap_abs():
        if not np.isfinite(incumbent_obj):
            return 0.0
        return gap_tol * max(1.0, abs(incumbent_obj))

    def stats():
        return SolverStats(nodes=nodes, qp_solves=engine.solves,
                           relaxation_bound=root_bound,
                           wall_time=time.perf_counter() - t0)

    def guess_mode(lam_ki, y_ki):
        # Contact when a force is present or the gap sits below the
        # separation level; otherwise separation.
        if lam_ki > _COMP_TOL * lam_scale:
            return 0
        return 1 if y_ki >= eps else 0

    while stack:
        if nodes >= node_limit:
            incumbent = None
            if incumbent_v is not None:
                st = stats()
                st.gap_closed = False
                incumbent = extract_plan(prob, incumbent_v, st)
            raise NodeLimitReached(
                f"node limit {node_limit} reached", incumbent=incumbent,
                nodes=nodes,
            )
        node = stack.pop()
        if node.parent_bound >= incumbent_obj - gap_abs():
            continue
        try:
            res = engine.solve(node.fixed)
        except QpNumericalFailure:
            # A numerically failed relaxation yields no usable bound or
            # iterate; drop the node rather than abort the search.
            nodes += 1
            continue
        nodes += 1
        if res.status == INFEASIBLE:
            continue
        bound = res.objective
        if res.status != OK:
            bound -= _INACCURATE_SLACK * (1.0 + abs(bound))
        # Child relaxations only add constraints, so the parent bound is a
        # floor for the child's.
        bound = max(bound, node.parent_bound)
        if node.depth == 0:
            root_bound = bound
        if bound >= incumbent_obj - gap_abs():
            continue

        lam, y = phys.lam_y(res.v)
        # Complementarity violation score per pair, scale-normalized.
        score = np.minimum(lam / lam_scale, np.abs(y) / eps).reshape(-1)
        for j in node.fixed:
            score[j] = -np.inf
        branch_pair = int(np.argmax(score))
        if score[branch_pair] <= _COMP_TOL:
            # Physically complementary: fix every remaining pair to the mode
            # the relaxed forces/gaps indicate and re-solve for an exactly
            # integer-feasible incumbent.
            full = dict(node.fixed)
            flat_lam = lam.reshape(-1)
            flat_y = y.reshape(-1)
            for j in range(n_pairs):
                if j not in full:
                    full[j] = guess_mode(flat_lam[j], flat_y[j])
            try:
                leaf = engine.solve(full)
            except QpNumericalFailure:
                nodes += 1
                continue
            nodes += 1
            if leaf.status != INFEASIBLE:
                obj = leaf.objective
                if obj < incumbent_obj:
                    incumbent_obj = obj
                    incumbent_v = leaf.v
            continue

        preferred = guess_mode(lam.reshape(-1)[branch_pair],
                               y.reshape(-1)[branch_pair])
        for mode in (1 - preferred, preferred):  # LIFO: preferred pops first
            child = dict(node.fixed)
            child[branch_pair] = mode
            stack.append(_Node(fixed=child, parent_bound=bound,
                               depth=node.depth + 1))

    if incumbent_v is None:
        raise Infeasible("no integer-feasible mode assignment exists")
    return extract_plan(prob, incumbent_v, stats())
