"""Encoding of the chance-constrained planning problem as a mixed-integer QP.

Decision variables, in column order: mean states x_0..x_N, controls
u_0..u_{N-1}, forces lam_1..lam_N, then one (z0, z1) binary pair per
(step, complementarity row).  z0 selects the contact mode (lambda free, mean
y held inside the relaxed band), z1 the separation mode (lambda = 0, mean y
pushed above epsilon); big-M rows deactivate the constraints of the
unselected mode.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .chance import CovarianceTrajectory, RiskBudget, ccc_feasibility, inv_norm_cdf
from .errors import ConfigError, InfeasibleByLemma1
from .models import TrajectoryProblem

# Diagonal regularization keeping H positive definite when Q = 0; reported in
# solver stats and excluded from the objective value of returned plans.
REGULARIZATION = 1e-9


@dataclass(eq=False)
class MiqpProblem:
    """Standard-form MIQP: min 1/2 v^T H v + f^T v over the listed constraints.

    Aeq v = beq, Ain v <= bin, lo <= v <= hi, and for every pair in
    binary_pairs both entries are binary and sum to one.
    """

    H: sp.csc_matrix
    f: np.ndarray
    Aeq: sp.csc_matrix
    beq: np.ndarray
    Ain: sp.csc_matrix
    bin: np.ndarray
    lo: np.ndarray
    hi: np.ndarray
    binary_pairs: list
    var_map: dict
    row_labels: list
    forced_modes: dict  # (k, i) -> 0 (contact) or 1 (separation), fixed pre-solve
    problem: TrajectoryProblem = None
    budget: RiskBudget = None

    @property
    def n_vars(self) -> int:
        return self.f.shape[0]

    def objective_value(self, v) -> float:
        """True quadratic cost of a variable vector, without regularization."""
        p = self.problem
        N, n_x, n_u = p.N, p.model.n_x, p.model.n_u
        x = v[: (N + 1) * n_x].reshape(N + 1, n_x)
        u = v[self.var_map["u"]: self.var_map["u"] + N * n_u].reshape(N, n_u)
        cost = 0.0
        for k in range(N):
            cost += float(x[k] @ p.Q @ x[k] + u[k] @ p.R @ u[k])
        return cost

    def max_violation(self, v) -> float:
        """Worst constraint violation of v over all rows and bounds."""
        viol = 0.0
        if self.Aeq.shape[0]:
            viol = max(viol, float(np.max(np.abs(self.Aeq @ v - self.beq))))
        if self.Ain.shape[0]:
            viol = max(viol, float(np.max(self.Ain @ v - self.bin)))
        viol = max(viol, float(np.max(self.lo - v)), float(np.max(v - self.hi)))
        return viol


@dataclass(eq=False)
class SolverStats:
    nodes: int = 0
    qp_solves: int = 0
    relaxation_bound: float = float("-inf")
    wall_time: float = 0.0
    regularization: float = REGULARIZATION
    # False when the search stopped at the node limit with an incumbent
    # whose optimality gap is not certified.
    gap_closed: bool = True


@dataclass(eq=False)
class PlanSolution:
    """An integer-feasible plan: mean trajectory, controls, forces, modes.

    z[k, i] is 1 when the contact mode (z0) is selected for row i at step k.
    """

    x_mean: np.ndarray
    u: np.ndarray
    lam: np.ndarray
    z: np.ndarray
    objective: float
    solver_stats: SolverStats = field(default_factory=SolverStats)


def encode(problem: TrajectoryProblem, budget: RiskBudget,
           cov: CovarianceTrajectory) -> MiqpProblem:
    """Assemble the full MIQP for a trajectory problem.

    Raises InfeasibleByLemma1 if some (step, row) admits neither
    complementarity mode at the allocated risk theta; rows where exactly one
    mode survives are recorded in forced_modes so the solver can fix the
    pair without branching.
    """
    m = problem.model
    N, n_x, n_u, n_c = problem.N, m.n_x, m.n_u, m.n_c
    eps = problem.chance.epsilon
    big_m = problem.chance.big_m
    zeta, eta = budget.zeta, budget.eta

    n_state = (N + 1) * n_x
    u_off = n_state
    l_off = u_off + N * n_u
    z_off = l_off + N * n_c
    n_vars = z_off + 2 * N * n_c
    var_map = {"x": 0, "u": u_off, "lam": l_off, "z": z_off,
               "n_x": n_x, "n_u": n_u, "n_c": n_c, "N": N}

    def xi(k, j=0):
        return k * n_x + j

    def ui(k, j=0):
        return u_off + k * n_u + j

    def li(k, i=0):
        return l_off + k * n_c + i

    def zi(k, i, mode):
        return z_off + 2 * (k * n_c + i) + mode

    # Lemma-1 screen: a row/step where the contact band cannot hold at theta
    # is forced into separation (and vice versa); both failing is fatal.
    forced_modes = {}
    for k in range(N):
        for i in range(n_c):
            rep = ccc_feasibility(eps, big_m, float(cov.psi[k, i]), budget.theta)
            if not rep.mode1_feasible and not rep.mode2_feasible:
                raise InfeasibleByLemma1(k, i, budget.theta,
                                         rep.mode1_threshold, rep.mode2_threshold)
            if not rep.mode1_feasible:
                forced_modes[(k, i)] = 1
            elif not rep.mode2_feasible:
                forced_modes[(k, i)] = 0

    # --- equalities: initial state, mean dynamics, pair sums
    eq_rows, eq_cols, eq_vals, beq = [], [], [], []

    def eq_entry(r, c, v):
        eq_rows.append(r)
        eq_cols.append(c)
        eq_vals.append(v)

    r = 0
    for j in range(n_x):
        eq_entry(r, xi(0, j), 1.0)
        beq.append(problem.x_s[j])
        r += 1
    for k in range(N):
        for jr in range(n_x):
            eq_entry(r, xi(k + 1, jr), 1.0)
            for jc in range(n_x):
                if m.A[jr, jc] != 0.0:
                    eq_entry(r, xi(k, jc), -m.A[jr, jc])
            for jc in range(n_u):
                if m.B[jr, jc] != 0.0:
                    eq_entry(r, ui(k, jc), -m.B[jr, jc])
            for jc in range(n_c):
                if m.C[jr, jc] != 0.0:
                    eq_entry(r, li(k, jc), -m.C[jr, jc])
            beq.append(m.g[jr])
            r += 1
    binary_pairs = []
    for k in range(N):
        for i in range(n_c):
            eq_entry(r, zi(k, i, 0), 1.0)
            eq_entry(r, zi(k, i, 1), 1.0)
            beq.append(1.0)
            binary_pairs.append((zi(k, i, 0), zi(k, i, 1)))
            r += 1
    Aeq = sp.csc_matrix(
        (eq_vals, (eq_rows, eq_cols)), shape=(r, n_vars)
    )
    beq = np.array(beq)

    # --- inequalities
    in_rows, in_cols, in_vals, bin_, labels = [], [], [], [], []

    def add_row(entries, rhs, label):
        rr = len(bin_)
        for c, v in entries:
            in_rows.append(rr)
            in_cols.append(c)
            in_vals.append(v)
        bin_.append(rhs)
        labels.append(label)

    for k in range(N):
        for i in range(n_c):
            psi = float(cov.psi[k, i])
            # lambda <= M z0
            add_row([(li(k, i), 1.0), (zi(k, i, 0), -big_m)], 0.0,
                    f"lam_bigM[{k},{i}]")
            # Mean-y band: zeta psi z0 + (eps + eta psi) z1 <= y, and
            # y <= (upper edge) z0 + M z1.  The admissible contact-mode
            # band is [zeta psi, eps - zeta psi]; with pin_contact_band the
            # upper edge collapses onto the lower one.  Every mean in the
            # band is equally chance-feasible, and holding the contact-mode
            # gap at its smallest admissible value keeps the planned forces
            # consistent with the exact complementarity the plant realizes,
            # which is what makes open-loop replay track the plan.
            upper = zeta * psi if problem.chance.pin_contact_band \
                else eps - zeta * psi
            y_entries = [(xi(k, j), m.D[i, j]) for j in range(n_x) if m.D[i, j]]
            y_entries += [(ui(k, j), m.E[i, j]) for j in range(n_u) if m.E[i, j]]
            y_entries += [(li(k, j), m.F[i, j]) for j in range(n_c) if m.F[i, j]]
            add_row(
                y_entries + [(zi(k, i, 0), -upper),
                             (zi(k, i, 1), -big_m)],
                -m.h[i],
                f"y_upper[{k},{i}]",
            )
            add_row(
                [(c, -v) for c, v in y_entries]
                + [(zi(k, i, 0), zeta * psi), (zi(k, i, 1), eps + eta * psi)],
                m.h[i],
                f"y_lower[{k},{i}]",
            )

    for con in problem.all_constraints():
        delta_l = budget.delta_state * con.budget_share
        for k in con.steps:
            b_t = con.b - cov.kappa[(con.label, k)] * inv_norm_cdf(1.0 - delta_l)
            add_row([(xi(k, j), con.a[j]) for j in range(n_x) if con.a[j]],
                    b_t, f"state[{con.label},{k}]")

    Ain = sp.csc_matrix(
        (in_vals, (in_rows, in_cols)), shape=(len(bin_), n_vars)
    )
    bin_ = np.array(bin_)

    # --- variable bounds
    lo = np.full(n_vars, -np.inf)
    hi = np.full(n_vars, np.inf)
    for k in range(N):
        for j in range(n_u):
            lo[ui(k, j)], hi[ui(k, j)] = problem.u_bounds[j]
        for i in range(n_c):
            lo[li(k, i)] = 0.0
            hi[li(k, i)] = min(problem.lambda_u, big_m)
    lo[z_off:] = 0.0
    hi[z_off:] = 1.0
    for (k, i), mode in forced_modes.items():
        lo[zi(k, i, mode)] = hi[zi(k, i, mode)] = 1.0
        lo[zi(k, i, 1 - mode)] = hi[zi(k, i, 1 - mode)] = 0.0

    # --- objective
    diag = np.full(n_vars, 2.0 * REGULARIZATION)
    H_blocks = sp.lil_matrix((n_vars, n_vars))
    for k in range(N):
        for jr in range(n_x):
            for jc in range(n_x):
                if problem.Q[jr, jc]:
                    H_blocks[xi(k, jr), xi(k, jc)] += 2.0 * problem.Q[jr, jc]
        for jr in range(n_u):
            for jc in range(n_u):
                if problem.R[jr, jc]:
                    H_blocks[ui(k, jr), ui(k, jc)] += 2.0 * problem.R[jr, jc]
    H = (H_blocks + sp.diags(diag)).tocsc()

    return MiqpProblem(
        H=H, f=np.zeros(n_vars), Aeq=Aeq, beq=beq, Ain=Ain, bin=bin_,
        lo=lo, hi=hi, binary_pairs=binary_pairs, var_map=var_map,
        row_labels=labels, forced_modes=forced_modes,
        problem=problem, budget=budget,
    )


def extract_plan(prob: MiqpProblem, v: np.ndarray,
                 stats: SolverStats = None) -> PlanSolution:
    """Read a variable vector back into trajectory form."""
    p = prob.problem
    N, n_x, n_u, n_c = p.N, p.model.n_x, p.model.n_u, p.model.n_c
    x = v[: (N + 1) * n_x].reshape(N + 1, n_x).copy()
    u = v[prob.var_map["u"]: prob.var_map["u"] + N * n_u].reshape(N, n_u).copy()
    lam = v[prob.var_map["lam"]: prob.var_map["lam"] + N * n_c].reshape(N, n_c).copy()
    z_raw = v[prob.var_map["z"]:].reshape(N * n_c, 2)
    z = np.rint(z_raw[:, 0]).astype(int).reshape(N, n_c)
    return PlanSolution(
        x_mean=x, u=u, lam=lam, z=z,
        objective=prob.objective_value(v),
        solver_stats=stats or SolverStats(),
    )


# ---------------------------------------------------------------------------
# Plain-text sparse export so external solvers can cross-check.

FORMAT_VERSION = "ccto-miqp 1"


def export_problem(prob: MiqpProblem, fp) -> None:
    """Write the MIQP in a documented COO text format.

    Sections: header with dimensions, COO triplets for H, Aeq, Ain, dense
    vectors, variable bounds, and the binary pair index list.
    """
    close = False
    if isinstance(fp, (str, bytes)):
        fp = open(fp, "w")
        close = True
    try:
        w = fp.write
        w(f"# {FORMAT_VERSION}\n")
        w(f"nvars {prob.n_vars}\n")
        w(f"neq {prob.Aeq.shape[0]}\nnin {prob.Ain.shape[0]}\n")
        w(f"npairs {len(prob.binary_pairs)}\n")
        for name, M in (("H", prob.H), ("Aeq", prob.Aeq), ("Ain", prob.Ain)):
            coo = M.tocoo()
            w(f"{name} {coo.nnz}\n")
            for i, j, v in zip(coo.row, coo.col, coo.data):
                w(f"{i} {j} {v!r}\n")
        for name, vec in (("f", prob.f), ("beq", prob.beq), ("bin", prob.bin),
                          ("lo", prob.lo), ("hi", prob.hi)):
            w(f"{name} {vec.shape[0]}\n")
            w(" ".join(repr(float(v)) for v in vec) + "\n")
        w("pairs\n")
        for a, b in prob.binary_pairs:
            w(f"{a} {b}\n")
    finally:
        if close:
            fp.close()


def export_solution(v: np.ndarray, fp) -> None:
    close = False
    if isinstance(fp, (str, bytes)):
        fp = open(fp, "w")
        close = True
    try:
        fp.write(f"# {FORMAT_VERSION} solution\n")
        fp.write(f"nvars {v.shape[0]}\n")
        fp.write(" ".join(repr(float(x)) for x in v) + "\n")
    finally:
        if close:
            fp.close()


def import_solution(fp) -> np.ndarray:
    close = False
    if isinstance(fp, (str, bytes)):
        fp = open(fp)
        close = True
    try:
        header = fp.readline()
        if "solution" not in header:
            raise ConfigError("not a ccto-miqp solution file")
        n = int(fp.readline().split()[1])
        vals = np.array([float(t) for t in fp.readline().split()])
        if vals.shape[0] != n:
            raise ConfigError("solution length does not match header")
        return vals
    finally:
        if close:
            fp.close()
