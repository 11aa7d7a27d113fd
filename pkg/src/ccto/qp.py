"""Convex QP relaxation engine built on Clarabel.

The constraint matrix is assembled once per MIQP and shared across
branch-and-bound nodes; a node only changes variable bounds (binary
fixings), which maps to edits of the right-hand-side vector.
"""

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
import clarabel

from .errors import QpInfeasible, QpNumericalFailure
from .miqp import MiqpProblem

OK = "optimal"
OK_INACCURATE = "optimal_inaccurate"
INFEASIBLE = "infeasible"


@dataclass
class QpResult:
    status: str
    v: np.ndarray
    objective: float  # 1/2 v^T H v + f^T v, including regularization
    kkt_residual: float


class QpRelaxationEngine:
    """Persistent problem data for one MIQP's continuous relaxations.

    Conic form: A v + s = b with s in {0}^neq x R_+^m, where the inequality
    block stacks Ain rows and the finite variable bounds (v <= hi, -v <= -lo).
    """

    def __init__(self, prob: MiqpProblem):
        self.prob = prob
        n = prob.n_vars
        neq = prob.Aeq.shape[0]
        self._finite_hi = np.where(np.isfinite(prob.hi))[0]
        self._finite_lo = np.where(np.isfinite(prob.lo))[0]
        eye = sp.identity(n, format="csr")
        self._A = sp.vstack(
            [prob.Aeq, prob.Ain, eye[self._finite_hi], -eye[self._finite_lo]],
            format="csc",
        )
        self._b = np.concatenate([
            prob.beq, prob.bin,
            prob.hi[self._finite_hi], -prob.lo[self._finite_lo],
        ])
        # Row of the hi / lo bound of each variable inside b (-1 if absent).
        off_hi = neq + prob.Ain.shape[0]
        off_lo = off_hi + self._finite_hi.shape[0]
        self._hi_row = np.full(n, -1)
        self._hi_row[self._finite_hi] = off_hi + np.arange(self._finite_hi.shape[0])
        self._lo_row = np.full(n, -1)
        self._lo_row[self._finite_lo] = off_lo + np.arange(self._finite_lo.shape[0])
        self._cones = [
            clarabel.ZeroConeT(neq),
            clarabel.NonnegativeConeT(self._A.shape[0] - neq),
        ]
        self._settings = clarabel.DefaultSettings()
        self._settings.verbose = False
        self.solves = 0

    def _set_bounds(self, b, var, lo, hi):
        b[self._hi_row[var]] = hi
        b[self._lo_row[var]] = -lo

    def solve(self, fixed: dict = None) -> QpResult:
        """Solve the relaxation with the given binary pairs fixed.

        ``fixed`` maps pair index -> mode (0 fixes z0 = 1, 1 fixes z1 = 1);
        unfixed pairs are relaxed to [0, 1].
        """
        b = self._b.copy()
        if fixed:
            for pair_idx, mode in fixed.items():
                c_sel, c_other = self.prob.binary_pairs[pair_idx]
                if mode == 1:
                    c_sel, c_other = c_other, c_sel
                self._set_bounds(b, c_sel, 1.0, 1.0)
                self._set_bounds(b, c_other, 0.0, 0.0)
        solver = clarabel.DefaultSolver(
            self.prob.H, self.prob.f, self._A, b, self._cones, self._settings
        )
        res = solver.solve()
        self.solves += 1
        status = str(res.status)
        if "Infeasible" in status:
            return QpResult(INFEASIBLE, None, np.inf, np.inf)
        if status not in ("Solved", "AlmostSolved", "MaxIterations",
                          "InsufficientProgress"):
            raise QpNumericalFailure(f"QP solver status {status!r}")
        v = np.asarray(res.x, dtype=float)
        if v.shape != (self.prob.n_vars,) or np.any(~np.isfinite(v)):
            raise QpNumericalFailure(f"QP returned non-finite iterate ({status})")
        obj = 0.5 * float(v @ (self.prob.H @ v)) + float(self.prob.f @ v)
        kkt = self._kkt_residual(v, np.asarray(res.z, dtype=float), b)
        ok = OK if status == "Solved" else OK_INACCURATE
        return QpResult(ok, v, obj, kkt)

    def _kkt_residual(self, v, z, b):
        slack = b - self._A @ v
        neq = self.prob.Aeq.shape[0]
        r_prim = float(np.max(np.abs(slack[:neq]), initial=0.0))
        r_prim = max(r_prim, float(np.max(-slack[neq:], initial=0.0)))
        r_dual = float(
            np.max(np.abs(self.prob.H @ v + self.prob.f + self._A.T @ z),
                   initial=0.0)
        )
        return max(r_prim, r_dual)


def solve_qp_relaxation(prob: MiqpProblem, fixed: dict = None) -> QpResult:
    """One-shot relaxation solve; raises QpInfeasible on an infeasible node."""
    res = QpRelaxationEngine(prob).solve(fixed)
    if res.status == INFEASIBLE:
        raise QpInfeasible("QP relaxation is primal infeasible")
    return res
