"""Linear complementarity problems: Lemke solver, P-matrix test, diagnostics.

The LCP asks for lambda >= 0 with y = F lambda + q >= 0 and lambda_i y_i = 0.
This module is both a model-checking utility and the inner solver of the
Monte Carlo rollout engine, so determinism matters: identical inputs must
take identical pivot paths.
"""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import DimensionMismatch, DimensionTooLarge, NoSolution

DEFAULT_TOL = 1e-9

# Pivot entries below this are treated as zero during the ratio test.
_PIVOT_TOL = 1e-11


@dataclass(frozen=True)
class LcpInstance:
    """An LCP (F, q) with F square and len(q) == F.shape[0]."""

    F: np.ndarray
    q: np.ndarray

    def __post_init__(self):
        F = np.asarray(self.F, dtype=float)
        q = np.asarray(self.q, dtype=float)
        if F.ndim != 2 or F.shape[0] != F.shape[1]:
            raise DimensionMismatch(f"F must be square, got shape {F.shape}")
        if q.shape != (F.shape[0],):
            raise DimensionMismatch(
                f"q has length {q.shape}, expected ({F.shape[0]},)"
            )
        object.__setattr__(self, "F", F)
        object.__setattr__(self, "q", q)

    @property
    def n(self) -> int:
        return self.F.shape[0]


@dataclass(frozen=True)
class LcpSolution:
    """Solution pair with the worst complementarity product as residual."""

    lam: np.ndarray
    y: np.ndarray
    residual: float
    degenerate: bool


def complementarity_residual(lam, y) -> float:
    """Worst violation of nonnegativity and orthogonality.

    Returns max(max_i(-lam_i), max_i(-y_i), max_i |lam_i y_i|); zero for an
    exact complementary pair.
    """
    lam = np.asarray(lam, dtype=float)
    y = np.asarray(y, dtype=float)
    if lam.shape != y.shape:
        raise DimensionMismatch(f"shape mismatch: {lam.shape} vs {y.shape}")
    if lam.size == 0:
        return 0.0
    return float(max(np.max(-lam), np.max(-y), np.max(np.abs(lam * y))))


def solve_lcp(inst: LcpInstance, tol: float = DEFAULT_TOL) -> LcpSolution:
    """Solve the LCP by Lemke's algorithm with covering vector e = (1,..,1).

    Ties in the ratio test are broken by Bland's rule (smallest basis index),
    which makes the pivot path, and therefore the returned solution, a pure
    function of the input.  Raises NoSolution on secondary-ray termination.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    F, q = inst.F, inst.q
    n = inst.n
    if n == 0:
        return LcpSolution(np.zeros(0), np.zeros(0), 0.0, False)

    if np.min(q) >= 0.0:
        lam = np.zeros(n)
        y = q.copy()
        return _finish(lam, y, tol)

    # Tableau for w - F z - e z0 = q.  Columns: w_0..w_{n-1}, z_0..z_{n-1},
    # z0 (artificial), rhs.  Basis starts as all w.
    T = np.zeros((n, 2 * n + 2))
    T[:, :n] = np.eye(n)
    T[:, n : 2 * n] = -F
    T[:, 2 * n] = -1.0
    T[:, 2 * n + 1] = q
    basis = list(range(n))

    def pivot(row, col):
        T[row] /= T[row, col]
        for i in range(n):
            if i != row and T[i, col] != 0.0:
                T[i] -= T[i, col] * T[row]
        basis[row] = col

    # z0 enters; the most negative rhs leaves (Bland on ties).
    r = int(np.argmin(T[:, 2 * n + 1]))
    pivot(r, 2 * n)
    entering = n + r  # complement of the w that just left

    max_iter = 50 * (n + 2) ** 2
    for _ in range(max_iter):
        col = T[:, entering]
        ratios = np.full(n, np.inf)
        mask = col > _PIVOT_TOL
        ratios[mask] = T[mask, 2 * n + 1] / col[mask]
        if not np.any(np.isfinite(ratios)):
            raise NoSolution("Lemke terminated on a secondary ray")
        best = np.min(ratios)
        # Bland's rule: among minimal ratios, the row whose basic variable
        # has the smallest index leaves.
        candidates = [i for i in range(n) if ratios[i] <= best + _PIVOT_TOL]
        r = min(candidates, key=lambda i: basis[i])
        leaving = basis[r]
        pivot(r, entering)
        if leaving == 2 * n:
            lam = np.zeros(n)
            y = np.zeros(n)
            for i, b in enumerate(basis):
                val = T[i, 2 * n + 1]
                if b < n:
                    y[b] = val
                elif b < 2 * n:
                    lam[b - n] = val
            return _finish(lam, y, tol)
        entering = leaving + n if leaving < n else leaving - n
    raise NoSolution(f"Lemke exceeded {max_iter} pivots")


def _finish(lam, y, tol) -> LcpSolution:
    # Clean tiny negatives so downstream nonnegativity checks are exact.
    lam = np.where(np.abs(lam) < tol, np.maximum(lam, 0.0), lam)
    y = np.where(np.abs(y) < tol, np.maximum(y, 0.0), y)
    residual = float(np.max(np.abs(lam * y))) if lam.size else 0.0
    degenerate = bool(np.any((lam <= tol) & (y <= tol)))
    return LcpSolution(lam=lam, y=y, residual=residual, degenerate=degenerate)


def is_p_matrix(F) -> bool:
    """True iff every principal minor of F is strictly positive.

    Exhaustive over all 2^n - 1 principal submatrices, so the dimension is
    capped at 12; larger matrices raise DimensionTooLarge and the caller is
    expected to skip the check.
    """
    F = np.asarray(F, dtype=float)
    if F.ndim != 2 or F.shape[0] != F.shape[1]:
        raise DimensionMismatch(f"F must be square, got shape {F.shape}")
    n = F.shape[0]
    if n > 12:
        raise DimensionTooLarge(f"P-matrix check limited to n <= 12, got {n}")
    for size in range(1, n + 1):
        for idx in combinations(range(n), size):
            sub = F[np.ix_(idx, idx)]
            if np.linalg.det(sub) <= 0.0:
                return False
    return True


def enumerate_lcp_solutions(inst: LcpInstance, tol: float = 1e-9):
    """All solutions found by brute-force active-set enumeration.

    Test oracle for solve_lcp on small instances: for each subset S of
    indices, solve F[S,S] lam_S = -q_S and keep solutions that are feasible.
    """
    F, q, n = inst.F, inst.q, inst.n
    solutions = []
    for size in range(0, n + 1):
        for idx in combinations(range(n), size):
            lam = np.zeros(n)
            if size:
                sub = F[np.ix_(idx, idx)]
                try:
                    lam_s = np.linalg.solve(sub, -q[list(idx)])
                except np.linalg.LinAlgError:
                    continue
                lam[list(idx)] = lam_s
            y = F @ lam + q
            if np.all(lam >= -tol) and np.all(y >= -tol):
                if not any(np.allclose(lam, s.lam, atol=10 * tol) for s in solutions):
                    solutions.append(_finish(lam.copy(), y, tol))
    return solutions
