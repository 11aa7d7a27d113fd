"""Risk allocation, Gaussian constraint tightening, and covariance propagation."""

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import BudgetTooLoose, NegativeVariance, OutOfDomain
from .models import TrajectoryProblem


def norm_cdf(x: float) -> float:
    """Standard normal CDF via the complementary error function."""
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def norm_pdf(x: float) -> float:
    return math.exp(-0.5 * x * x) / math.sqrt(2.0 * math.pi)


# Coefficients of Acklam's rational approximation to the normal quantile,
# used only as the initial guess before Newton refinement.
_ACKLAM_A = (-3.969683028665376e+01, 2.209460984245205e+02,
             -2.759285104469687e+02, 1.383577518672690e+02,
             -3.066479806614716e+01, 2.506628277459239e+00)
_ACKLAM_B = (-5.447609879822406e+01, 1.615858368580409e+02,
             -1.556989798598866e+02, 6.680131188771972e+01,
             -1.328068155288572e+01)
_ACKLAM_C = (-7.784894002430293e-03, -3.223964580411365e-01,
             -2.400758277161838e+00, -2.549732539343734e+00,
             4.374664141464968e+00, 2.938163982698783e+00)
_ACKLAM_D = (7.784695709041462e-03, 3.224671290700398e-01,
             2.445134137142996e+00, 3.754408661907416e+00)


def _acklam(p: float) -> float:
    a, b, c, d = _ACKLAM_A, _ACKLAM_B, _ACKLAM_C, _ACKLAM_D
    p_low, p_high = 0.02425, 1.0 - 0.02425
    if p < p_low:
        q = math.sqrt(-2.0 * math.log(p))
        return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    if p > p_high:
        q = math.sqrt(-2.0 * math.log(1.0 - p))
        return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) / \
               ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0)
    q = p - 0.5
    r = q * q
    return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q / \
           (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0)


def inv_norm_cdf(p: float) -> float:
    """Inverse standard normal CDF, accurate to ~1e-15 in probability.

    Rational initial guess refined by two Halley steps on erfc-evaluated
    norm_cdf, so no external special-function package is involved.
    """
    if not 0.0 < p < 1.0:
        raise OutOfDomain(f"inv_norm_cdf requires p in (0, 1), got {p}")
    x = _acklam(p)
    for _ in range(2):
        e = norm_cdf(x) - p
        u = e / norm_pdf(x)
        x -= u / (1.0 + 0.5 * x * u)  # Halley step
    return x


@dataclass(frozen=True)
class RiskBudget:
    """Uniform Boole split of the total budget Delta.

    The complementarity half Delta1 and the state half Delta2 are each
    Delta/2; theta is the per-row-per-step complementarity budget and
    delta_state the per-constraint-per-step state budget.  alpha, zeta, eta
    are the tightening multipliers used by the MIQP encoder.
    """

    delta: float
    delta1: float
    delta2: float
    theta: float
    delta_state: float
    alpha: float
    zeta: float
    eta: float
    N: int
    n_c: int
    L: int

    def __post_init__(self):
        assert self.zeta > self.eta > 0.0


def allocate_budget(delta: float, N: int, n_c: int, L: int) -> RiskBudget:
    """Split Delta across steps, complementarity rows, and state constraints.

    theta = Delta / (2 N n_c), delta_state = Delta / (2 N L); raises
    BudgetTooLoose when either reaches 0.5, where the tightening multiplier
    changes sign and the deterministic reformulation stops being valid.
    """
    if N < 1 or n_c < 1 or L < 1:
        raise ValueError("N, n_c, L must all be >= 1")
    if not 0.0 < delta <= 0.5:
        raise OutOfDomain(f"delta must lie in (0, 0.5], got {delta}")
    delta1 = delta2 = delta / 2.0
    theta = delta1 / (N * n_c)
    delta_state = delta2 / (N * L)
    if theta >= 0.5 or delta_state >= 0.5:
        raise BudgetTooLoose(
            f"per-constraint budget not below 0.5 (theta={theta}, "
            f"delta_state={delta_state})"
        )
    return RiskBudget(
        delta=delta,
        delta1=delta1,
        delta2=delta2,
        theta=theta,
        delta_state=delta_state,
        alpha=inv_norm_cdf(1.0 - delta_state),
        zeta=inv_norm_cdf(1.0 - theta / 2.0),
        eta=inv_norm_cdf(1.0 - theta),
        N=N,
        n_c=n_c,
        L=L,
    )


def tighten_linear(a, b: float, Sigma_x, delta: float) -> float:
    """Deterministic bound for Pr(a^T x <= b) >= 1 - delta under x ~ N(., Sigma).

    Returns b - sqrt(a^T Sigma a) * PhiInv(1 - delta).  With zero covariance
    the bound is returned unchanged.
    """
    if not 0.0 < delta < 0.5:
        raise OutOfDomain(f"delta must lie in (0, 0.5), got {delta}")
    a = np.asarray(a, dtype=float)
    Sigma_x = np.asarray(Sigma_x, dtype=float)
    var = float(a @ Sigma_x @ a)
    if var < -1e-12:
        raise NegativeVariance(f"a^T Sigma a = {var} < 0; Sigma is not PSD")
    var = max(var, 0.0)
    return float(b) - math.sqrt(var) * inv_norm_cdf(1.0 - delta)


@dataclass(frozen=True)
class CccFeasibility:
    """Feasibility of the two complementarity modes at a given risk level.

    mode1 is the contact mode (lambda free, y within [0, epsilon] in
    probability); mode2 the separation mode (lambda = 0, y >= epsilon in
    probability).  Thresholds are the smallest theta each mode can support.
    """

    mode1_feasible: bool
    mode2_feasible: bool
    mode1_threshold: float
    mode2_threshold: float


def ccc_feasibility(epsilon: float, y_mean: float, sigma_y: float,
                    theta: float) -> CccFeasibility:
    """Check both complementarity modes for feasibility at risk theta.

    Mode 1 needs theta > 2 (1 - Phi(epsilon / (2 sigma))); mode 2 needs
    theta > 1 - Phi((y_mean - epsilon) / sigma).  A deterministic row
    (sigma = 0) supports both modes at any theta.
    """
    if epsilon <= 0.0:
        raise OutOfDomain("epsilon must be positive")
    if sigma_y < 0.0:
        raise OutOfDomain("sigma_y must be nonnegative")
    if not 0.0 < theta < 0.5:
        raise OutOfDomain(f"theta must lie in (0, 0.5), got {theta}")
    if sigma_y == 0.0:
        return CccFeasibility(True, True, 0.0, 0.0)
    t1 = 2.0 * (1.0 - norm_cdf(epsilon / (2.0 * sigma_y)))
    t2 = 1.0 - norm_cdf((y_mean - epsilon) / sigma_y)
    return CccFeasibility(theta > t1, theta > t2, t1, t2)


@dataclass(eq=False)
class CovarianceTrajectory:
    """Pre-solve second moments used by the MIQP encoder.

    Sigma_x has N+1 entries starting at Sigma_s; sigma_y_diag[k, i] is the
    standard deviation of row i of y_{k+1}; kappa maps (constraint label,
    step) to sqrt(a^T Sigma_x[k] a).
    """

    Sigma_x: list
    sigma_y_diag: np.ndarray
    kappa: dict
    psi: np.ndarray = field(init=False)

    def __post_init__(self):
        self.psi = self.sigma_y_diag


def propagate_covariance(problem: TrajectoryProblem) -> CovarianceTrajectory:
    """Propagate state covariance and per-row y deviations over the horizon.

    Sigma_x[k+1] = A Sigma_x[k] A^T + Sigma_Clam + W, where Sigma_Clam is
    diagonal with entries sum_j sigma_C[i,j]^2 * lam_wc^2 for the worst-case
    force lam_wc.  The y deviations carry the F parameter noise (again at
    the worst-case force) plus the additive complementarity noise V; they
    deliberately exclude the state covariance, which enters the planner
    through the state-constraint tightening instead.
    """
    m = problem.model
    N = problem.N
    lam_wc = problem.worst_case_lambda
    Sigma_Clam = np.diag((m.sigma_C ** 2).sum(axis=1) * lam_wc ** 2)

    Sigma_x = [problem.Sigma_s.copy()]
    for _ in range(N):
        nxt = m.A @ Sigma_x[-1] @ m.A.T + Sigma_Clam + m.W
        Sigma_x.append(0.5 * (nxt + nxt.T))

    var_y = (m.sigma_F ** 2).sum(axis=1) * lam_wc ** 2 + np.diag(m.V)
    sigma_y = np.tile(np.sqrt(np.maximum(var_y, 0.0)), (N, 1))

    kappa = {}
    for con in problem.all_constraints():
        for k in con.steps:
            var = float(con.a @ Sigma_x[k] @ con.a)
            kappa[(con.label, k)] = math.sqrt(max(var, 0.0))
    return CovarianceTrajectory(Sigma_x=Sigma_x, sigma_y_diag=sigma_y, kappa=kappa)
