"""Problem data types: SDLCS models, chance constraints, trajectory problems.

All types are plain dataclasses holding numpy arrays and are treated as
immutable after construction; builders and solvers never mutate them.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


def _as_matrix(M, shape, name):
    M = np.asarray(M, dtype=float)
    if M.shape != shape:
        raise ConfigError(f"{name} has shape {M.shape}, expected {shape}")
    return M


def _check_psd(M, name, tol=1e-10):
    if not np.allclose(M, M.T, atol=1e-12):
        raise ConfigError(f"{name} must be symmetric")
    if M.size and np.min(np.linalg.eigvalsh(M)) < -tol:
        raise ConfigError(f"{name} must be positive semidefinite")


@dataclass(eq=False)
class SdlcsModel:
    """Discrete-time linear complementarity system with Gaussian uncertainty.

    Per-step dynamics   x' = A x + B u + C lam + g + w,      w ~ N(0, W)
    complementarity     0 <= lam  perp  D x + E u + F lam + h + v >= 0,
    with v ~ N(0, V).  Parameter uncertainty lives in sigma_C / sigma_F
    (elementwise standard deviations of the C and F entries) and sigma_h
    (elementwise standard deviations of the constant complementarity offset);
    those entries are drawn once per Monte Carlo trial, while w and v are
    drawn per step.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    D: np.ndarray
    E: np.ndarray
    F: np.ndarray
    g: np.ndarray
    h: np.ndarray
    W: np.ndarray
    V: np.ndarray
    sigma_C: np.ndarray
    sigma_F: np.ndarray
    sigma_h: np.ndarray

    def __post_init__(self):
        self.A = np.asarray(self.A, dtype=float)
        if self.A.ndim != 2 or self.A.shape[0] != self.A.shape[1]:
            raise ConfigError(f"A must be square, got {self.A.shape}")
        n_x = self.A.shape[0]
        self.B = np.asarray(self.B, dtype=float)
        if self.B.ndim != 2 or self.B.shape[0] != n_x:
            raise ConfigError(f"B has shape {self.B.shape}, expected ({n_x}, n_u)")
        n_u = self.B.shape[1]
        self.C = np.asarray(self.C, dtype=float)
        if self.C.ndim != 2 or self.C.shape[0] != n_x:
            raise ConfigError(f"C has shape {self.C.shape}, expected ({n_x}, n_c)")
        n_c = self.C.shape[1]
        self.D = _as_matrix(self.D, (n_c, n_x), "D")
        self.E = _as_matrix(self.E, (n_c, n_u), "E")
        self.F = _as_matrix(self.F, (n_c, n_c), "F")
        self.g = _as_matrix(self.g, (n_x,), "g")
        self.h = _as_matrix(self.h, (n_c,), "h")
        self.W = _as_matrix(self.W, (n_x, n_x), "W")
        self.V = _as_matrix(self.V, (n_c, n_c), "V")
        _check_psd(self.W, "W")
        _check_psd(self.V, "V")
        self.sigma_C = _as_matrix(self.sigma_C, (n_x, n_c), "sigma_C")
        self.sigma_F = _as_matrix(self.sigma_F, (n_c, n_c), "sigma_F")
        self.sigma_h = _as_matrix(self.sigma_h, (n_c,), "sigma_h")
        for name in ("sigma_C", "sigma_F", "sigma_h"):
            if np.any(getattr(self, name) < 0):
                raise ConfigError(f"{name} must be elementwise nonnegative")

    @property
    def n_x(self) -> int:
        return self.A.shape[0]

    @property
    def n_u(self) -> int:
        return self.B.shape[1]

    @property
    def n_c(self) -> int:
        return self.C.shape[1]

    @classmethod
    def noise_free(cls, A, B, C, D, E, F, g, h):
        """Model with all covariances and parameter deviations zero."""
        A = np.asarray(A, dtype=float)
        C = np.asarray(C, dtype=float)
        B = np.asarray(B, dtype=float)
        n_x, n_c = A.shape[0], C.shape[1]
        return cls(
            A=A, B=B, C=C, D=D, E=E, F=F, g=g, h=h,
            W=np.zeros((n_x, n_x)), V=np.zeros((n_c, n_c)),
            sigma_C=np.zeros((n_x, n_c)), sigma_F=np.zeros((n_c, n_c)),
            sigma_h=np.zeros(n_c),
        )


@dataclass(eq=False)
class LinearChanceConstraint:
    """One-sided linear state constraint a^T x_k <= b, enforced in probability.

    ``steps`` lists the time indices the constraint applies to.  A two-sided
    bound |a^T x| <= c is represented as two of these sharing the same
    per-constraint risk allocation, each with budget_share = 0.5.
    """

    a: np.ndarray
    b: float
    steps: tuple
    label: str
    budget_share: float = 1.0

    def __post_init__(self):
        self.a = np.asarray(self.a, dtype=float)
        if not np.any(self.a != 0.0):
            raise ConfigError(f"constraint {self.label!r} has a zero normal")
        self.b = float(self.b)
        self.steps = tuple(int(k) for k in self.steps)
        if not 0.0 < self.budget_share <= 1.0:
            raise ConfigError("budget_share must lie in (0, 1]")


@dataclass(eq=False)
class ChanceSpec:
    """Risk budget and complementarity relaxation parameters.

    Delta is the total violation probability for the joint constraint over
    the whole horizon; epsilon is the acceptable complementarity violation;
    big_m deactivates the constraints of the unselected mode.
    """

    delta: float
    path_constraints: list
    terminal_constraints: list
    epsilon: float
    big_m: float
    # When true, the contact-mode mean gap is held at the lower edge of its
    # admissible band instead of ranging over the whole band.  Every value
    # in the band carries the same violation risk, but the lower edge keeps
    # planned forces consistent with the exact complementarity an open-loop
    # replay realizes, which matters for stiff unilateral contacts.  The
    # full band keeps the feasible set nested as delta shrinks.
    pin_contact_band: bool = True

    def __post_init__(self):
        if not 0.0 < self.delta <= 0.5:
            raise ConfigError(f"delta must lie in (0, 0.5], got {self.delta}")
        if self.epsilon <= 0.0:
            raise ConfigError("epsilon must be positive")
        if self.big_m <= 0.0:
            raise ConfigError("big_m must be positive")

    @property
    def constraints_per_step(self) -> int:
        """Number of state chance constraints active at a single step (L)."""
        return max(len(self.path_constraints), 1)


@dataclass(eq=False)
class TrajectoryProblem:
    """A complete open-loop planning problem over horizon N."""

    name: str
    model: SdlcsModel
    N: int
    x_s: np.ndarray
    Sigma_s: np.ndarray
    Q: np.ndarray
    R: np.ndarray
    u_bounds: list  # per-input (lo, hi)
    lambda_u: float
    chance: ChanceSpec
    # Force magnitude used in the worst-case covariance terms.  The big-M
    # constant is a valid bound on lambda but vacuous as a worst case (it
    # would shut off every contact mode), so benchmarks set this to the
    # physical force scale of the task.  None means "use lambda_u".
    lambda_cov: float = None

    def __post_init__(self):
        m = self.model
        self.N = int(self.N)
        if self.N < 1:
            raise ConfigError("horizon N must be >= 1")
        self.x_s = _as_matrix(self.x_s, (m.n_x,), "x_s")
        self.Sigma_s = _as_matrix(self.Sigma_s, (m.n_x, m.n_x), "Sigma_s")
        _check_psd(self.Sigma_s, "Sigma_s")
        self.Q = _as_matrix(self.Q, (m.n_x, m.n_x), "Q")
        _check_psd(self.Q, "Q")
        self.R = _as_matrix(self.R, (m.n_u, m.n_u), "R")
        _check_psd(self.R, "R")
        if m.n_u and np.min(np.linalg.eigvalsh(self.R)) <= 0:
            raise ConfigError("R must be positive definite")
        self.u_bounds = [(float(lo), float(hi)) for lo, hi in self.u_bounds]
        if len(self.u_bounds) != m.n_u:
            raise ConfigError("u_bounds must have one (lo, hi) pair per input")
        self.lambda_u = float(self.lambda_u)
        if self.lambda_u <= 0:
            raise ConfigError("lambda_u must be positive")
        if self.lambda_cov is not None:
            self.lambda_cov = float(self.lambda_cov)

    @property
    def worst_case_lambda(self) -> float:
        return self.lambda_u if self.lambda_cov is None else self.lambda_cov

    def all_constraints(self):
        return list(self.chance.path_constraints) + list(
            self.chance.terminal_constraints
        )
