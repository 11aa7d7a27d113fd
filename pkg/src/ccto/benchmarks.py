"""The three benchmark systems: cartpole with softwalls, sliding box, dual manipulators.

Each builder returns a fully populated TrajectoryProblem: discretized
dynamics (explicit Euler at dt = 0.033), noise specification, chance
constraints with their risk allocations, and the MIQP constants.
"""

from dataclasses import dataclass, field

import numpy as np

from .models import ChanceSpec, LinearChanceConstraint, SdlcsModel, TrajectoryProblem

DT = 0.033
GRAVITY = 9.81

# Symmetric control bound applied to every benchmark.  The problems bound u
# by a convex polytope but no numeric value is fixed by the task itself, so
# this is a documented default that the config file can override.
DEFAULT_U_BOUND = 20.0


@dataclass(eq=False)
class ContinuousTerms:
    """Continuous-time dynamics plus complementarity rows.

    The complementarity block (D, E, F, h) is per-step algebraic and passes
    through discretization verbatim.  ``algebraic_rows`` marks quasi-static
    states whose next value is assigned directly as (B_row u + C_row lam):
    those rows skip the I + dt * A_c update.
    """

    A: np.ndarray
    B: np.ndarray
    C: np.ndarray
    g: np.ndarray
    D: np.ndarray
    E: np.ndarray
    F: np.ndarray
    h: np.ndarray
    algebraic_rows: dict = field(default_factory=dict)


def discretize_explicit_euler(terms: ContinuousTerms, dt: float) -> SdlcsModel:
    """Explicit Euler discretization: A = I + dt A_c, B = dt B_c, etc.

    Rows listed in terms.algebraic_rows are replaced wholesale: the state is
    defined by the forces at the same step rather than integrated.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    A_c = np.asarray(terms.A, dtype=float)
    n_x = A_c.shape[0]
    A = np.eye(n_x) + dt * A_c
    B = dt * np.asarray(terms.B, dtype=float)
    C = dt * np.asarray(terms.C, dtype=float)
    g = dt * np.asarray(terms.g, dtype=float)
    for row, (b_row, c_row) in terms.algebraic_rows.items():
        A[row, :] = 0.0
        B[row, :] = np.asarray(b_row, dtype=float)
        C[row, :] = np.asarray(c_row, dtype=float)
        g[row] = 0.0
    return SdlcsModel.noise_free(
        A=A, B=B, C=C, D=terms.D, E=terms.E, F=terms.F, g=g, h=terms.h
    )


def _with_noise(model: SdlcsModel, W=None, V=None, sigma_C=None, sigma_F=None,
                sigma_h=None) -> SdlcsModel:
    return SdlcsModel(
        A=model.A, B=model.B, C=model.C, D=model.D, E=model.E, F=model.F,
        g=model.g, h=model.h,
        W=model.W if W is None else W,
        V=model.V if V is None else V,
        sigma_C=model.sigma_C if sigma_C is None else sigma_C,
        sigma_F=model.sigma_F if sigma_F is None else sigma_F,
        sigma_h=model.sigma_h if sigma_h is None else sigma_h,
    )


def build_cartpole(delta: float = 0.1, u_bound: float = DEFAULT_U_BOUND,
                   dt: float = DT) -> TrajectoryProblem:
    """Cartpole between two soft walls; contact forces from wall springs.

    States (cart position, pole angle, and their rates); two wall forces.
    Wall stiffness uncertainty (std 1e-5 on the compliances 1/k1, 1/k2) and
    additive position/angle noise (std 2e-4 per step).
    """
    m_p, m_c, length, d_wall = 0.1, 1.0, 0.5, 0.15
    k1 = k2 = 10.0
    N = 20

    A_c = np.array([
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
        [0.0, GRAVITY * m_p / m_c, 0.0, 0.0],
        [0.0, GRAVITY * (m_c + m_p) / (length * m_c), 0.0, 0.0],
    ])
    B_c = np.array([[0.0], [0.0], [1.0 / m_c], [1.0 / (length * m_c)]])
    C_c = np.array([
        [0.0, 0.0],
        [0.0, 0.0],
        [0.0, 0.0],
        [1.0 / (length * m_p), -1.0 / (length * m_p)],
    ])
    D = np.array([
        [-1.0, length, 0.0, 0.0],
        [1.0, -length, 0.0, 0.0],
    ])
    E = np.zeros((2, 1))
    F = np.diag([1.0 / k1, 1.0 / k2])
    h = np.array([d_wall, d_wall])
    base = discretize_explicit_euler(
        ContinuousTerms(A=A_c, B=B_c, C=C_c, g=np.zeros(4), D=D, E=E, F=F, h=h),
        dt,
    )

    noise_std = 2e-4
    W = np.diag([noise_std ** 2, noise_std ** 2, 0.0, 0.0])
    sigma_F = np.diag([1e-5, 1e-5])
    model = _with_noise(base, W=W, sigma_F=sigma_F)

    path = [
        LinearChanceConstraint(a=[1, 0, 0, 0], b=0.05, steps=range(N),
                               label="x1<=0.05"),
        LinearChanceConstraint(a=[0, 1, 0, 0], b=0.15, steps=range(N),
                               label="x2<=0.15"),
    ]
    terminal = (
        _two_sided([1, 0, 0, 0], 0.02, N, "x1_N") +
        _two_sided([0, 1, 0, 0], 0.04, N, "x2_N")
    )
    chance = ChanceSpec(delta=delta, path_constraints=path,
                        terminal_constraints=terminal, epsilon=0.002, big_m=100.0)
    return TrajectoryProblem(
        name="cartpole",
        model=model,
        N=N,
        x_s=np.array([-0.15, 0.0, 0.0, 0.0]),
        Sigma_s=np.zeros((4, 4)),
        Q=np.zeros((4, 4)),
        R=np.array([[0.01]]),
        u_bounds=[(-u_bound, u_bound)],
        lambda_u=100.0,
        chance=chance,
        lambda_cov=1.0,
    )


def build_sliding_box(delta: float = 0.1, u_bound: float = DEFAULT_U_BOUND,
                      dt: float = DT) -> TrajectoryProblem:
    """Box sliding on a plane under Coulomb friction, quasi-static dynamics.

    States (position, velocity); forces (gamma, lam+, lam-) where gamma is
    the friction slack.  Velocity is algebraic: x2 = (u + lam+ - lam-) / alpha.
    """
    alpha, mass, mu = 4.0, 1.0, 0.1
    N = 20

    A_c = np.array([[0.0, 1.0], [0.0, 0.0]])
    D = np.zeros((3, 2))
    E = np.array([[0.0], [1.0], [-1.0]])
    F = np.array([
        [0.0, -1.0, -1.0],
        [1.0, 1.0, -1.0],
        [1.0, -1.0, 1.0],
    ])
    h = np.array([mu * mass * GRAVITY, 0.0, 0.0])
    base = discretize_explicit_euler(
        ContinuousTerms(
            A=A_c, B=np.zeros((2, 1)), C=np.zeros((2, 3)), g=np.zeros(2),
            D=D, E=E, F=F, h=h,
            algebraic_rows={1: ([1.0 / alpha],
                                [0.0, 1.0 / alpha, -1.0 / alpha])},
        ),
        dt,
    )

    W = np.diag([(4e-4) ** 2, 0.0])
    sigma_h = np.array([1e-5 * mass * GRAVITY, 0.0, 0.0])  # friction coefficient noise
    model = _with_noise(base, W=W, sigma_h=sigma_h)

    path = [
        LinearChanceConstraint(a=[-1, 0], b=-0.885, steps=range(N),
                               label="x1>=0.885"),
    ]
    terminal = (
        _band([1, 0], 0.89, 0.91, N, "x1_N") +
        _two_sided([0, 1], 0.1, N, "x2_N")
    )
    chance = ChanceSpec(delta=delta, path_constraints=path,
                        terminal_constraints=terminal, epsilon=0.01, big_m=100.0)
    return TrajectoryProblem(
        name="sliding_box",
        model=model,
        N=N,
        x_s=np.array([1.0, -1.0]),
        Sigma_s=np.zeros((2, 2)),
        Q=np.zeros((2, 2)),
        R=np.array([[0.01]]),
        u_bounds=[(-u_bound, u_bound)],
        lambda_u=100.0,
        chance=chance,
        lambda_cov=10.0,
    )


def build_dual_manipulators(delta: float = 0.1, u_bound: float = DEFAULT_U_BOUND,
                            dt: float = DT) -> TrajectoryProblem:
    """Box regulated by two arms through compliant contact plus friction.

    States (box position/velocity, left arm position/velocity, right arm
    position/velocity); forces (lam1, lam2, gamma, lam+, lam-).  The box is
    quasi-static like the sliding box; the arms are double integrators.
    """
    alpha, mass, mu, k = 4.0, 1.0, 0.1, 100.0
    N = 20

    A_c = np.zeros((6, 6))
    A_c[0, 1] = 1.0
    A_c[2, 3] = 1.0
    A_c[4, 5] = 1.0
    B_c = np.zeros((6, 2))
    B_c[3, 0] = 1.0
    B_c[5, 1] = 1.0
    D = np.array([
        [1.0, 0.0, -1.0, 0.0, 0.0, 0.0],
        [-1.0, 0.0, 0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    ])
    E = np.zeros((5, 2))
    F = np.array([
        [1.0 / k, 0.0, 0.0, 0.0, 0.0],
        [0.0, 1.0 / k, 0.0, 0.0, 0.0],
        [0.0, 0.0, 0.0, -1.0, -1.0],
        [1.0, -1.0, 1.0, 1.0, -1.0],
        [-1.0, 1.0, 1.0, -1.0, 1.0],
    ])
    h = np.array([0.0, 0.0, mu * mass * GRAVITY, 0.0, 0.0])
    base = discretize_explicit_euler(
        ContinuousTerms(
            A=A_c, B=B_c, C=np.zeros((6, 5)), g=np.zeros(6),
            D=D, E=E, F=F, h=h,
            algebraic_rows={1: ([0.0, 0.0],
                                [1.0 / alpha, -1.0 / alpha, 0.0,
                                 1.0 / alpha, -1.0 / alpha])},
        ),
        dt,
    )

    W = np.zeros((6, 6))
    W[0, 0] = (2e-4) ** 2
    sigma_F = np.zeros((5, 5))
    sigma_F[0, 0] = 1e-4  # compliance 1/k of the left contact
    sigma_F[1, 1] = 1e-4  # compliance 1/k of the right contact
    sigma_h = np.array([0.0, 0.0, 1e-4 * mass * GRAVITY, 0.0, 0.0])
    model = _with_noise(base, W=W, sigma_F=sigma_F, sigma_h=sigma_h)

    path = [
        LinearChanceConstraint(a=[-1, 0, 0, 0, 0, 0], b=0.17, steps=range(N),
                               label="x1>=-0.17"),
    ]
    terminal = _two_sided([1, 0, 0, 0, 0, 0], 0.01, N, "x1_N")
    # The full contact band (no pinning) keeps the feasible set nested as
    # delta shrinks; with two stiff opposing contacts the replay benefit of
    # pinning is lost anyway because the contact LCP here has multiple
    # solutions and the plant may realize a different one.
    chance = ChanceSpec(delta=delta, path_constraints=path,
                        terminal_constraints=terminal, epsilon=0.0042,
                        big_m=50.0, pin_contact_band=False)
    return TrajectoryProblem(
        name="dual_manipulators",
        model=model,
        N=N,
        x_s=np.array([0.1, -1.1, 0.0, 0.0, 0.1, 0.0]),
        Sigma_s=np.zeros((6, 6)),
        Q=np.zeros((6, 6)),
        R=np.diag([1.0, 1.0]),
        u_bounds=[(-u_bound, u_bound), (-u_bound, u_bound)],
        lambda_u=50.0,
        chance=chance,
        lambda_cov=1.0,
    )


BUILDERS = {
    "cartpole": build_cartpole,
    "sliding_box": build_sliding_box,
    "dual_manipulators": build_dual_manipulators,
}


def _two_sided(a, bound, step, label):
    """|a^T x| <= bound as two one-sided halves sharing one allocation."""
    a = np.asarray(a, dtype=float)
    return [
        LinearChanceConstraint(a=a, b=bound, steps=[step],
                               label=f"{label}<={bound}", budget_share=0.5),
        LinearChanceConstraint(a=-a, b=bound, steps=[step],
                               label=f"{label}>=-{bound}", budget_share=0.5),
    ]


def _band(a, lo, hi, step, label):
    """lo <= a^T x <= hi as two one-sided halves sharing one allocation."""
    a = np.asarray(a, dtype=float)
    return [
        LinearChanceConstraint(a=a, b=hi, steps=[step],
                               label=f"{label}<={hi}", budget_share=0.5),
        LinearChanceConstraint(a=-a, b=-lo, steps=[step],
                               label=f"{label}>={lo}", budget_share=0.5),
    ]
