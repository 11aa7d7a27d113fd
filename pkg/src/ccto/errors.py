"""Exception hierarchy shared across the toolkit."""


class CctoError(Exception):
    """Base class for all toolkit errors."""


class DimensionMismatch(CctoError):
    """Vector/matrix shapes are inconsistent."""


class DimensionTooLarge(CctoError):
    """Exhaustive check requested for a matrix that is too big."""


class NoSolution(CctoError):
    """Lemke terminated on a secondary ray; the LCP has no computed solution."""


class OutOfDomain(CctoError):
    """Argument outside the mathematical domain of the function."""


class BudgetTooLoose(CctoError):
    """Risk allocation produced a per-constraint probability >= 0.5."""


class NegativeVariance(CctoError):
    """A quadratic form that should be a variance came out negative."""


class InfeasibleByLemma1(CctoError):
    """Both complementarity modes are infeasible for some row/step.

    Carries the offending (step, row) pair and the feasibility thresholds so
    callers can print a useful diagnosis.
    """

    def __init__(self, step, row, theta, mode1_threshold, mode2_threshold):
        self.step = step
        self.row = row
        self.theta = theta
        self.mode1_threshold = mode1_threshold
        self.mode2_threshold = mode2_threshold
        super().__init__(
            f"complementarity row {row} at step {step} admits no feasible mode: "
            f"theta={theta:.3e} but mode-1 needs theta > {mode1_threshold:.3e} "
            f"and mode-2 needs theta > {mode2_threshold:.3e}"
        )


class QpInfeasible(CctoError):
    """The convex QP relaxation at a node is primal infeasible."""


class QpNumericalFailure(CctoError):
    """The QP engine failed to converge to the requested accuracy."""


class Infeasible(CctoError):
    """No integer-feasible leaf exists."""


class NodeLimitReached(CctoError):
    """Branch and bound hit the node budget; carries the incumbent if any."""

    def __init__(self, message, incumbent=None, nodes=0):
        self.incumbent = incumbent
        self.nodes = nodes
        super().__init__(message)


class ConfigError(CctoError):
    """Problem or run configuration failed to parse or validate."""
