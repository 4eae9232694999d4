"""Exception types shared across the package."""


class ChronosError(Exception):
    """Base class for all chronos errors."""


class NotHermitian(ChronosError):
    """Matrix fails the Hermitian symmetry check."""


class NotPSD(ChronosError):
    """Matrix has an eigenvalue below the allowed negative tolerance."""


class DomainError(ChronosError):
    """Argument outside the mathematical domain of the operation."""


class SolverFailure(ChronosError):
    """SDP solve ended in a non-optimal status.

    Carries the solver status string and the residual summary so callers can
    report what went wrong instead of silently using a bad solution.
    """

    def __init__(self, status, residuals=None):
        self.status = status
        self.residuals = dict(residuals or {})
        msg = f"solver status {status!r}"
        if self.residuals:
            detail = ", ".join(f"{k}={v:.3e}" for k, v in self.residuals.items())
            msg += f" ({detail})"
        super().__init__(msg)


class RemotePrepMismatch(ChronosError):
    """Conditional operators do not sum to the marginal of the joint state."""


class EigenbasisMismatch(ChronosError):
    """Propagated and target oracle marginals disagree; solution is corrupt."""


class NonDecreasingCost(ChronosError):
    """Estimate refinement increased the cost; statistic does not match the cost."""


class QuadratureNotConverged(ChronosError):
    """Panel halving changed the integral by more than the allowed tolerance."""


class ConfigError(ChronosError):
    """Run configuration failed schema validation."""
