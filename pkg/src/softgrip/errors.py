"""Exception hierarchy shared across the simulator, environment, and tooling."""


class SoftGripError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(SoftGripError):
    """A config value is invalid or inconsistent (bad range, CFL violation, ...)."""


class SolverInstabilityError(SoftGripError):
    """The explicit solver produced a non-physical state (J <= 0, NaN, ...).

    Carries the index of the first offending particle when known.
    """

    def __init__(self, message, particle_index=None):
        super().__init__(message)
        self.particle_index = particle_index


class OutOfDomainError(SolverInstabilityError):
    """A particle left the valid interior of the background grid."""


class CflViolationError(ConfigurationError):
    """Requested dt exceeds the CFL bound; carries the largest admissible dt."""

    def __init__(self, dt, dt_required):
        super().__init__(
            f"dt={dt:.3e} s violates the CFL bound; use dt <= {dt_required:.3e} s"
        )
        self.dt_required = dt_required


class ContractViolation(SoftGripError):
    """An input violates a documented precondition (e.g. asymmetric stress tensor)."""


class DegenerateTopKError(ContractViolation):
    """floor(K*N/100) == 0: the top-K selection would be empty."""


class DegenerateObservationError(SoftGripError):
    """No surface point survived camera culling; the episode cannot continue."""


class WorkspaceError(SoftGripError):
    """Randomized scene could not be placed inside the workspace."""


class LearnerDivergedError(SoftGripError):
    """A training loss became non-finite; carries a diagnostic snapshot dict."""

    def __init__(self, message, snapshot=None):
        super().__init__(message)
        self.snapshot = snapshot or {}


class DemoIntegrityError(SoftGripError):
    """A stored demonstration fails replay verification or schema checks."""
