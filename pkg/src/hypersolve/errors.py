"""Exception hierarchy shared across the package."""


class HypersolveError(Exception):
    """Base class for all package-specific errors."""


class ConfigurationError(HypersolveError):
    """A problem definition violates a mathematical precondition
    (non-positive-definite weight, bad physical parameters, ...)."""


class UsageError(HypersolveError):
    """An API was called with inconsistent arguments (dimension mismatch,
    wrong norm family, evaluation outside the domain, ...)."""


class InputDataError(HypersolveError):
    """Externally supplied data is unusable (non-finite values, unreadable
    files, malformed configs)."""


class EigenSolverError(HypersolveError):
    """The iterative symmetric eigensolver did not converge."""


class DegenerateSystemError(HypersolveError):
    """Every coefficient pencil is identically zero; no time step exists."""


class StabilityError(HypersolveError):
    """A requested step violates the CFL stability condition."""


class NumericalInstabilityError(HypersolveError):
    """Non-finite values appeared during time stepping."""


class IllPosedBoundaryError(HypersolveError):
    """The incoming-wave block of a boundary condition is (near) singular."""
