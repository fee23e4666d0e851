"""Exception hierarchy for sixvlab."""


class SixVertexLabError(Exception):
    """Base class for all sixvlab errors."""


class CapExceededError(SixVertexLabError, ValueError):
    """A size cap was exceeded (lattice width, slab width, enumeration size)."""


class ConfigError(SixVertexLabError, ValueError):
    """Invalid configuration file entry or flag value."""


class EigenSolverError(SixVertexLabError):
    """Eigenpair residual above tolerance or a degenerate top eigenvalue."""


class ConvergenceError(SixVertexLabError):
    """An iterative solver did not converge within its iteration budget."""


class MethodDisagreementError(SixVertexLabError):
    """Independent methods for the same quantity disagree beyond tolerance."""


class GammaPoleError(SixVertexLabError, ValueError):
    """The Gamma function was evaluated at one of its poles."""

    def __init__(self, location: complex):
        self.location = location
        super().__init__(f"Gamma pole hit at z = {location}")


class InvariantViolationError(SixVertexLabError):
    """A constructed object violates one of its structural invariants."""
