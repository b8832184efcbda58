"""Exception hierarchy shared by all modules."""


class LobachevskyError(Exception):
    """Base class for every error raised by this package."""


class DomainError(LobachevskyError, ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class RangeError(LobachevskyError, ValueError):
    """A value would overflow, or a sampling window is too short."""

    def __init__(self, message, suggested=None):
        super().__init__(message)
        self.suggested = suggested


class ConfigurationError(LobachevskyError, ValueError):
    """A numerical control parameter violates a documented threshold."""


class IntegrationError(LobachevskyError, ArithmeticError):
    """The adaptive integrator could not reach its target."""

    def __init__(self, message, xi_reached=None):
        super().__init__(message)
        self.xi_reached = xi_reached


class ExtrapolationError(LobachevskyError, ArithmeticError):
    """The boundary defect did not settle within the allowed depth."""


class RefinementError(LobachevskyError, ArithmeticError):
    """Root refinement exceeded its iteration cap."""


class SpectralConsistencyError(LobachevskyError):
    """Shooting and oracle disagree about how many eigenvalues there are."""


class IndexingConsistencyError(LobachevskyError):
    """An eigenfunction has the wrong number of nodes for its index."""
