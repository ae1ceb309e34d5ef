"""Exception hierarchy."""


class MomentDGError(Exception):
    """Base class for all errors raised by the package."""


class QuadratureCapError(MomentDGError, ValueError):
    """Requested moment order exceeds the quadrature cap."""


class DegeneratePolynomialError(MomentDGError, ValueError):
    """Polynomial is identically zero where a root set was requested."""


class RealizabilityError(MomentDGError):
    """A distribution has no valid macroscopic state.

    ``element`` is set when the failure is attributable to one DG element.
    """

    def __init__(self, message, element=None):
        if element is not None:
            message = f"element {element}: {message}"
        super().__init__(message)
        self.element = element


class VacuumError(RealizabilityError):
    """Density is zero or negative."""


class NonRealizableError(RealizabilityError):
    """Density is positive but the temperature is not."""


class BoundaryFluxError(MomentDGError):
    """Outgoing wall mass flux has the wrong sign."""


class SingularBlockError(MomentDGError, ArithmeticError):
    def __init__(self, block):
        super().__init__(f"singular diagonal block {block} after elimination")
        self.block = block


class ConvergenceError(MomentDGError):
    """Newton iteration failed; ``trace`` holds residual norms so far."""

    def __init__(self, message, trace=None):
        super().__init__(message)
        self.trace = list(trace or [])


class ConfigError(MomentDGError, ValueError):
    """Invalid run configuration; ``field`` names the offending entry."""

    def __init__(self, field, message):
        super().__init__(f"{field}: {message}")
        self.field = field
