"""Exception types raised by the library."""


class DfsBicError(Exception):
    """Base class for all library errors."""


class ValidationError(DfsBicError, ValueError):
    """Input parameters violate a precondition."""


class BandEdgeError(DfsBicError, ArithmeticError):
    """Evaluation at or beyond a band edge where the density of states diverges."""


class QuadratureError(DfsBicError, ArithmeticError):
    """A quadrature failed to reach the requested stability on refinement."""


class PoleProximityError(DfsBicError, ArithmeticError):
    """A resolvent was evaluated too close to one of its poles."""


class StepSizeError(DfsBicError, ArithmeticError):
    """The time step is too coarse for the requested accuracy."""


class PositivityError(DfsBicError, ArithmeticError):
    """A propagated density matrix lost positivity."""


class SingularIntegrandError(DfsBicError, ArithmeticError):
    """An integrand has a non-removable singularity on the integration path."""
