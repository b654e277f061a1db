"""Exception hierarchy shared by the solvers."""


class TfeFocusError(Exception):
    """Base class for all package errors."""


class ParameterError(TfeFocusError, ValueError):
    """Raised when inputs violate an operation's preconditions."""


class IntegrationError(TfeFocusError, RuntimeError):
    """Base class for failures of an initial value integration."""

    def __init__(self, message, y_reached=None):
        super().__init__(message)
        self.y_reached = y_reached


class StepSizeCollapse(IntegrationError):
    pass


class SolutionOverflow(IntegrationError):
    pass


class SingularMobility(IntegrationError):
    pass


class DegenerateOrigin(TfeFocusError, ValueError):
    """Origin start with vanishing mobility and no regularising floor."""


class FitError(TfeFocusError, ValueError):
    """Raised when a far-field fit is under-determined or ill-conditioned."""


class EigenvalueNotFound(TfeFocusError, RuntimeError):
    """No admissible eigenvalue was located in the searched bracket."""


class NoBracketFound(EigenvalueNotFound):
    """The shooting residual kept one sign over the searched range."""


class IndeterminateResidual(EigenvalueNotFound):
    """The profile and its slope are both negligible at the matching radius."""


class OscillatoryLoss(EigenvalueNotFound):
    """The growing far-field bundle no longer oscillates, so no radiation condition can be imposed."""


class UnverifiedRoot(EigenvalueNotFound):
    """A root of the residual at one radius fails the check at a second radius."""
