"""Exception hierarchy.

Validation problems (bad input) and numerical guards (the requested quantity is
ill-defined at this point) are kept apart so the CLI can map them to distinct
exit codes.
"""


class QfikitError(Exception):
    """Base class for every error raised by qfikit."""


class ValidationError(QfikitError, ValueError):
    """Input does not satisfy a documented contract."""


class HermiticityError(ValidationError):
    pass


class InvalidState(ValidationError):
    pass


class PositivityViolation(ValidationError):
    pass


class NotPositiveSemidefinite(ValidationError):
    def __init__(self, message, eigenvalue=None):
        super().__init__(message)
        self.eigenvalue = eigenvalue


class DimensionError(ValidationError):
    pass


class NumericalGuard(QfikitError):
    """The computation reached a point where the requested quantity is singular."""


class DegenerateSpectrum(NumericalGuard):
    def __init__(self, message, eigenvalues=()):
        super().__init__(message)
        self.eigenvalues = tuple(eigenvalues)


class RankChangeDetected(NumericalGuard):
    def __init__(self, message, leak=None):
        super().__init__(message)
        self.leak = leak


class NegativeInformation(NumericalGuard):
    pass


class EigenSolverError(NumericalGuard):
    def __init__(self, message, residual=float("nan")):
        super().__init__(message)
        self.residual = residual


class SingularInformation(NumericalGuard):
    def __init__(self, message, null_direction=None):
        super().__init__(message)
        self.null_direction = null_direction


class NotApplicable(QfikitError):
    """Diagnostic cannot be evaluated for this input (e.g. an invariant state)."""
