"""Exception types shared across the package.

Input problems derive from ``ValueError``; numerical failures (no root, no
convergence) derive from ``NumericalError``. The CLI maps the two families to
exit codes 2 and 3.
"""


class DispersionRangeError(ValueError):
    """Wavelength outside the fitted range of a coefficient set."""


class NumericalError(RuntimeError):
    """A solver could not produce a result."""


class NoPhaseMatchError(NumericalError):
    pass


class NoEmissionError(NoPhaseMatchError):
    pass


class NearCollinearViolation(NoPhaseMatchError):
    pass


class ModeDarkError(NoPhaseMatchError):
    pass


class InvalidDensityMatrixError(ValueError):
    pass


class ConvergenceError(NumericalError):
    def __init__(self, message, best=None, diagnostics=None):
        super().__init__(message)
        self.best = best
        self.diagnostics = diagnostics or {}


class RecordFormatError(ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line
