"""Exception hierarchy for adp_lab."""


class AdpLabError(Exception):
    """Base class for all errors raised by this package."""


class InvalidParameterError(AdpLabError, ValueError):
    """A numeric parameter is outside its admissible range."""


class InvalidInputError(AdpLabError, ValueError):
    """An input signal or operator is not admissible (e.g. zero data)."""


class InvalidDimensionError(InvalidInputError):
    """Grid size or array shapes do not match."""


class SingularSystemError(AdpLabError, ArithmeticError):
    """A linear system that must be solved is (numerically) singular."""


class NoConvergenceError(AdpLabError, RuntimeError):
    """An iterative search did not converge; carries diagnostics."""

    def __init__(self, message, **diagnostics):
        super().__init__(message)
        self.diagnostics = diagnostics


class DivergenceError(AdpLabError, RuntimeError):
    """Gradient descent loss increased for too many consecutive steps."""


class InfeasibleError(AdpLabError, ValueError):
    """No linear operator can make the requested point a minimizer."""


class InvalidSubgradientError(AdpLabError, ValueError):
    """The supplied vector is not a subgradient of the penalty."""


class InconsistentInputError(AdpLabError, ValueError):
    """Inputs contradict a relation they are assumed to satisfy."""
