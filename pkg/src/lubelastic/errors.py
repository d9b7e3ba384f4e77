"""Exception types shared across the package."""


class ParameterError(ValueError):
    """A physical or numerical parameter is outside its admissible range."""


class RegimeError(ParameterError):
    """A scaling regime was requested with inadmissible exponents."""


class GridMismatchError(ValueError):
    """Two fields that must share a grid or node set do not."""


class AssemblyError(RuntimeError):
    """A per-mode operator could not be factorized.

    The coupled step operator is symmetric positive definite for every
    wavenumber, so a failed factorization signals a discretization bug,
    not a hard problem instance.
    """


class PositivityError(RuntimeError):
    """Film height dropped below the positivity floor and internal time-step
    halving could not recover.  Carries the last valid state."""

    def __init__(self, message, last_state=None):
        super().__init__(message)
        self.last_state = last_state


class DegenerateFitError(ValueError):
    """A rate fit was requested on data that cannot support one, e.g.
    machine-exact zero errors."""


class UsageError(ValueError):
    """Invalid configuration document or command-line usage."""
