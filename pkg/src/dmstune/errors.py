"""Exception types shared across the package."""


class DmsError(Exception):
    """Base class for all package errors."""


class ShapeError(DmsError, ValueError):
    """Array dimensions do not match what the operation requires."""


class InvalidDimensionError(DmsError, ValueError):
    """Grid dimensions too small to carry an edge lattice."""


class DegenerateInputError(DmsError, ValueError):
    """Input is degenerate for the requested operation (e.g. constant image)."""


class DivergenceError(DmsError, RuntimeError):
    """The iterative solver produced a non-finite objective value.

    Carries the iteration index at which the blow-up was detected.
    """

    def __init__(self, message, iteration):
        super().__init__(f"{message} (iteration {iteration})")
        self.iteration = iteration


class JacobianOverflowError(DivergenceError):
    """Non-finite entries appeared in a propagated derivative field."""


class ConfigError(DmsError, ValueError):
    """Invalid or unknown configuration key/value."""
