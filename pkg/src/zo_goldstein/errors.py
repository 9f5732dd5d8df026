"""Exception types shared across the package."""


class UsageError(ValueError):
    """Invalid arguments: wrong dimension, non-finite input, unknown name."""


class ConfigurationError(ValueError):
    """A hyper-parameter set violates a structural floor (e.g. M < 1)."""


class UnsupportedOperationError(RuntimeError):
    """The objective lacks an optional capability, such as a gradient oracle."""


class ConvergenceError(RuntimeError):
    """An iterative solver hit its iteration cap before reaching tolerance."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class NumericalFault(RuntimeError):
    """A non-finite value appeared during optimization."""

    def __init__(self, message: str, iteration: int):
        super().__init__(f"{message} at iteration {iteration}")
        self.iteration = iteration


class InvariantError(AssertionError):
    """A structural guarantee of the optimizer failed at runtime."""
