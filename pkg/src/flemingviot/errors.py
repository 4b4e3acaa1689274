"""Exception types raised across the package."""


class FullyAbsorbedError(ValueError):
    """The conditioned law is undefined because no survival mass remains."""


class ReducibleChainError(ValueError):
    """The generator does not have a unique stationary distribution."""


class StateSpaceTooLarge(ValueError):
    """Enumerating the configuration space would exceed the configured cap."""


class ConvergenceError(RuntimeError):
    """An iterative method hit its iteration cap.

    Parameters
    ----------
    message : str
        Human readable description.
    residual : float
        Residual reached at the last iterate.
    """

    def __init__(self, message, residual):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


class NonReversibleError(ValueError):
    """Detailed balance fails for the supplied distribution."""
