"""Exception types shared across the package."""


class GridMismatchError(ValueError):
    """Operands live on different (or incompatible) age grids."""


class IntegrationError(RuntimeError):
    """The time integrator could not complete a step."""


class SolverError(RuntimeError):
    """An iterative solver failed to converge or stalled."""


class NonSeparableKernelError(ValueError):
    """An operation requiring beta(x, y) = beta(y) got a general kernel."""
