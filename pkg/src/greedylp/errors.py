"""Exception types shared across the package."""


class BudgetExceededError(RuntimeError):
    """A combinatorial sweep would evaluate more subsets than the configured budget."""


class DegenerateSystemError(RuntimeError):
    """A linear or interpolation system has no usable solution (dependent atoms,
    singular matrix, or all selection scores zero against a nonzero residual)."""


class ConvergenceError(RuntimeError):
    """An iterative inner solver stagnated before reaching its certificate."""
