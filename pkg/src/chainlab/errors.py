"""Exception types shared across the package."""


class ChainLabError(Exception):
    """Base class for all chainlab errors."""


class DomainViolationError(ChainLabError, ValueError):
    """An input is outside the domain an operation is defined on."""


class NonFiniteError(ChainLabError, ArithmeticError):
    """A state update produced (or would produce) a non-finite value.

    Divergence is reported, never stored: no trajectory ever contains
    inf or nan.
    """

    def __init__(self, message: str, *, iteration: int | None = None,
                 chain: str | None = None):
        self.iteration = iteration
        self.chain = chain
        parts = [message]
        if chain is not None:
            parts.append(f"chain={chain}")
        if iteration is not None:
            parts.append(f"iteration={iteration}")
        super().__init__("; ".join(parts))


class DegenerateSeriesError(ChainLabError, ValueError):
    """A detector received a constant (zero-variance) series."""


class SingularDesignError(ChainLabError, ValueError):
    """A regression design matrix is rank-deficient."""


class InsufficientNeighborsError(ChainLabError, ValueError):
    """A cross-map library is too small for the neighbor count."""


class ConfigError(ChainLabError, ValueError):
    """An experiment config failed validation."""
