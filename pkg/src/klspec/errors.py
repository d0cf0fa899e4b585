"""Exception hierarchy shared by all klspec modules.

The CLI maps these onto exit-code categories, so new exceptions should
subclass one of the three roots: configuration problems, bad arguments,
or numerical failures.
"""


class KLSpecError(Exception):
    """Base class for all library errors."""


class ArgumentError(KLSpecError, ValueError):
    """Invalid argument combination (mismatched grids, bad ordering, ...)."""


class DomainError(ArgumentError):
    """Kernel evaluated outside its natural domain."""


class InvalidKernelError(ArgumentError):
    """Kernel data violates a structural requirement (e.g. asymmetric table)."""


class BoundaryConditionError(ArgumentError):
    """Integrand does not satisfy the boundary values an operation requires."""


class InsufficientSampleError(ArgumentError):
    """Too few Monte Carlo samples for the requested statistic."""


class UndefinedEntropyError(ArgumentError):
    """Entropy requested for an all-zero weight sequence."""


class InvalidBasisError(ArgumentError):
    """Sampled family is not orthonormal under the grid's quadrature weights."""


class NumericError(KLSpecError):
    """A numerical procedure failed (non-convergence, solver breakdown)."""


class EmptySpectrumError(NumericError):
    """Every eigenvalue fell below the truncation cutoff."""


class ConvergenceError(NumericError):
    """Refinement did not reach tolerance; carries the last two approximants."""

    def __init__(self, message, last=None, previous=None):
        super().__init__(message)
        self.last = last
        self.previous = previous


class ConfigError(KLSpecError):
    """Experiment configuration is malformed or inconsistent."""
