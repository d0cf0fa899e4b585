"""Covariance kernels E(X_s X_t) of zero-mean second-order processes.

Provides the built-in kernel families (Brownian motion, fractional
Brownian motion, Ornstein-Uhlenbeck started at zero, tabulated data),
pointwise evaluation, kernel matrices on grids, and increment-covariance
matrices on partitions.  All processes are zero-mean by convention; no
mean field exists anywhere in the library.

Kernels must be continuous and symmetric.  For tabulated data, bounded
variation of t -> K(s, t) cannot be verified from finitely many samples
and is recorded as an assumption the caller takes on.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import ArgumentError, DomainError, InvalidKernelError

__all__ = [
    "Interval",
    "Partition",
    "Kernel",
    "BrownianMotion",
    "FractionalBrownian",
    "OrnsteinUhlenbeck",
    "TabulatedKernel",
    "PSDWarning",
    "eval_kernel",
    "kernel_matrix",
    "increment_covariance",
]

_TABLE_SYMMETRY_TOL = 1e-12
_PSD_SOFT_TOL = 1e-10


class PSDWarning(UserWarning):
    """Tabulated kernel matrix has eigenvalues noticeably below zero."""


@dataclass(frozen=True)
class Interval:
    """Finite closed interval [a, b] with a < b."""

    a: float
    b: float

    def __post_init__(self):
        if not (np.isfinite(self.a) and np.isfinite(self.b)):
            raise ArgumentError(f"interval endpoints must be finite, got [{self.a}, {self.b}]")
        if not self.a < self.b:
            raise ArgumentError(f"interval requires a < b, got [{self.a}, {self.b}]")

    @property
    def length(self) -> float:
        return self.b - self.a

    def contains(self, t) -> bool:
        t = np.asarray(t)
        return bool(np.all((t >= self.a) & (t <= self.b)))


class Partition:
    """Strictly increasing points t_0 < t_1 < ... < t_n (n >= 1 increments)."""

    def __init__(self, points):
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 1 or pts.size < 2:
            raise ArgumentError("partition needs at least two points")
        if not np.all(np.isfinite(pts)):
            raise ArgumentError("partition points must be finite")
        if not np.all(np.diff(pts) > 0):
            raise ArgumentError("partition points must be strictly increasing")
        pts.setflags(write=False)
        self.points = pts

    def __repr__(self):
        p = self.points
        return f"Partition({p[0]:g}..{p[-1]:g}, {self.n_increments} increments)"

    @classmethod
    def uniform(cls, a: float, b: float, n: int) -> "Partition":
        """Uniform partition of [a, b] into n increments."""
        if n < 1:
            raise ArgumentError("uniform partition needs n >= 1 increments")
        return cls(np.linspace(a, b, n + 1))

    @property
    def n_increments(self) -> int:
        return self.points.size - 1

    @property
    def deltas(self) -> np.ndarray:
        return np.diff(self.points)

    @property
    def mesh(self) -> float:
        return float(np.max(self.deltas))


class Kernel:
    """Base class: a symmetric continuous covariance kernel K(s, t)."""

    #: inclusive domain bounds; None means unbounded on that side
    domain_low: float | None = 0.0
    domain_high: float | None = None

    def _check_domain(self, *args):
        for x in args:
            x = np.asarray(x)
            if self.domain_low is not None and np.any(x < self.domain_low):
                raise DomainError(
                    f"{type(self).__name__} kernel is defined for arguments >= {self.domain_low}"
                )
            if self.domain_high is not None and np.any(x > self.domain_high):
                raise DomainError(
                    f"{type(self).__name__} kernel is defined for arguments <= {self.domain_high}"
                )

    def __call__(self, s, t):
        self._check_domain(s, t)
        return self._evaluate(np.asarray(s, dtype=float), np.asarray(t, dtype=float))

    def _evaluate(self, s, t):  # pragma: no cover - abstract
        raise NotImplementedError

    @property
    def label(self) -> str:
        return type(self).__name__


@dataclass(frozen=True)
class BrownianMotion(Kernel):
    """Standard Brownian motion, K(s, t) = min(s, t)."""

    def _evaluate(self, s, t):
        return np.minimum(s, t)

    @property
    def label(self) -> str:
        return "brownian"


@dataclass(frozen=True)
class FractionalBrownian(Kernel):
    """Fractional Brownian motion with Hurst index H in (0, 1).

    K(s, t) = (s^{2H} + t^{2H} - |s - t|^{2H}) / 2.  H = 1/2 reduces to
    the Brownian kernel min(s, t).
    """

    hurst: float

    def __post_init__(self):
        if not 0.0 < self.hurst < 1.0:
            raise ArgumentError(f"Hurst index must lie in (0, 1), got {self.hurst}")

    def _evaluate(self, s, t):
        h2 = 2.0 * self.hurst
        return 0.5 * (s**h2 + t**h2 - np.abs(s - t) ** h2)

    @property
    def label(self) -> str:
        return f"fbm(H={self.hurst:g})"


@dataclass(frozen=True)
class OrnsteinUhlenbeck(Kernel):
    """Ornstein-Uhlenbeck process started at zero (so E X_t = 0, K(0, 0) = 0).

    K(s, t) = (sigma^2 / 2 theta) (exp(-theta |s - t|) - exp(-theta (s + t))).
    """

    theta: float = 1.0
    sigma: float = 1.0

    def __post_init__(self):
        if self.theta <= 0 or self.sigma <= 0:
            raise ArgumentError("OrnsteinUhlenbeck requires theta > 0 and sigma > 0")

    def _evaluate(self, s, t):
        scale = self.sigma**2 / (2.0 * self.theta)
        return scale * (np.exp(-self.theta * np.abs(s - t)) - np.exp(-self.theta * (s + t)))

    @property
    def label(self) -> str:
        return f"ou(theta={self.theta:g},sigma={self.sigma:g})"


class TabulatedKernel(Kernel):
    """Kernel given by a symmetric value table on a grid, bilinearly interpolated.

    The table must be symmetric to 1e-12 with a nonnegative diagonal.
    Positive semidefiniteness is checked softly: eigenvalues below
    -1e-10 times the largest one trigger a PSDWarning, not an error,
    since quadrature noise routinely produces tiny negative eigenvalues.
    """

    def __init__(self, grid, values):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.ndim != 1 or grid.size < 2 or not np.all(np.diff(grid) > 0):
            raise InvalidKernelError("tabulated grid must be ascending with >= 2 points")
        if values.shape != (grid.size, grid.size):
            raise InvalidKernelError(
                f"value table shape {values.shape} does not match grid size {grid.size}"
            )
        asym = np.max(np.abs(values - values.T))
        if asym > _TABLE_SYMMETRY_TOL:
            raise InvalidKernelError(f"value table asymmetric by {asym:.3e} (> 1e-12)")
        if np.any(np.diag(values) < 0):
            raise InvalidKernelError("value table has negative diagonal entries")
        eig = np.linalg.eigvalsh(0.5 * (values + values.T))
        if eig[0] < -_PSD_SOFT_TOL * max(eig[-1], 0.0):
            warnings.warn(
                f"tabulated kernel has eigenvalue {eig[0]:.3e} below the PSD tolerance",
                PSDWarning,
                stacklevel=2,
            )
        grid.setflags(write=False)
        values.setflags(write=False)
        self.grid = grid
        self.values = values
        self.domain_low = float(grid[0])
        self.domain_high = float(grid[-1])

    @classmethod
    def from_csv(cls, path) -> "TabulatedKernel":
        """Load a table: first row is the grid, following rows the matrix."""
        with open(path, newline="") as fh:
            rows = [[float(x) for x in row] for row in csv.reader(fh) if row]
        if len(rows) < 3:
            raise InvalidKernelError("tabulated CSV needs a grid row plus >= 2 matrix rows")
        return cls(np.array(rows[0]), np.array(rows[1:]))

    def _evaluate(self, s, t):
        # Evaluate at (min, max) only, so K(s, t) == K(t, s) bit for bit.
        lo, hi = np.minimum(s, t), np.maximum(s, t)
        i = np.clip(np.searchsorted(self.grid, lo, side="right") - 1, 0, self.grid.size - 2)
        j = np.clip(np.searchsorted(self.grid, hi, side="right") - 1, 0, self.grid.size - 2)
        dx = self.grid[i + 1] - self.grid[i]
        dy = self.grid[j + 1] - self.grid[j]
        u = (lo - self.grid[i]) / dx
        v = (hi - self.grid[j]) / dy
        vals = self.values
        return (
            (1 - u) * (1 - v) * vals[i, j]
            + u * (1 - v) * vals[i + 1, j]
            + (1 - u) * v * vals[i, j + 1]
            + u * v * vals[i + 1, j + 1]
        )

    @property
    def label(self) -> str:
        return f"tabulated(n={self.grid.size})"


def eval_kernel(kernel: Kernel, s, t):
    """Evaluate E(X_s X_t); symmetric in (s, t) by construction."""
    return kernel(s, t)


def kernel_matrix(kernel: Kernel, grid) -> np.ndarray:
    """Matrix M[i, j] = K(grid[i], grid[j]), each unordered pair evaluated once.

    The upper triangle is computed and mirrored, so the result is exactly
    symmetric regardless of the kernel's floating-point quirks.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size == 0:
        raise ArgumentError("grid must be a nonempty 1-d array")
    if grid.size > 1 and not np.all(np.diff(grid) > 0):
        raise ArgumentError("grid must be strictly ascending")
    n = grid.size
    iu, ju = np.triu_indices(n)
    vals = kernel(grid[iu], grid[ju])
    out = np.empty((n, n))
    out[iu, ju] = vals
    out[ju, iu] = vals
    return out


def increment_covariance(kernel: Kernel, partition: Partition) -> np.ndarray:
    """Covariances E(dX_i dX_j) of the partition's increments.

    C[i, j] = K(t_{i+1}, t_{j+1}) - K(t_{i+1}, t_j) - K(t_i, t_{j+1}) + K(t_i, t_j),
    assembled from a single kernel matrix so it stays exactly symmetric.
    """
    if not isinstance(partition, Partition):
        partition = Partition(partition)
    m = kernel_matrix(kernel, partition.points)
    return m[1:, 1:] - m[1:, :-1] - m[:-1, 1:] + m[:-1, :-1]
