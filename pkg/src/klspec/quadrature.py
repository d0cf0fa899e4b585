"""Quadrature rules used to discretize integral operators on an interval.

Two kinds are supported: composite trapezoid and (optionally composite)
Gauss-Legendre.  Composite Gauss-Legendre with a power-of-two panel count
is the right grid for piecewise-constant basis families whose jumps sit
at dyadic points, because no node ever lands on a jump.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ArgumentError
from .kernels import Interval

__all__ = [
    "QuadratureRule",
    "trapezoid_rule",
    "gauss_legendre_rule",
    "rule_for_grid",
    "make_rule",
]

_WEIGHT_SUM_RTOL = 1e-12


@dataclass(frozen=True, eq=False)
class QuadratureRule:
    """Nodes and positive weights on an interval; sum of weights = b - a."""

    interval: Interval
    nodes: np.ndarray = field(repr=False)
    weights: np.ndarray = field(repr=False)
    kind: str = "trapezoid"
    panels: int = 1

    def __post_init__(self):
        nodes = np.asarray(self.nodes, dtype=float)
        weights = np.asarray(self.weights, dtype=float)
        if nodes.ndim != 1 or nodes.shape != weights.shape or nodes.size < 2:
            raise ArgumentError("rule needs matching 1-d nodes and weights, >= 2 points")
        if not np.all(np.diff(nodes) > 0):
            raise ArgumentError("quadrature nodes must be strictly ascending")
        if nodes[0] < self.interval.a - 1e-14 or nodes[-1] > self.interval.b + 1e-14:
            raise ArgumentError("quadrature nodes must lie inside the interval")
        if np.any(weights <= 0):
            raise ArgumentError("quadrature weights must all be positive")
        total = float(np.sum(weights))
        if abs(total - self.interval.length) > _WEIGHT_SUM_RTOL * self.interval.length:
            raise ArgumentError(
                f"weights sum to {total!r}, expected interval length {self.interval.length!r}"
            )
        nodes.setflags(write=False)
        weights.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def n(self) -> int:
        return self.nodes.size

    def integrate(self, values) -> float:
        """Weighted sum approximating the integral of sampled values."""
        return float(np.dot(self.weights, values))

    def __repr__(self):
        return (
            f"QuadratureRule({self.kind}, n={self.n}, panels={self.panels}, "
            f"[{self.interval.a:g}, {self.interval.b:g}])"
        )


def trapezoid_rule(interval: Interval, n: int) -> QuadratureRule:
    """Composite trapezoid rule with n equally spaced nodes including endpoints."""
    if n < 2:
        raise ArgumentError("trapezoid rule needs n >= 2 nodes")
    nodes = np.linspace(interval.a, interval.b, n)
    h = interval.length / (n - 1)
    weights = np.full(n, h)
    weights[0] = weights[-1] = h / 2
    return QuadratureRule(interval, nodes, weights, kind="trapezoid", panels=n - 1)


def gauss_legendre_rule(interval: Interval, n: int, panels: int = 1) -> QuadratureRule:
    """Gauss-Legendre rule with n nodes total, split over equal panels.

    panels=1 gives the classical global rule; panels > 1 a composite rule
    with n // panels points per panel (n must be divisible by panels).
    """
    if n < 2:
        raise ArgumentError("gauss-legendre rule needs n >= 2 nodes")
    if panels < 1 or n % panels != 0:
        raise ArgumentError(f"cannot split {n} nodes over {panels} equal panels")
    per = n // panels
    x, w = np.polynomial.legendre.leggauss(per)
    edges = np.linspace(interval.a, interval.b, panels + 1)
    half = np.diff(edges) / 2.0
    mid = (edges[:-1] + edges[1:]) / 2.0
    nodes = (mid[:, None] + half[:, None] * x[None, :]).ravel()
    weights = (half[:, None] * w[None, :]).ravel()
    return QuadratureRule(interval, nodes, weights, kind="gauss-legendre", panels=panels)


def rule_for_grid(grid) -> QuadratureRule:
    """Trapezoid-type weights for an arbitrary ascending grid.

    Used when eigenfunction samples arrive on a user grid rather than on
    a constructed rule; weights are the usual half-cell sums.
    """
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or grid.size < 2 or not np.all(np.diff(grid) > 0):
        raise ArgumentError("grid must be ascending with >= 2 points")
    d = np.diff(grid)
    weights = np.empty(grid.size)
    weights[0] = d[0] / 2
    weights[-1] = d[-1] / 2
    weights[1:-1] = (d[:-1] + d[1:]) / 2
    interval = Interval(float(grid[0]), float(grid[-1]))
    return QuadratureRule(interval, grid, weights, kind="trapezoid", panels=grid.size - 1)


def make_rule(interval: Interval, n: int, kind: str, panels: int | None = None) -> QuadratureRule:
    """Dispatch on rule kind string ('trapezoid' or 'gauss-legendre')."""
    if kind == "trapezoid":
        return trapezoid_rule(interval, n)
    if kind == "gauss-legendre":
        return gauss_legendre_rule(interval, n, panels=panels or 1)
    raise ArgumentError(f"unknown quadrature kind {kind!r}")
