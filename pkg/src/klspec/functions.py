"""Integrand families f(t): continuous, of bounded variation on any finite interval.

Every family evaluates pointwise (vectorized) and exposes a derivative,
which is what the fast Stieltjes paths and the a priori bound need.  The
derivative of a piecewise-linear integrand is piecewise constant and is
returned as a `PiecewiseConstant`, evaluable but not itself a shipped
integrand family.

Complex integrands are supported by pairing two real families in a
`ComplexFunction`; downstream code takes |.|^2 as the complex modulus.
"""

from __future__ import annotations

import numpy as np

from .errors import ArgumentError

__all__ = [
    "Constant",
    "Polynomial",
    "Sine",
    "PiecewiseLinear",
    "PiecewiseConstant",
    "SampledFunction",
    "ComplexFunction",
]


class Constant:
    """f(t) = c."""

    def __init__(self, value: float):
        self.value = float(value)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        return np.full(t.shape, self.value) if t.ndim else self.value

    def derivative(self):
        return Constant(0.0)

    breakpoints: tuple = ()
    cycles_per_unit: float = 0.0

    @property
    def label(self) -> str:
        return f"constant({self.value:g})"

    def __repr__(self):
        return self.label


class Polynomial:
    """f(t) = sum_i coefficients[i] * t^i (ascending powers)."""

    def __init__(self, coefficients):
        coef = np.atleast_1d(np.asarray(coefficients, dtype=float))
        if coef.ndim != 1 or coef.size == 0:
            raise ArgumentError("polynomial needs a 1-d coefficient sequence")
        self.coefficients = coef
        self._poly = np.polynomial.Polynomial(coef)

    def __call__(self, t):
        return self._poly(np.asarray(t, dtype=float))

    def derivative(self):
        return Polynomial(self._poly.deriv().coef)

    breakpoints: tuple = ()
    cycles_per_unit: float = 0.0

    @property
    def label(self) -> str:
        return "poly[" + ",".join(f"{c:g}" for c in self.coefficients) + "]"

    def __repr__(self):
        return self.label


class Sine:
    """f(t) = amplitude * sin(omega * t + phase)."""

    def __init__(self, amplitude: float = 1.0, omega: float = np.pi, phase: float = 0.0):
        self.amplitude = float(amplitude)
        self.omega = float(omega)
        self.phase = float(phase)

    def __call__(self, t):
        return self.amplitude * np.sin(self.omega * np.asarray(t, dtype=float) + self.phase)

    def derivative(self):
        return Sine(self.amplitude * self.omega, self.omega, self.phase + np.pi / 2)

    breakpoints: tuple = ()

    @property
    def cycles_per_unit(self) -> float:
        return abs(self.omega) / (2 * np.pi)

    @property
    def label(self) -> str:
        return f"sine(a={self.amplitude:g},w={self.omega:g},p={self.phase:g})"

    def __repr__(self):
        return self.label


class PiecewiseConstant:
    """Right-continuous step function on knots; the last piece extends right."""

    def __init__(self, knots, values):
        knots = np.asarray(knots, dtype=float)
        values = np.asarray(values, dtype=float)
        if knots.size != values.size + 1:
            raise ArgumentError("need one value per interval between knots")
        if not np.all(np.diff(knots) > 0):
            raise ArgumentError("knots must be strictly increasing")
        self.knots = knots
        self.values = values

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        idx = np.clip(np.searchsorted(self.knots, t, side="right") - 1, 0, self.values.size - 1)
        out = self.values[idx]
        return out if t.ndim else float(out)

    @property
    def breakpoints(self):
        return tuple(self.knots[1:-1])

    cycles_per_unit: float = 0.0


class PiecewiseLinear:
    """Continuous piecewise-linear interpolant through (x, y) knot pairs."""

    def __init__(self, knots):
        pts = np.asarray(knots, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise ArgumentError("knots must be a sequence of >= 2 (x, y) pairs")
        if not np.all(np.diff(pts[:, 0]) > 0):
            raise ArgumentError("knot abscissae must be strictly increasing")
        self.x = pts[:, 0]
        self.y = pts[:, 1]

    def __call__(self, t):
        return np.interp(np.asarray(t, dtype=float), self.x, self.y)

    def derivative(self):
        return PiecewiseConstant(self.x, np.diff(self.y) / np.diff(self.x))

    @property
    def breakpoints(self):
        return tuple(self.x[1:-1])

    cycles_per_unit: float = 0.0

    @property
    def label(self) -> str:
        return "pwl[" + ";".join(f"{a:g},{b:g}" for a, b in zip(self.x, self.y)) + "]"

    def __repr__(self):
        return self.label


class SampledFunction:
    """A function known only through samples, read as its piecewise-linear interpolant.

    This is how numerically computed eigenfunctions enter Stieltjes
    integration: the integrator of record is the interpolant, whose
    Stieltjes integrals have an exact cell-by-cell form.
    """

    def __init__(self, grid, values):
        grid = np.asarray(grid, dtype=float)
        values = np.asarray(values, dtype=float)
        if grid.ndim != 1 or grid.shape != values.shape or grid.size < 2:
            raise ArgumentError("need matching 1-d grid and values with >= 2 samples")
        if not np.all(np.diff(grid) > 0):
            raise ArgumentError("sample grid must be strictly ascending")
        self.grid = grid
        self.values = values

    def __call__(self, t):
        return np.interp(np.asarray(t, dtype=float), self.grid, self.values)

    @property
    def breakpoints(self):
        return tuple(self.grid[1:-1])


class ComplexFunction:
    """f(t) = real(t) + 1j * imag(t), built from two real integrands."""

    def __init__(self, real, imag):
        self.real = real
        self.imag = imag

    def __call__(self, t):
        return self.real(t) + 1j * self.imag(t)

    def derivative(self):
        return ComplexFunction(self.real.derivative(), self.imag.derivative())

    @property
    def breakpoints(self):
        return tuple(sorted(set(self.real.breakpoints) | set(self.imag.breakpoints)))

    @property
    def cycles_per_unit(self) -> float:
        return max(self.real.cycles_per_unit, self.imag.cycles_per_unit)

    @property
    def label(self) -> str:
        return f"complex({getattr(self.real, 'label', '?')},{getattr(self.imag, 'label', '?')})"
