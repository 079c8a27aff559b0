"""Uniform age grid with trapezoid quadrature.

Every integral over the age interval X = [0, a_max] is realized as a
weighted nodal sum, so kernel operators become dense matrix-vector
products on a shared grid.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import GridMismatchError

__all__ = ["AgeGrid", "AgeDensity", "Kernel", "integrate", "apply_kernel"]


def _frozen(a):
    a = np.asarray(a, dtype=float)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class AgeGrid:
    """Uniform discretization of [0, a_max] with composite-trapezoid weights."""

    a_max: float
    n: int
    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def uniform(cls, a_max: float, n: int) -> "AgeGrid":
        if a_max <= 0:
            raise ValueError("a_max must be positive")
        if n < 2:
            raise ValueError("need at least 2 nodes")
        nodes = np.linspace(0.0, a_max, n)
        h = a_max / (n - 1)
        weights = np.full(n, h)
        weights[0] = weights[-1] = h / 2
        return cls(float(a_max), int(n), _frozen(nodes), _frozen(weights))

    def same_as(self, other: "AgeGrid") -> bool:
        return (
            self.n == other.n
            and self.a_max == other.a_max
            and np.array_equal(self.nodes, other.nodes)
        )

    def integrate(self, values: np.ndarray) -> float:
        """Quadrature of nodal values over X."""
        values = np.asarray(values, dtype=float)
        if values.shape != (self.n,):
            raise GridMismatchError(
                f"expected {self.n} nodal values, got shape {values.shape}"
            )
        return float(self.weights @ values)


def _check_values(grid: AgeGrid, values: np.ndarray, what: str) -> np.ndarray:
    values = np.asarray(values, dtype=float)
    if values.shape != (grid.n,):
        raise GridMismatchError(f"{what}: expected length {grid.n}, got {values.shape}")
    if not np.all(np.isfinite(values)):
        raise ValueError(f"{what}: values must be finite")
    return values


@dataclass(frozen=True)
class AgeDensity:
    """Nodal values of a density (individuals per unit age) on a grid."""

    grid: AgeGrid
    values: np.ndarray

    def __post_init__(self):
        object.__setattr__(
            self, "values", _frozen(_check_values(self.grid, self.values, "AgeDensity"))
        )

    @property
    def total(self) -> float:
        return self.grid.integrate(self.values)


@dataclass(frozen=True)
class Kernel:
    """Dense n x n kernel; row index is the x (output) age, column the y age."""

    grid: AgeGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        n = self.grid.n
        if values.shape != (n, n):
            raise GridMismatchError(f"Kernel: expected shape {(n, n)}, got {values.shape}")
        if not np.all(np.isfinite(values)):
            raise ValueError("Kernel: entries must be finite")
        if np.any(values < 0):
            raise ValueError("Kernel: entries must be non-negative")
        object.__setattr__(self, "values", _frozen(values))

    @property
    def weighted(self) -> np.ndarray:
        """Matrix realizing f |-> integral k(., y) f(y) dy (quadrature baked in)."""
        return self.values * self.grid.weights[np.newaxis, :]

    def apply(self, f: np.ndarray) -> np.ndarray:
        f = _check_values(self.grid, f, "apply")
        return self.weighted @ f

    def row_profile(self, rtol: float = 1e-12):
        """If all rows agree within rtol (k depends on y only), return that row.

        Returns None for a genuinely two-variable kernel.
        """
        row = self.values[0]
        scale = max(np.max(np.abs(row)), np.finfo(float).tiny)
        if np.max(np.abs(self.values - row[np.newaxis, :])) <= rtol * scale:
            return row.copy()
        return None


def integrate(f: AgeDensity) -> float:
    """Integral of f over X as the weighted nodal sum."""
    return f.total


def apply_kernel(k: Kernel, f: AgeDensity) -> AgeDensity:
    """Density x |-> integral k(x, y) f(y) dy."""
    if not k.grid.same_as(f.grid):
        raise GridMismatchError("kernel and density live on different grids")
    return AgeDensity(f.grid, k.apply(f.values))
