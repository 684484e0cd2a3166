"""Rectangular grids, nodal scalar fields, quadrature, and stencil operators.

The domain is an axis-aligned rectangle [0, L1] (x [0, L2] in 2D) with a
uniform node-centered grid: nodes at x_j = j * h, j = 0..N-1, h = L/(N-1).
All integrals use trapezoidal quadrature on that node layout, and the
Laplacian uses the standard second-order stencil with mirror (reflecting)
ghost nodes, which realizes the homogeneous Neumann condition:

    (Lap f)_0 = 2 (f_1 - f_0) / h^2,   (Lap f)_j = (f_{j+1} - 2 f_j + f_{j-1}) / h^2.

With this pairing the discrete divergence theorem is exact: the trapezoid
integral of the stencil Laplacian telescopes to zero, so mass conservation
of the diffusion term holds to rounding error, and the summation-by-parts
identity  integral(g * (-Lap f)) = sum over faces of (df * dg / h) * |face|
holds exactly.  Second differences are evaluated as differences of first
differences, which keeps the rounding error of (Lap f) at O(eps * |f'| / h)
instead of O(eps * |f| / h^2).
"""

from __future__ import annotations

import functools
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Grid:
    """Tensor-product node-centered grid on an axis-aligned rectangle.

    lengths: side length per axis (positive).
    cells:   number of nodes per axis (>= 8).
    """

    lengths: tuple[float, ...]
    cells: tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, "lengths", tuple(float(L) for L in np.atleast_1d(self.lengths)))
        object.__setattr__(self, "cells", tuple(int(n) for n in np.atleast_1d(self.cells)))
        if len(self.lengths) != len(self.cells):
            raise ValueError("lengths and cells must have the same number of axes")
        if self.dim not in (1, 2):
            raise ValueError(f"grid dimension must be 1 or 2, got {self.dim}")
        if any(L <= 0 for L in self.lengths):
            raise ValueError("grid lengths must be positive")
        if any(n < 8 for n in self.cells):
            raise ValueError("grid needs at least 8 nodes per axis")

    @property
    def dim(self) -> int:
        return len(self.cells)

    @property
    def spacing(self) -> tuple[float, ...]:
        return tuple(L / (n - 1) for L, n in zip(self.lengths, self.cells))

    @property
    def shape(self) -> tuple[int, ...]:
        return self.cells

    @property
    def node_count(self) -> int:
        return int(np.prod(self.cells))

    @property
    def measure(self) -> float:
        """|Omega| = product of side lengths."""
        return float(np.prod(self.lengths))

    def axes(self) -> list[np.ndarray]:
        """Nodal coordinates per axis."""
        return [np.linspace(0.0, L, n) for L, n in zip(self.lengths, self.cells)]

    def meshgrid(self) -> list[np.ndarray]:
        return list(np.meshgrid(*self.axes(), indexing="ij"))


@functools.lru_cache(maxsize=32)
def _axis_weights(n: int, h: float) -> np.ndarray:
    w = np.full(n, h)
    w[0] = w[-1] = 0.5 * h
    w.setflags(write=False)
    return w


@functools.lru_cache(maxsize=32)
def quadrature_weights(grid: Grid) -> np.ndarray:
    """Trapezoid weight array, same shape as a field on the grid."""
    ws = [_axis_weights(n, h) for n, h in zip(grid.cells, grid.spacing)]
    if grid.dim == 1:
        return ws[0]
    w = np.multiply.outer(ws[0], ws[1])
    w.setflags(write=False)
    return w


@dataclass
class ScalarField:
    """Nodal values of a scalar quantity on a Grid.

    Treated as an immutable value: operations return new fields.
    """

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.shape != self.grid.shape:
            raise ValueError(f"field shape {self.values.shape} does not match grid {self.grid.shape}")
        if not np.isfinite(self.values).all():
            raise ValueError("field values must be finite")

    @classmethod
    def constant(cls, grid: Grid, value: float) -> "ScalarField":
        return cls(grid, np.full(grid.shape, float(value)))

    @classmethod
    def from_function(cls, grid: Grid, fn) -> "ScalarField":
        """Sample fn(x) (1D) or fn(x, y) (2D) at the nodes."""
        return cls(grid, np.asarray(fn(*grid.meshgrid()), dtype=float))

    def with_values(self, values: np.ndarray) -> "ScalarField":
        return ScalarField(self.grid, values)


def integrate_values(values: np.ndarray, grid: Grid) -> float:
    return float(np.sum(quadrature_weights(grid) * values))


def integrate(f: ScalarField) -> float:
    """Trapezoid quadrature of f over the domain; exact for per-cell affine fields."""
    return integrate_values(f.values, f.grid)


def lp_norm(f: ScalarField, p: float) -> float:
    """L^p norm, p >= 1, using trapezoid quadrature."""
    if p < 1:
        raise ValueError(f"p must be >= 1, got {p}")
    return float(integrate_values(np.abs(f.values) ** p, f.grid) ** (1.0 / p))


def linf_norm(f: ScalarField) -> float:
    return float(np.abs(f.values).max())


def mean(f: ScalarField) -> float:
    return integrate(f) / f.grid.measure


def laplacian_values(values: np.ndarray, grid: Grid) -> np.ndarray:
    """Mirror-ghost Neumann Laplacian of a value array (see module docstring)."""
    out = np.zeros_like(values)
    for axis, h in enumerate(grid.spacing):
        v = np.moveaxis(values, axis, 0)
        o = np.moveaxis(out, axis, 0)
        d = np.diff(v, axis=0)
        inv_h2 = 1.0 / (h * h)
        o[1:-1] += (d[1:] - d[:-1]) * inv_h2
        o[0] += 2.0 * d[0] * inv_h2
        o[-1] += -2.0 * d[-1] * inv_h2
    return out


def discrete_laplacian(f: ScalarField) -> ScalarField:
    return f.with_values(laplacian_values(f.values, f.grid))


def gradient_sq_integral(f: ScalarField) -> float:
    """Integral of |grad f|^2 as a sum over cell faces.

    Each face between adjacent nodes along an axis contributes
    ((f_{i+1} - f_i)/h)^2 times (h x transverse trapezoid weight), which is
    exactly the Dirichlet form of the mirror-ghost Laplacian.
    """
    grid = f.grid
    total = 0.0
    for axis, h in enumerate(grid.spacing):
        v = np.moveaxis(f.values, axis, 0)
        d = np.diff(v, axis=0)
        face_sq = d * d / h  # ((d/h)^2) * h summed over faces
        if grid.dim == 1:
            total += float(np.sum(face_sq))
        else:
            other = 1 - axis
            w = _axis_weights(grid.cells[other], grid.spacing[other])
            total += float(np.sum(face_sq * w))
    return total
