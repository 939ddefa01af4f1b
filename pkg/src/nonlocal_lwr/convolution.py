"""Discrete downstream convolution and its spatial-derivative identity.

The weighted average W = w*rho is anchored at cell boundaries and uses
strictly downstream cells, so the upwind flux v * rho_j * (1 - W_{j+1/2})
never feeds a cell's own density into its speed. Per-cell weights are
exact antiderivative integrals of the kernel, which makes sum(gamma) = 1
exact and gives W the convex-combination property.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .backend import kernels as _k
from .core import DensityField, Grid, Kernel


@dataclass(frozen=True)
class ConvWeights:
    """Per-cell quadrature weights gamma_k = integral of w over the k-th cell."""

    gamma: np.ndarray
    dx: float
    kernel: Kernel

    def __post_init__(self):
        g = np.ascontiguousarray(self.gamma, dtype=float)
        g.setflags(write=False)
        object.__setattr__(self, "gamma", g)

    @property
    def support_cells(self) -> int:
        return int(self.gamma.shape[0])


@dataclass(frozen=True)
class DerivWeights:
    """Weights for w' anchored at cell centers; they sum to -w(0)."""

    delta: np.ndarray
    dx: float
    w0: float

    def __post_init__(self):
        d = np.ascontiguousarray(self.delta, dtype=float)
        d.setflags(write=False)
        object.__setattr__(self, "delta", d)


@dataclass(frozen=True)
class ConvField:
    """W values at the n+1 cell boundaries of `grid`."""

    values: np.ndarray
    grid: Grid

    def at_centers(self) -> np.ndarray:
        """Second-order average of the two adjacent boundary values."""
        return 0.5 * (self.values[:-1] + self.values[1:])


def support_cell_count(eta: float, dx: float) -> int:
    return max(1, int(np.ceil(eta / dx - 1e-12)))


def compute_weights(kernel: Kernel, dx: float) -> ConvWeights:
    """Exact per-cell weights for the boundary-anchored convolution."""
    if dx <= 0.0:
        raise ValueError("dx must be > 0")
    n = support_cell_count(kernel.eta, dx)
    edges = np.minimum(np.arange(n + 1) * dx, kernel.eta)
    gamma = np.diff(kernel.integral(edges))
    return ConvWeights(gamma=gamma, dx=float(dx), kernel=kernel)


def compute_prime_weights(kernel: Kernel, dx: float) -> DerivWeights:
    """Exact per-cell integrals of w' for the center-anchored derivative identity.

    Piece k covers [max(0, (k-1/2)dx), min((k+1/2)dx, eta)], so the first
    piece is the half cell downstream of the anchoring cell's center.
    """
    if dx <= 0.0:
        raise ValueError("dx must be > 0")
    n_pieces = int(np.ceil(kernel.eta / dx + 0.5 - 1e-12))
    lo = np.maximum((np.arange(n_pieces) - 0.5) * dx, 0.0)
    hi = np.minimum((np.arange(n_pieces) + 0.5) * dx, kernel.eta)
    hi = np.maximum(hi, lo)
    delta = np.asarray(kernel(hi) - kernel(lo), dtype=float)
    return DerivWeights(delta=delta, dx=float(dx), w0=kernel.w0)


def convolve_values(values: np.ndarray, weights: ConvWeights) -> np.ndarray:
    """W at all n+1 boundaries for a raw value array (no range checks)."""
    rho = np.ascontiguousarray(values, dtype=float)
    return _k.conv_boundaries(rho, weights.gamma)


def convolve(field: DensityField, weights: ConvWeights) -> ConvField:
    """Downstream average of a density field at every cell boundary."""
    if abs(field.grid.dx - weights.dx) > 1e-12 * weights.dx:
        raise ValueError("field and weights use different cell widths")
    return ConvField(values=convolve_values(field.values, weights), grid=field.grid)


def conv_x_derivative_values(
    values: np.ndarray, weights_prime: DerivWeights
) -> np.ndarray:
    """Cell-centered d/dx of w*rho via the identity -(w'*rho) - w(0)*rho."""
    rho = np.ascontiguousarray(values, dtype=float)
    n = rho.shape[0]
    k = weights_prime.delta.shape[0]
    ext = np.empty(n + k)
    ext[:n] = rho
    ext[n:] = rho[n - 1]
    wprime_conv = np.correlate(ext, weights_prime.delta, mode="valid")[:n]
    return -wprime_conv - weights_prime.w0 * rho


def conv_x_derivative(field: DensityField, weights_prime: DerivWeights) -> np.ndarray:
    """Derivative identity applied to a density field (one value per cell)."""
    return conv_x_derivative_values(field.values, weights_prime)
