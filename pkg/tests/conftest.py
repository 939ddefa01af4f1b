import numpy as np
import pytest

from nonlocal_lwr.core import (
    RiemannProfile,
    Scenario,
    VelocityField,
    build_grid,
    make_kernel,
)


@pytest.fixture
def small_grid():
    return build_grid(-2.0, 2.0, 100, 100)


@pytest.fixture
def riemann_scenario(small_grid):
    return Scenario(
        grid=small_grid,
        kernel=make_kernel("poly2", 0.2),
        velocity=VelocityField(1.0, 2.0),
        initial=RiemannProfile(0.25, 0.77),
        t_end=0.5,
    )


def gauss_integral(fn, a: float, b: float, n_points: int = 24) -> float:
    """Gauss-Legendre quadrature, exact for polynomials up to degree 2n-1.

    Independent oracle for kernel integrals (never uses closed-form
    antiderivatives).
    """
    nodes, weights = np.polynomial.legendre.leggauss(n_points)
    x = 0.5 * (b - a) * nodes + 0.5 * (b + a)
    return float(0.5 * (b - a) * np.sum(weights * fn(x)))
