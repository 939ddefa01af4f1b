"""Canonical scenarios used by the CLI presets and the acceptance suite."""

from __future__ import annotations

from .core import RiemannProfile, Scenario, VelocityField, build_grid, make_kernel


def counterexample_scenario(dx: float = 0.0025, t_end: float = 0.5) -> Scenario:
    """Local-mode Riemann problem where the maximum principle fails.

    The faster left road (v=2) meets a slower right road (v=1) with data
    (0.25, 0.77); a congested plateau near 0.902 forms behind the
    interface, exceeding the initial maximum.
    """
    n = round(2.0 / dx)
    return Scenario(
        grid=build_grid(-2.0, 2.0, n, n),
        kernel=None,
        velocity=VelocityField(2.0, 1.0),
        initial=RiemannProfile(0.25, 0.77),
        t_end=t_end,
        cfl=0.5,
        solver="local_godunov",
    )


def inregime_riemann_scenario(
    dx: float = 0.005,
    t_end: float = 0.5,
    eta: float = 0.2,
    solver: str = "nonlocal_upwind",
    epsilon: float = 0.0,
) -> Scenario:
    """Well-posed-regime non-local Riemann preset on [-2, 2], v=(1, 2)."""
    n = round(2.0 / dx)
    return Scenario(
        grid=build_grid(-2.0, 2.0, n, n),
        kernel=make_kernel("poly2", eta),
        velocity=VelocityField(1.0, 2.0),
        initial=RiemannProfile(0.25, 0.77),
        t_end=t_end,
        cfl=0.5,
        solver=solver,
        epsilon=epsilon,
    )
