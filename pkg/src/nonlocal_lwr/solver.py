"""Time stepping for the non-local model and its local-mode companions.

The non-local scheme is first-order conservative upwind: the transport
speed v(x) * (1 - W) is nonnegative, so upwinding is always one-sided.
With dt from `cfl_dt` every update is a convex combination of the cell
and its left neighbour (plus downstream corrections bounded by the
convolution weights), which preserves [0, 1] whenever v_left < v_right.

Local mode drops the convolution (flux v * rho * (1 - rho)) and uses the
demand/supply Godunov flux, including at the interface, which realises
the admissible minimal jump for the discontinuous-flux problem.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .backend import kernels as _k
from .convolution import ConvWeights, compute_weights, convolve_values
from .core import DensityField, Grid, Scenario, VelocityField
from .errors import (
    CflViolation,
    InvariantViolation,
    UnsupportedConfiguration,
    ValidationError,
)

# Runtime guard for the in-regime maximum principle (see diagnostics docs).
MAX_PRINCIPLE_TOL = 1e-10


@dataclass(frozen=True)
class SolverState:
    """Density field plus everything a step needs (weights may be None in
    local mode)."""

    field: DensityField
    weights: ConvWeights | None
    velocity: VelocityField
    t: float = 0.0
    step_count: int = 0


@dataclass(frozen=True)
class StepDiagnostics:
    """Per-step records; all arrays share length = number of steps taken."""

    t: np.ndarray
    mass: np.ndarray
    vmin: np.ndarray
    vmax: np.ndarray
    tv_away: np.ndarray


@dataclass(frozen=True)
class Trajectory:
    """Snapshots at requested output times plus per-step diagnostics.

    `snapshot_outflow[k]` is the accumulated net boundary outflow
    integral up to snapshot k, so `snapshot mass + outflow` is the
    conserved total (equal to the initial mass up to rounding).
    """

    scenario: Scenario
    snapshots: list[DensityField]
    snapshot_outflow: np.ndarray
    steps: StepDiagnostics

    def __post_init__(self):
        times = self.times()
        if times.size and np.any(np.diff(times) <= 0.0):
            raise InvariantViolation("snapshot times must be strictly increasing")

    def times(self) -> np.ndarray:
        return np.asarray([s.time for s in self.snapshots])

    @property
    def step_count(self) -> int:
        return int(self.steps.t.shape[0])

    def values_matrix(self) -> np.ndarray:
        """Snapshots stacked as a (n_times, n_cells) matrix."""
        return np.stack([s.values for s in self.snapshots])


def cfl_dt(state: SolverState, cfl: float) -> float:
    """Largest stable step: cfl * dx / (v_max * (1 + gamma_0)).

    gamma_0 (the first convolution weight) absorbs the non-local
    self-interaction; it is zero in local mode.
    """
    if not (0.0 < cfl <= 1.0):
        raise ValueError("cfl must lie in (0, 1]")
    gamma0 = float(state.weights.gamma[0]) if state.weights is not None else 0.0
    return cfl * state.field.grid.dx / (state.velocity.v_max * (1.0 + gamma0))


def _tv_away(values: np.ndarray, centers: np.ndarray, delta: float) -> float:
    keep = np.abs(centers) >= delta
    both = keep[:-1] & keep[1:]
    return float(np.abs(np.diff(values))[both].sum())


def _nonlocal_edge_fluxes(rho, conv, v_bnd) -> tuple[float, float]:
    n = rho.shape[0]
    f0 = v_bnd[0] * rho[0] * (1.0 - conv[0])
    fn = v_bnd[n] * rho[n - 1] * (1.0 - conv[n])
    return float(f0), float(fn)


def _godunov_edge_fluxes(rho, v_left, v_right) -> tuple[float, float]:
    # Equal states on both sides of an edge make the Godunov flux q(state).
    f0 = v_left * rho[0] * (1.0 - rho[0])
    fn = v_right * rho[-1] * (1.0 - rho[-1])
    return float(f0), float(fn)


def step_nonlocal(state: SolverState, dt: float) -> SolverState:
    """One conservative upwind step of the non-local model."""
    if state.weights is None:
        raise ValueError("step_nonlocal needs convolution weights (non-local mode)")
    if dt > cfl_dt(state, 1.0) * (1.0 + 1e-9):
        raise CflViolation(f"dt={dt} exceeds the stability bound {cfl_dt(state, 1.0)}")
    grid = state.field.grid
    v_bnd = state.velocity.at_boundaries(grid)
    conv = convolve_values(state.field.values, state.weights)
    new_vals = _k.upwind_step(state.field.values, conv, v_bnd, dt / grid.dx)
    field = DensityField(new_vals, grid, state.t + dt, check_range=False)
    return SolverState(field, state.weights, state.velocity, state.t + dt, state.step_count + 1)


def step_local_godunov(state: SolverState, dt: float) -> SolverState:
    """One Godunov step in local mode (flux v * rho * (1 - rho))."""
    grid = state.field.grid
    bound = state.field.grid.dx / state.velocity.v_max
    if dt > bound * (1.0 + 1e-9):
        raise CflViolation(f"dt={dt} exceeds the stability bound {bound}")
    v_up, v_dn = _godunov_side_speeds(grid, state.velocity)
    new_vals = _k.godunov_step(state.field.values, v_up, v_dn, dt / grid.dx)
    field = DensityField(new_vals, grid, state.t + dt, check_range=False)
    return SolverState(field, None, state.velocity, state.t + dt, state.step_count + 1)


def _godunov_side_speeds(grid: Grid, velocity: VelocityField):
    i0 = grid.interface_index
    v_up = np.full(grid.n_cells + 1, velocity.v_right)
    v_up[: i0 + 1] = velocity.v_left
    v_dn = np.full(grid.n_cells + 1, velocity.v_right)
    v_dn[:i0] = velocity.v_left
    return v_up, v_dn


# ---------------------------------------------------------------------------
# Exact Riemann solution for the local counterexample class
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExactRiemannSolution:
    """Three-constant solution: rho_left behind a left-moving shock, a
    congested plateau rho_minus up to the interface, rho_right beyond it."""

    v_left: float
    v_right: float
    rho_left: float
    rho_right: float
    rho_minus: float
    shock_speed: float

    def __call__(self, t: float, x):
        x = np.asarray(x, dtype=float)
        if t <= 0.0:
            return np.where(x < 0.0, self.rho_left, self.rho_right)
        out = np.full(x.shape, self.rho_minus)
        out = np.where(x < self.shock_speed * t, self.rho_left, out)
        return np.where(x >= 0.0, self.rho_right, out)

    def cell_averages(self, t: float, grid: Grid) -> np.ndarray:
        """Exact cell averages (piecewise constant with two breakpoints)."""
        bnd = grid.boundaries()
        b1 = min(self.shock_speed * t, 0.0) if t > 0.0 else 0.0
        left_len = np.clip(b1 - bnd[:-1], 0.0, grid.dx)
        right_len = np.clip(bnd[1:], 0.0, None) - np.clip(bnd[:-1], 0.0, None)
        right_len = np.clip(right_len, 0.0, grid.dx)
        mid_len = grid.dx - left_len - right_len
        return (
            self.rho_left * left_len
            + self.rho_minus * mid_len
            + self.rho_right * right_len
        ) / grid.dx


def riemann_local_exact(
    v_l: float, v_r: float, rho_l: float, rho_r: float
) -> ExactRiemannSolution:
    """Closed-form local-mode Riemann solution for a stationary interface.

    Requires the congested configuration: v_l > v_r, rho_r on the
    congested branch with supply below the left flux maximum, and left
    demand exceeding that supply. The plateau value is the congested root
    of v_l * r * (1 - r) = v_r * rho_r * (1 - rho_r); the shock speed is
    the Rankine-Hugoniot quotient between rho_l and the plateau.
    """
    if not (0.0 < v_r < v_l):
        raise UnsupportedConfiguration("requires v_l > v_r > 0")
    if not (0.0 <= rho_l <= 1.0 and 0.5 < rho_r <= 1.0):
        raise UnsupportedConfiguration("requires rho_l in [0,1] and rho_r in (1/2, 1]")
    # v_r < v_l and rho_r > 1/2 already force the right supply below the
    # left flux maximum v_l/4, so the congested root always exists.
    g = v_r * rho_r * (1.0 - rho_r)
    f_l = v_l * rho_l * (1.0 - rho_l)
    if f_l <= g:
        raise UnsupportedConfiguration(
            "left demand must exceed the right supply (no congested plateau forms)"
        )
    rho_minus = 0.5 * (1.0 + math.sqrt(1.0 - 4.0 * g / v_l))
    f_minus = v_l * rho_minus * (1.0 - rho_minus)
    speed = (f_minus - f_l) / (rho_minus - rho_l)
    return ExactRiemannSolution(
        v_left=v_l,
        v_right=v_r,
        rho_left=rho_l,
        rho_right=rho_r,
        rho_minus=rho_minus,
        shock_speed=speed,
    )


# ---------------------------------------------------------------------------
# Run driver
# ---------------------------------------------------------------------------

def default_snapshot_times(t_end: float, count: int = 11) -> np.ndarray:
    if t_end <= 0.0:
        return np.asarray([0.0])
    return np.linspace(0.0, t_end, count)


def _merge_times(t_end: float, snapshot_times) -> np.ndarray:
    if snapshot_times is None:
        times = default_snapshot_times(t_end)
    else:
        times = np.asarray(snapshot_times, dtype=float)
    times = np.unique(np.concatenate([[0.0, t_end], times]))
    if times[0] < 0.0 or times[-1] > t_end * (1.0 + 1e-12) + 1e-300:
        raise ValidationError("snapshot times must lie in [0, t_end]")
    return times[times <= t_end + 1e-15]


def run(scenario: Scenario, snapshot_times=None, tv_delta: float | None = None) -> Trajectory:
    """Advance a scenario to t_end, recording snapshots and diagnostics.

    Snapshot times are hit exactly by shortening the final step of each
    output interval, keeping the mass accounting exactly conservative.
    """
    if scenario.solver == "viscous":
        from .viscous import run_viscous  # local import avoids a cycle

        return run_viscous(scenario, snapshot_times=snapshot_times, tv_delta=tv_delta)

    grid = scenario.grid
    velocity = scenario.velocity
    rho = scenario.initial_field().values.copy()
    if tv_delta is None:
        tv_delta = 5.0 * grid.dx
    centers = grid.centers()

    local_mode = scenario.solver == "local_godunov"
    if local_mode:
        weights = None
        gamma0 = 0.0
        v_up, v_dn = _godunov_side_speeds(grid, velocity)
    else:
        weights = compute_weights(scenario.kernel, grid.dx)
        gamma0 = float(weights.gamma[0])
        v_bnd = velocity.at_boundaries(grid)

    dt_max = scenario.cfl * grid.dx / (velocity.v_max * (1.0 + gamma0))
    times = _merge_times(scenario.t_end, snapshot_times)

    snapshots: list[DensityField] = []
    snap_outflow: list[float] = []
    rec_t: list[float] = []
    rec_mass: list[float] = []
    rec_min: list[float] = []
    rec_max: list[float] = []
    rec_tv: list[float] = []

    outflow = 0.0
    t = 0.0
    guard = velocity.in_regime

    def record_snapshot(at: float):
        snapshots.append(DensityField(rho.copy(), grid, at, check_range=False))
        snap_outflow.append(outflow)

    for target in times:
        while t < target:
            remaining = target - t
            hit = remaining <= dt_max * (1.0 + 1e-9)
            dt = remaining if hit else dt_max
            if local_mode:
                f0, fn = _godunov_edge_fluxes(rho, velocity.v_left, velocity.v_right)
                rho = _k.godunov_step(rho, v_up, v_dn, dt / grid.dx)
            else:
                conv = convolve_values(rho, weights)
                f0, fn = _nonlocal_edge_fluxes(rho, conv, v_bnd)
                rho = _k.upwind_step(rho, conv, v_bnd, dt / grid.dx)
            outflow += dt * (fn - f0)
            t = target if hit else t + dt
            lo = float(rho.min())
            hi = float(rho.max())
            if guard and (lo < -MAX_PRINCIPLE_TOL or hi > 1.0 + MAX_PRINCIPLE_TOL):
                raise InvariantViolation(
                    f"maximum principle violated at t={t}: range [{lo}, {hi}]"
                )
            rec_t.append(t)
            rec_mass.append(float(rho.sum() * grid.dx))
            rec_min.append(lo)
            rec_max.append(hi)
            rec_tv.append(_tv_away(rho, centers, tv_delta))
        record_snapshot(target)

    steps = StepDiagnostics(
        t=np.asarray(rec_t),
        mass=np.asarray(rec_mass),
        vmin=np.asarray(rec_min),
        vmax=np.asarray(rec_max),
        tv_away=np.asarray(rec_tv),
    )
    return Trajectory(
        scenario=scenario,
        snapshots=snapshots,
        snapshot_outflow=np.asarray(snap_outflow),
        steps=steps,
    )
