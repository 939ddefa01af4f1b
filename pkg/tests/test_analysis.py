import numpy as np
import pytest

from nonlocal_lwr.analysis import (
    DEFAULT_RESIDUAL_C,
    convergence_order,
    diagnostics,
    entropy_residuals,
    extract_traces,
    stability_experiment,
)
from nonlocal_lwr.core import (
    BumpProfile,
    DensityField,
    RiemannProfile,
    Scenario,
    VelocityField,
    build_grid,
    make_kernel,
    profile_mass,
)
from nonlocal_lwr.errors import InsufficientSnapshots, ValidationError
from nonlocal_lwr.presets import counterexample_scenario, inregime_riemann_scenario
from nonlocal_lwr.solver import StepDiagnostics, Trajectory, riemann_local_exact, run


def _constant_local_scenario(value=0.4, n=200):
    g = build_grid(-2, 2, n, n)
    return Scenario(grid=g, kernel=None, velocity=VelocityField(1.0, 1.0),
                    initial=RiemannProfile(value, value), t_end=0.5,
                    solver="local_godunov")


def _dense_times(scn, factor=2.0):
    gap = scn.grid.dx / (scn.velocity.v_max * factor)
    return np.linspace(0.0, scn.t_end, int(np.ceil(scn.t_end / gap)) + 1)


def _handmade_trajectory(scn, values):
    """Constant-in-time snapshots around hand-built cell values."""
    times = np.linspace(0.0, scn.t_end, 101)
    snaps = [DensityField(values.copy(), scn.grid, t, check_range=False) for t in times]
    empty = np.zeros(0)
    steps = StepDiagnostics(t=empty, mass=empty, vmin=empty, vmax=empty, tv_away=empty)
    return Trajectory(scenario=scn, snapshots=snaps,
                      snapshot_outflow=np.zeros(times.size), steps=steps)


def test_entropy_constant_solution_passes_tightly():
    scn = _constant_local_scenario()
    traj = run(scn, snapshot_times=np.linspace(0, 0.5, 101))
    rep = entropy_residuals(traj)
    assert rep.min_residual_left >= -1e-10
    assert rep.min_residual_right >= -1e-10
    assert rep.min_residual_global >= -1e-10
    assert rep.passed


def test_entropy_solver_output_within_tolerance():
    scn = inregime_riemann_scenario(dx=0.01)
    traj = run(scn, snapshot_times=_dense_times(scn))
    rep = entropy_residuals(traj)
    assert rep.passed
    assert rep.tolerance == pytest.approx(
        DEFAULT_RESIDUAL_C * (scn.grid.dx + np.diff(traj.times()).max()), rel=1e-12)
    assert 0.0 <= rep.worst_kappa <= 1.0


def test_entropy_negative_residual_shrinks_under_refinement():
    mins = []
    for dx in (0.02, 0.01):
        scn = inregime_riemann_scenario(dx=dx)
        traj = run(scn, snapshot_times=_dense_times(scn))
        rep = entropy_residuals(traj)
        mins.append(min(rep.min_residual_left, rep.min_residual_right,
                        rep.min_residual_global))
    assert mins[0] < 0.0  # first-order scheme does produce small negatives
    assert abs(mins[1]) <= abs(mins[0]) / 1.5


def test_entropy_flags_expansion_shock():
    # stationary jump down 0.8 -> 0.2 with equal fluxes at v_l = v_r is a
    # weak solution but violates admissibility at O(1)
    scn = _constant_local_scenario()
    vals = np.where(scn.grid.centers() < 0.5, 0.8, 0.2)
    rep = entropy_residuals(_handmade_trajectory(scn, vals))
    assert not rep.passed
    assert rep.min_residual < -rep.tolerance
    # the admissible mirror image (jump up) is fine
    rep_ok = entropy_residuals(_handmade_trajectory(scn, vals[::-1].copy()))
    assert rep_ok.min_residual_right >= -1e-10


def test_entropy_requires_dense_snapshots():
    scn = inregime_riemann_scenario(dx=0.01)
    traj = run(scn, snapshot_times=[0.0, 0.25, 0.5])
    with pytest.raises(InsufficientSnapshots):
        entropy_residuals(traj)


def test_traces_constant_zero_residual():
    scn = _constant_local_scenario()
    traj = run(scn, snapshot_times=[0.0, 0.25, 0.5])
    rep = extract_traces(traj, band_cells=4)
    assert np.abs(rep.rh_residual).max() < 1e-14
    assert rep.band == (0.0, 4 * scn.grid.dx)


def test_traces_counterexample_match_oracle():
    scn = counterexample_scenario(dx=0.005)
    traj = run(scn, snapshot_times=[0.0, 0.5])
    rep = extract_traces(traj, band_cells=4, skip_cells=2)
    sol = riemann_local_exact(2.0, 1.0, 0.25, 0.77)
    assert rep.rho_left_trace[-1] == pytest.approx(sol.rho_minus, abs=0.02)
    assert rep.rho_right_trace[-1] == pytest.approx(0.77, abs=0.02)
    # local Rankine-Hugoniot: flux equality across the interface
    assert rep.rh_residual[-1] < 0.02


def test_traces_band_validation():
    scn = _constant_local_scenario(n=5)
    traj = run(scn, snapshot_times=[0.0, scn.t_end])
    with pytest.raises(ValidationError):
        extract_traces(traj, band_cells=0)
    with pytest.raises(ValidationError):
        extract_traces(traj, band_cells=10)


def test_diagnostics_initial_only():
    scn = inregime_riemann_scenario(dx=0.01, t_end=0.5)
    zero = Scenario(grid=scn.grid, kernel=scn.kernel, velocity=scn.velocity,
                    initial=scn.initial, t_end=0.0)
    table = diagnostics(run(zero))
    assert table.mass[0] == pytest.approx(
        profile_mass(scn.initial, scn.grid), abs=1e-12)
    assert table.tv_away[0] == 0.0  # the only jump sits at the interface


def test_diagnostics_bounds_on_in_regime_run():
    scn = inregime_riemann_scenario(dx=0.01)
    table = diagnostics(run(scn))
    assert table.vmax.max() <= 1.0 + 1e-10
    assert table.vmin.min() >= -1e-10
    assert table.conservation_residual.max() <= 1e-12
    assert np.all(table.conv_l1 <= table.conv_l1_bound)
    assert np.all(table.conv_deriv_l1 <= table.conv_deriv_l1_bound)


def test_stability_zero_perturbation():
    scn = inregime_riemann_scenario(dx=0.02)
    rep = stability_experiment(scn, BumpProfile(-0.5, 0.3, 0.0))
    assert rep.fitted_K == 0.0
    assert rep.envelope_ok
    assert np.all(rep.distances == 0.0)


def test_stability_bump_perturbation():
    scn = inregime_riemann_scenario(dx=0.01)
    rep = stability_experiment(scn, BumpProfile(-0.5, 0.3, 0.05))
    assert rep.envelope_ok
    assert np.isfinite(rep.fitted_K)
    assert rep.distances[0] == pytest.approx(
        profile_mass(BumpProfile(-0.5, 0.3, 0.05), scn.grid), rel=1e-10)
    # halving the amplitude halves the distance curve within 20%
    half = stability_experiment(scn, BumpProfile(-0.5, 0.3, 0.025))
    ratio = half.distances[-1] / rep.distances[-1]
    assert abs(ratio - 0.5) <= 0.1


def test_stability_rejects_out_of_range_perturbation():
    scn = inregime_riemann_scenario(dx=0.02)
    with pytest.raises(ValidationError):
        stability_experiment(scn, BumpProfile(0.5, 0.3, 0.5))  # 0.77 + 0.5 > 1


def test_convergence_smooth_bump_first_order():
    g = build_grid(-2, 2, 100, 100)
    scn = Scenario(grid=g, kernel=make_kernel("poly2", 0.2),
                   velocity=VelocityField(1.0, 1.0),
                   initial=BumpProfile(-0.5, 0.4, 0.5), t_end=0.5)
    rep = convergence_order(scn, [0.02, 0.01, 0.005])
    assert rep.label == "self"
    assert rep.order >= 0.8


def test_convergence_exact_for_steady_state():
    g = build_grid(-2, 2, 100, 100)
    scn = Scenario(grid=g, kernel=make_kernel("poly2", 0.2),
                   velocity=VelocityField(1.0, 1.0),
                   initial=RiemannProfile(0.5, 0.5), t_end=0.2)
    rep = convergence_order(scn, [0.02, 0.01, 0.005])
    assert rep.label == "exact"
    assert rep.order == np.inf


def test_convergence_oracle_mode():
    scn = counterexample_scenario(dx=0.02)
    rep = convergence_order(scn, [0.02, 0.01, 0.005, 0.0025])
    assert rep.label == "oracle"
    assert rep.order >= 0.7


def test_convergence_needs_ladder():
    scn = inregime_riemann_scenario(dx=0.02)
    with pytest.raises(ValidationError):
        convergence_order(scn, [0.02, 0.01])
