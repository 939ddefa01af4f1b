"""Grids, kernels, velocity models, density fields and scenario validation.

Everything here is immutable after construction; arrays are frozen so
values can be shared between workers without defensive copies.
"""

from __future__ import annotations

import warnings
from dataclasses import InitVar, dataclass

import numpy as np

from .errors import (
    NonPositiveEta,
    NonTilingDomain,
    OutOfRangeDensity,
    ValidationError,
)

KERNEL_FAMILIES = ("poly2", "poly4")
SOLVER_KINDS = ("nonlocal_upwind", "local_godunov", "viscous")

# Relative slack used when checking exact tiling / boundary placement.
_TILING_RTOL = 1e-12


class MarginWarning(UserWarning):
    """Initial data is not constant inside the inflow/look-ahead margins."""


@dataclass(frozen=True)
class Grid:
    """Uniform 1-D cell partition with the velocity jump x=0 on a cell boundary.

    Cell j spans [x_min + j*dx, x_min + (j+1)*dx]; boundary i sits at
    x_min + i*dx, and boundary `interface_index` is exactly x=0.
    """

    x_min: float
    x_max: float
    n_cells: int
    dx: float
    interface_index: int

    def centers(self) -> np.ndarray:
        return self.x_min + (np.arange(self.n_cells) + 0.5) * self.dx

    def boundaries(self) -> np.ndarray:
        return self.x_min + np.arange(self.n_cells + 1) * self.dx


def build_grid(x_min: float, x_max: float, n_half_left: int, n_half_right: int) -> Grid:
    """Build a uniform grid on [x_min, x_max] with x=0 landing on a boundary.

    The cell width is implied by the left half; the right half must tile
    exactly with the same width, otherwise NonTilingDomain is raised.
    """
    if not (x_min < 0.0 < x_max):
        raise ValidationError("domain must satisfy x_min < 0 < x_max")
    if n_half_left < 1 or n_half_right < 1:
        raise ValidationError("cell counts must be >= 1")
    dx_left = -x_min / n_half_left
    dx_right = x_max / n_half_right
    if abs(dx_right - dx_left) > _TILING_RTOL * dx_left:
        raise NonTilingDomain(
            f"right half width {dx_right!r} does not match left half width {dx_left!r}"
        )
    return Grid(
        x_min=float(x_min),
        x_max=float(x_max),
        n_cells=n_half_left + n_half_right,
        dx=dx_left,
        interface_index=n_half_left,
    )


@dataclass(frozen=True)
class Kernel:
    """Nonincreasing look-ahead weight w on [0, eta] with unit integral.

    Both families are fixed closed forms, so smoothness, w(eta)=w'(eta)=0
    and the unit integral hold by construction:

        poly2: w(s) = 3 (eta-s)^2 / eta^3
        poly4: w(s) = 5 (eta-s)^4 / eta^5
    """

    family: str
    eta: float
    w0: float

    def __call__(self, s):
        """Pointwise w(s); zero outside [0, eta]."""
        s = np.asarray(s, dtype=float)
        u = np.clip((self.eta - s) / self.eta, 0.0, 1.0)
        inside = (s >= 0.0) & (s <= self.eta)
        if self.family == "poly2":
            vals = 3.0 * u * u / self.eta
        else:
            vals = 5.0 * u * u * u * u / self.eta
        return np.where(inside, vals, 0.0)

    def prime(self, s):
        """Pointwise w'(s); zero outside [0, eta]."""
        s = np.asarray(s, dtype=float)
        u = np.clip((self.eta - s) / self.eta, 0.0, 1.0)
        inside = (s >= 0.0) & (s <= self.eta)
        if self.family == "poly2":
            vals = -6.0 * u / self.eta**2
        else:
            vals = -20.0 * u * u * u / self.eta**2
        return np.where(inside, vals, 0.0)

    def integral(self, s):
        """Antiderivative I(s) = integral of w over [0, s], clamped to [0, eta]."""
        s = np.asarray(s, dtype=float)
        u = np.clip((self.eta - s) / self.eta, 0.0, 1.0)
        if self.family == "poly2":
            tail = u * u * u
        else:
            tail = u * u * u * u * u
        return np.where(s <= 0.0, 0.0, 1.0 - tail)


def make_kernel(family: str, eta: float) -> Kernel:
    if eta <= 0.0:
        raise NonPositiveEta(f"eta must be > 0, got {eta}")
    if family not in KERNEL_FAMILIES:
        raise ValidationError(f"unknown kernel family {family!r}; expected one of {KERNEL_FAMILIES}")
    w0 = 3.0 / eta if family == "poly2" else 5.0 / eta
    return Kernel(family=family, eta=float(eta), w0=w0)


@dataclass(frozen=True)
class VelocityField:
    """Piecewise-constant free-flow speed: v_left for x<0, v_right for x>0."""

    v_left: float
    v_right: float

    def __post_init__(self):
        if self.v_left <= 0.0 or self.v_right <= 0.0:
            raise ValidationError("velocities must be strictly positive")
        object.__setattr__(self, "v_left", float(self.v_left))
        object.__setattr__(self, "v_right", float(self.v_right))

    @property
    def in_regime(self) -> bool:
        """True iff the maximum principle is guaranteed (v_left < v_right)."""
        return self.v_left < self.v_right

    @property
    def v_max(self) -> float:
        return max(self.v_left, self.v_right)

    def at_boundaries(self, grid: Grid) -> np.ndarray:
        """Upwind-side speed at every cell boundary (v_left exactly at x=0)."""
        v = np.full(grid.n_cells + 1, self.v_right)
        v[: grid.interface_index + 1] = self.v_left
        return v

    def at_centers(self, grid: Grid) -> np.ndarray:
        v = np.full(grid.n_cells, self.v_right)
        v[: grid.interface_index] = self.v_left
        return v


@dataclass(frozen=True)
class DensityField:
    """Cell-averaged density values at one time level, frozen in [0, 1].

    Evolved fields are built with check_range=False: out-of-regime runs
    may legitimately leave [0, 1], and range enforcement during evolution
    belongs to the solver guard, not the container.
    """

    values: np.ndarray
    grid: Grid
    time: float = 0.0
    check_range: InitVar[bool] = True

    def __post_init__(self, check_range: bool):
        vals = np.ascontiguousarray(self.values, dtype=float)
        if vals.shape != (self.grid.n_cells,):
            raise ValidationError(
                f"expected {self.grid.n_cells} cell values, got shape {vals.shape}"
            )
        if not np.all(np.isfinite(vals)):
            raise OutOfRangeDensity("density values must be finite")
        if check_range and (vals.min() < -1e-12 or vals.max() > 1.0 + 1e-12):
            raise OutOfRangeDensity(
                f"density values must lie in [0, 1]; range is [{vals.min()}, {vals.max()}]"
            )
        vals.setflags(write=False)
        object.__setattr__(self, "values", vals)

    def mass(self) -> float:
        return float(self.values.sum() * self.grid.dx)

    def total_variation(self) -> float:
        return float(np.abs(np.diff(self.values)).sum())


# ---------------------------------------------------------------------------
# Initial profiles
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RiemannProfile:
    """Two constant states with a jump at x=jump (default: the interface)."""

    left: float
    right: float
    jump: float = 0.0


@dataclass(frozen=True)
class BumpProfile:
    """Compactly supported C^2 bump height*(1-u^2)^3, u=(x-center)/width."""

    center: float
    width: float
    height: float


@dataclass(frozen=True)
class CustomProfile:
    """Explicit table of cell averages (length must match the grid)."""

    values: tuple

    @staticmethod
    def from_array(values) -> "CustomProfile":
        return CustomProfile(tuple(float(v) for v in values))


Profile = RiemannProfile | BumpProfile | CustomProfile


def _bump_antiderivative(u: np.ndarray) -> np.ndarray:
    # integral of (1-u^2)^3 du, valid on [-1, 1]
    return u - u**3 + 0.6 * u**5 - u**7 / 7.0


_BUMP_FULL_INTEGRAL = float(_bump_antiderivative(np.asarray(1.0)) - _bump_antiderivative(np.asarray(-1.0)))


def profile_cell_averages(spec: Profile, grid: Grid) -> np.ndarray:
    """Exact cell averages of a profile; no range check (see sample_initial)."""
    bnd = grid.boundaries()
    if isinstance(spec, RiemannProfile):
        left_frac = np.clip((spec.jump - bnd[:-1]) / grid.dx, 0.0, 1.0)
        return spec.left * left_frac + spec.right * (1.0 - left_frac)
    if isinstance(spec, BumpProfile):
        if spec.width <= 0.0:
            raise ValidationError("bump width must be > 0")
        u = np.clip((bnd - spec.center) / spec.width, -1.0, 1.0)
        anti = _bump_antiderivative(u) * spec.width
        return spec.height * np.diff(anti) / grid.dx
    if isinstance(spec, CustomProfile):
        vals = np.asarray(spec.values, dtype=float)
        if vals.shape != (grid.n_cells,):
            raise ValidationError(
                f"custom table has {vals.size} entries, grid has {grid.n_cells} cells"
            )
        return vals.copy()
    raise ValidationError(f"unknown profile spec {spec!r}")


def profile_mass(spec: Profile, grid: Grid) -> float:
    """Analytic integral of the profile over the domain."""
    if isinstance(spec, RiemannProfile):
        return spec.left * (spec.jump - grid.x_min) + spec.right * (grid.x_max - spec.jump)
    if isinstance(spec, BumpProfile):
        lo = max(grid.x_min, spec.center - spec.width)
        hi = min(grid.x_max, spec.center + spec.width)
        if hi <= lo:
            return 0.0
        u = np.asarray([(lo - spec.center) / spec.width, (hi - spec.center) / spec.width])
        anti = _bump_antiderivative(u) * spec.width
        return float(spec.height * (anti[1] - anti[0]))
    return float(np.sum(spec.values) * grid.dx)


def sample_initial(spec: Profile, grid: Grid) -> DensityField:
    """Cell-average a profile onto the grid, enforcing values in [0, 1].

    Piecewise-constant specs are averaged exactly (the cell containing a
    Riemann jump takes the exact mixture), so mass accounting is exact.
    """
    vals = profile_cell_averages(spec, grid)
    if vals.min() < -1e-12 or vals.max() > 1.0 + 1e-12:
        raise OutOfRangeDensity(
            f"initial profile leaves [0, 1]: range [{vals.min()}, {vals.max()}]"
        )
    return DensityField(values=np.clip(vals, 0.0, 1.0), grid=grid, time=0.0)


# ---------------------------------------------------------------------------
# Scenario
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Scenario:
    """One fully specified run: grid, kernel (None = local mode), speeds,
    initial profile, horizon and solver settings."""

    grid: Grid
    kernel: Kernel | None
    velocity: VelocityField
    initial: Profile
    t_end: float
    cfl: float = 0.5
    solver: str = "nonlocal_upwind"
    epsilon: float = 0.0

    def __post_init__(self):
        if self.solver not in SOLVER_KINDS:
            raise ValidationError(f"unknown solver {self.solver!r}; expected one of {SOLVER_KINDS}")
        if self.t_end < 0.0:
            raise ValidationError("t_end must be >= 0")
        if not (0.0 < self.cfl <= 1.0):
            raise ValidationError("cfl must lie in (0, 1]")
        if self.solver == "local_godunov":
            if self.kernel is not None:
                raise ValidationError("local_godunov runs in local mode; kernel must be None")
        else:
            if self.kernel is None:
                raise ValidationError(f"solver {self.solver!r} requires a kernel")
        if self.solver == "viscous":
            if self.epsilon <= 0.0:
                raise ValidationError("viscous solver requires epsilon > 0")
            if self.epsilon >= self.kernel.eta:
                raise ValidationError("viscous epsilon must be smaller than the kernel eta")
        # Construction validates the initial range eagerly.
        sample_initial(self.initial, self.grid)
        self._check_margins()

    @property
    def in_regime(self) -> bool:
        return self.velocity.in_regime

    def initial_field(self) -> DensityField:
        return sample_initial(self.initial, self.grid)

    def _check_margins(self):
        """Warn when the far fields are not constant over the zone the
        truncated domain needs for exactness: inflow can travel v*t from the
        left edge, and the look-ahead window near the right edge must see
        constant data for all time."""
        grid = self.grid
        vals = profile_cell_averages(self.initial, grid)
        v_reach = self.velocity.v_max * self.t_end
        eta = self.kernel.eta if self.kernel is not None else 0.0
        centers = grid.centers()
        left = vals[centers <= grid.x_min + v_reach]
        right = vals[centers >= grid.x_max - eta - v_reach]
        for name, seg in (("left", left), ("right", right)):
            if seg.size > 1 and np.ptp(seg) > 1e-12:
                warnings.warn(
                    f"initial data varies inside the {name} margin; "
                    "domain truncation is no longer exact",
                    MarginWarning,
                    stacklevel=3,
                )


def kernel_first_moment(kernel: Kernel) -> float:
    """Closed-form first moment of w: eta/4 for poly2, eta/6 for poly4."""
    if kernel.family == "poly2":
        return kernel.eta / 4.0
    return kernel.eta / 6.0
