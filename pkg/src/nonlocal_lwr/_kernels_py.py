"""Pure-numpy implementations of the hot per-step kernels.

This module is the reference backend; `nonlocal_lwr._speedups` provides a
compiled twin with identical signatures. Both operate on plain float64
arrays so they can be swapped freely (see `nonlocal_lwr.backend`).

Conventions shared by both backends:
  * a grid of n cells has n+1 boundaries; boundary i sits left of cell i;
  * the ghost cell left of the domain copies cell 0, the ghost cells right
    of the domain copy cell n-1 (constant far fields);
  * `lam` is dt/dx, `d` is eps*dt/dx**2.
"""

from __future__ import annotations

import numpy as np

NAME = "python"


def conv_boundaries(rho: np.ndarray, gamma: np.ndarray) -> np.ndarray:
    """Downstream weighted average W at every boundary: W[i] = sum_k gamma[k]*rho[i+k].

    Cells beyond the right edge take the last cell's value.
    """
    n = rho.shape[0]
    k = gamma.shape[0]
    ext = np.empty(n + k)
    ext[:n] = rho
    ext[n:] = rho[n - 1]
    return np.correlate(ext, gamma, mode="valid")


def upwind_step(
    rho: np.ndarray,
    conv: np.ndarray,
    v_bnd: np.ndarray,
    lam: float,
    d: float = 0.0,
) -> np.ndarray:
    """One conservative upwind update, optionally with explicit diffusion.

    Flux at boundary i is v_bnd[i] * rho[i-1] * (1 - conv[i]) with the
    upwind ghost rho[-1] = rho[0]. Diffusive fluxes vanish at the domain
    edges (Neumann ghosts), so diffusion never changes the total mass.
    """
    n = rho.shape[0]
    up = np.empty(n + 1)
    up[0] = rho[0]
    up[1:] = rho
    flux = v_bnd * up * (1.0 - conv)
    out = rho - lam * (flux[1:] - flux[:-1])
    if d != 0.0:
        lap = np.empty(n)
        lap[1:-1] = rho[2:] - 2.0 * rho[1:-1] + rho[:-2]
        lap[0] = rho[1] - rho[0]
        lap[n - 1] = rho[n - 2] - rho[n - 1]
        out += d * lap
    return out


def godunov_step(
    rho: np.ndarray,
    v_up: np.ndarray,
    v_dn: np.ndarray,
    lam: float,
) -> np.ndarray:
    """One Godunov update for the local flux q(r) = v * r * (1 - r).

    The boundary flux is the classical demand/supply minimum, with the
    upwind-side speed v_up[i] feeding the demand and the downwind-side
    speed v_dn[i] feeding the supply (they differ only at the interface).
    """
    n = rho.shape[0]
    up = np.empty(n + 1)
    up[0] = rho[0]
    up[1:] = rho
    dn = np.empty(n + 1)
    dn[:n] = rho
    dn[n] = rho[n - 1]
    demand = v_up * np.where(up < 0.5, up * (1.0 - up), 0.25)
    supply = v_dn * np.where(dn < 0.5, 0.25, dn * (1.0 - dn))
    flux = np.minimum(demand, supply)
    return rho - lam * (flux[1:] - flux[:-1])
