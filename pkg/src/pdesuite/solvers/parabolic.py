"""2D FitzHugh-Nagumo diffusion-reaction and steady Darcy flow."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..grid import DEFAULT_CFL_DIFF, Field, Grid, NumericalFailure, TimeAxis, Trajectory, cfl_timestep, march
from .oned import rk4


@dataclass(frozen=True)
class FhnParams:
    du: float = 1e-3
    dv: float = 5e-3
    k: float = 5e-3
    reactions: bool = True

    def __post_init__(self):
        if not (self.du > 0 and self.dv > 0):
            raise ValueError("diffusivities must be positive")


@dataclass(frozen=True)
class DarcyParams:
    beta: float = 1.0
    pseudo_dt_cfl: float = DEFAULT_CFL_DIFF
    tol: float = 1e-6
    max_iter: int = 1_000_000
    eps: float = 1e-30

    def __post_init__(self):
        if not self.tol > 0:
            raise ValueError("tol must be positive")


class DarcyConvergenceError(NumericalFailure):
    pass


def fhn_reaction(u, v, params: FhnParams = FhnParams()):
    ru = u - u**3 - params.k - v
    rv = u - v
    return ru, rv


def neumann_laplacian(u: np.ndarray, dx: float, dy: float) -> np.ndarray:
    """5-point FV Laplacian over the last two axes with zero-flux walls."""
    p = np.pad(u, [(0, 0)] * (u.ndim - 2) + [(1, 1), (1, 1)], mode="edge")
    c = p[..., 1:-1, 1:-1]
    return ((p[..., 2:, 1:-1] - 2.0 * c + p[..., :-2, 1:-1]) / (dx * dx)
            + (p[..., 1:-1, 2:] - 2.0 * c + p[..., 1:-1, :-2]) / (dy * dy))


def boundary_flux(u: np.ndarray, dx: float, dy: float) -> float:
    """Net diffusive flux through the four walls using the ghost-cell gradients."""
    p = np.pad(u, 1, mode="edge")
    fx = (p[1, 1:-1] - p[0, 1:-1]).sum() * dy / dx - (p[-1, 1:-1] - p[-2, 1:-1]).sum() * dy / dx
    fy = (p[1:-1, 1] - p[1:-1, 0]).sum() * dx / dy - (p[1:-1, -1] - p[1:-1, -2]).sum() * dx / dy
    return float(fx + fy)


def fhn_rhs(state: np.ndarray, params: FhnParams, dx: float, dy: float) -> np.ndarray:
    """``state`` has a trailing channel axis [u, v] after two spatial axes."""
    u, v = state[..., 0], state[..., 1]
    du = params.du * neumann_laplacian(u, dx, dy)
    dv = params.dv * neumann_laplacian(v, dx, dy)
    if params.reactions:
        ru, rv = fhn_reaction(u, v, params)
        du, dv = du + ru, dv + rv
    return np.stack([du, dv], axis=-1)


def _fhn_dt(state: np.ndarray, params: FhnParams, grid: Grid) -> float:
    dt = cfl_timestep(grid, 0.0, 2.0 * max(params.du, params.dv))
    if params.reactions:
        # stiffest reaction eigenvalue ~ |1 - 3u^2|; RK4 is stable up to ~2.78
        stiff = 1.0 + 3.0 * float(np.max(state[..., 0] ** 2))
        dt = min(dt, 1.0 / stiff)
    return dt


def solve_diffreact2d(u0: Field, v0: Field, params: FhnParams, time: TimeAxis) -> Trajectory:
    grid = u0.grid
    if grid.dim != 2 or v0.grid != grid:
        raise ValueError("FitzHugh-Nagumo solver needs two fields on the same 2D grid")
    dx, dy = grid.dx
    state = np.stack([u0.values[..., 0], v0.values[..., 0]], axis=-1)
    frames = march(state, lambda s, dt: rk4(s, dt, lambda w: fhn_rhs(w, params, dx, dy)),
                   lambda s: _fhn_dt(s, params, grid), time)
    if not np.all(np.isfinite(frames)):
        raise NumericalFailure("diffusion-reaction run produced non-finite values")
    return Trajectory(time, grid, frames, ("u", "v"))


# -- Darcy ---------------------------------------------------------------------

def _harmonic(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return 2.0 * a * b / (a + b)


def darcy_operator(u: np.ndarray, a: np.ndarray, dx: float, dy: float) -> np.ndarray:
    """div(a grad u) with u = 0 on the boundary (ghost -u, wall coefficient = cell a)."""
    ax = _harmonic(a[1:, :], a[:-1, :])
    ay = _harmonic(a[:, 1:], a[:, :-1])
    fx = np.zeros((u.shape[0] + 1, u.shape[1]))
    fy = np.zeros((u.shape[0], u.shape[1] + 1))
    fx[1:-1] = ax * (u[1:, :] - u[:-1, :]) / dx
    fx[0] = a[0] * 2.0 * u[0] / dx          # (u0 - ghost)/dx, ghost = -u0
    fx[-1] = -a[-1] * 2.0 * u[-1] / dx
    fy[:, 1:-1] = ay * (u[:, 1:] - u[:, :-1]) / dy
    fy[:, 0] = a[:, 0] * 2.0 * u[:, 0] / dy
    fy[:, -1] = -a[:, -1] * 2.0 * u[:, -1] / dy
    return (fx[1:] - fx[:-1]) / dx + (fy[:, 1:] - fy[:, :-1]) / dy


@dataclass
class DarcyResult:
    field: Field           # channels [a, u]
    iterations: int
    residual: float        # max |div(a grad u) + beta|

    @property
    def solution(self) -> np.ndarray:
        return self.field.values[..., 1]


def solve_darcy_steady(a_field: Field, params: DarcyParams, u_init: np.ndarray | None = None) -> DarcyResult:
    """Pseudo-time march of u_t = div(a grad u) + beta to steady state."""
    grid = a_field.grid
    if grid.dim != 2:
        raise ValueError("Darcy solver needs a 2D grid")
    a = np.array(a_field.values[..., 0])
    if np.any(a <= 0):
        raise ValueError("diffusion coefficient must be positive everywhere")
    dx, dy = grid.dx
    u = np.zeros(grid.shape) if u_init is None else np.array(u_init, dtype=float)
    if params.beta == 0 and not np.any(u):
        return DarcyResult(Field(grid, np.stack([a, u], axis=-1)), 0, 0.0)
    # corner cells carry a diagonal of 6a/dx^2 (two half-distance walls);
    # 0.25 dx^2 / (1.5 a) keeps the explicit update monotone there
    dt = cfl_timestep(grid, 0.0, 1.5 * float(a.max()), cfl_diff=params.pseudo_dt_cfl)
    beta = params.beta
    for it in range(1, params.max_iter + 1):
        du = dt * (darcy_operator(u, a, dx, dy) + beta)
        u = u + du
        change = np.max(np.abs(du)) / (dt * np.max(np.abs(u)) + params.eps)
        if not math.isfinite(change):
            raise NumericalFailure("Darcy pseudo-time march diverged")
        if change < params.tol:
            residual = float(np.max(np.abs(darcy_operator(u, a, dx, dy) + beta)))
            return DarcyResult(Field(grid, np.stack([a, u], axis=-1)), it, residual)
    residual = float(np.max(np.abs(darcy_operator(u, a, dx, dy) + beta)))
    raise DarcyConvergenceError(
        f"no steady state after {params.max_iter} pseudo-steps (residual {residual:.3e})")
