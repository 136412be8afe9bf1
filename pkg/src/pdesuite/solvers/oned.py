"""One-dimensional scalar PDE solvers.

The ``*_rhs``/``*_step`` kernels act on the last axis of an array, so any
leading axes are treated as independent samples.  The public ``solve_*``
functions wrap them for single Fields and return Trajectories.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..grid import (DEFAULT_CFL_ADV, DEFAULT_CFL_DIFF, Field, Grid, NumericalFailure, TimeAxis,
                    Trajectory, cfl_timestep, march)


@dataclass(frozen=True)
class AdvectionParams:
    beta: float = 0.4

    def __post_init__(self):
        if not math.isfinite(self.beta):
            raise ValueError("advection speed must be finite")


@dataclass(frozen=True)
class BurgersParams:
    nu: float = 0.01

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError("Burgers viscosity nu must be positive")

    @property
    def diffusivity(self) -> float:
        return self.nu / math.pi

    def reynolds(self, u_scale: float, length: float = 1.0) -> float:
        return math.pi * u_scale * length / self.nu


@dataclass(frozen=True)
class ReactDiffParams:
    nu: float = 0.5
    rho: float = 1.0

    def __post_init__(self):
        if self.nu < 0 or self.rho < 0:
            raise ValueError("nu and rho must be non-negative")


@dataclass(frozen=True)
class SorptionParams:
    porosity: float = 0.29
    bulk_density: float = 2880.0
    freundlich_k: float = 3.5e-4
    freundlich_nf: float = 0.874
    diffusion: float = 5e-4
    u_min: float = 1e-8
    left_value: float = 1.0
    outlet_sign: float = -1.0

    def __post_init__(self):
        if not 0 < self.porosity < 1:
            raise ValueError("porosity must lie in (0, 1)")
        if not 0 < self.freundlich_nf < 1:
            raise ValueError("Freundlich exponent must lie in (0, 1)")
        if min(self.bulk_density, self.freundlich_k, self.diffusion, self.u_min) <= 0:
            raise ValueError("sorption parameters must be positive")
        if self.outlet_sign not in (-1.0, 1.0):
            raise ValueError("outlet_sign must be -1 (outflow) or +1 (literal)")


def _scalar(field: Field, what: str) -> np.ndarray:
    if field.grid.dim != 1 or field.channels != 1:
        raise ValueError(f"{what} needs a 1D single-channel field")
    return np.array(field.values[:, 0])


def _trajectory(grid: Grid, time: TimeAxis, frames: np.ndarray) -> Trajectory:
    return Trajectory(time, grid, frames[..., None])


def ssp_rk2(u: np.ndarray, dt: float, rhs) -> np.ndarray:
    u1 = u + dt * rhs(u)
    return 0.5 * u + 0.5 * (u1 + dt * rhs(u1))


def rk4(u: np.ndarray, dt: float, rhs) -> np.ndarray:
    k1 = rhs(u)
    k2 = rhs(u + 0.5 * dt * k1)
    k3 = rhs(u + 0.5 * dt * k2)
    k4 = rhs(u + dt * k3)
    return u + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


# -- advection ---------------------------------------------------------------

def advect_exact(u0: Field, beta: float, t: float) -> Field:
    """Periodic shift ``u0(x - beta t)`` by Fourier phase rotation."""
    u = _scalar(u0, "advect_exact")
    shift = beta * t
    if shift == 0:
        return Field(u0.grid, u)
    n, L = u0.grid.n_cells[0], u0.grid.length[0]
    k = np.fft.rfftfreq(n, 1.0 / n)
    u_hat = np.fft.rfft(u) * np.exp(-2j * np.pi * k * shift / L)
    if n % 2 == 0:
        # the Nyquist mode cannot carry a phase; keep its real projection
        u_hat[-1] = u_hat[-1].real * np.cos(np.pi * n * shift / L)
    return Field(u0.grid, np.fft.irfft(u_hat, n))


def advection_rhs(u: np.ndarray, beta: float, dx: float) -> np.ndarray:
    """Second-order fully upwinded flux difference (periodic)."""
    if beta >= 0:
        flux = 0.5 * beta * (3.0 * u - np.roll(u, 1, axis=-1))         # face i+1/2
    else:
        flux = 0.5 * beta * (3.0 * np.roll(u, -1, axis=-1) - np.roll(u, -2, axis=-1))
    return -(flux - np.roll(flux, 1, axis=-1)) / dx


def advection_march(u0: np.ndarray, beta: float, dx: float, time: TimeAxis,
                    cfl: float = DEFAULT_CFL_ADV) -> np.ndarray:
    dt_stable = cfl_timestep(dx, abs(beta), 0.0, cfl_adv=cfl) if beta != 0 else math.inf
    return march(u0, lambda u, dt: ssp_rk2(u, dt, lambda v: advection_rhs(v, beta, dx)),
                 lambda u: dt_stable, time)


def solve_advection(u0: Field, params: AdvectionParams, time: TimeAxis,
                    cfl: float = DEFAULT_CFL_ADV) -> Trajectory:
    u = _scalar(u0, "solve_advection")
    frames = advection_march(u, params.beta, u0.grid.dx[0], time, cfl)
    return _trajectory(u0.grid, time, frames)


# -- Burgers -----------------------------------------------------------------

def minmod(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    return np.where(a * b > 0, np.sign(a) * np.minimum(np.abs(a), np.abs(b)), 0.0)


def burgers_godunov_flux(ul: np.ndarray, ur: np.ndarray) -> np.ndarray:
    """Exact Riemann flux for f(u) = u^2/2."""
    fl, fr = 0.5 * ul * ul, 0.5 * ur * ur
    rarefaction = np.where(ul > 0, fl, np.where(ur < 0, fr, 0.0))
    shock = np.maximum(fl, fr)
    return np.where(ul <= ur, rarefaction, shock)


def burgers_rhs(u: np.ndarray, diffusivity: float, dx: float) -> np.ndarray:
    up, um = np.roll(u, -1, axis=-1), np.roll(u, 1, axis=-1)
    slope = minmod(u - um, up - u)
    ul = u + 0.5 * slope                     # left state at face i+1/2
    ur = np.roll(u - 0.5 * slope, -1, axis=-1)
    flux = burgers_godunov_flux(ul, ur)
    adv = -(flux - np.roll(flux, 1, axis=-1)) / dx
    if diffusivity == 0:
        return adv
    return adv + diffusivity * (up - 2.0 * u + um) / (dx * dx)


def burgers_dt(u: np.ndarray, diffusivity: float, dx: float, cfl_adv: float = DEFAULT_CFL_ADV,
               cfl_diff: float = DEFAULT_CFL_DIFF) -> float:
    speed = float(np.max(np.abs(u)))
    if speed == 0 and diffusivity == 0:
        return math.inf
    # the explicit update is monotone only if the advective and diffusive
    # Courant numbers together stay bounded, so combine the two limits
    dt_adv = cfl_adv * dx / speed if speed > 0 else math.inf
    dt_diff = cfl_diff * dx * dx / diffusivity if diffusivity > 0 else math.inf
    return 1.0 / (1.0 / dt_adv + 1.0 / dt_diff)


def burgers_march(u0: np.ndarray, params: BurgersParams, dx: float, time: TimeAxis) -> np.ndarray:
    D = params.diffusivity
    return march(u0, lambda u, dt: ssp_rk2(u, dt, lambda v: burgers_rhs(v, D, dx)),
                 lambda u: burgers_dt(u, D, dx), time)


def solve_burgers(u0: Field, params: BurgersParams, time: TimeAxis) -> Trajectory:
    u = _scalar(u0, "solve_burgers")
    return _trajectory(u0.grid, time, burgers_march(u, params, u0.grid.dx[0], time))


# -- diffusion-reaction --------------------------------------------------------

def pes_logistic_step(u, rho: float, dt: float):
    """Exact solution of du/dt = rho u (1 - u) after time dt."""
    u = np.asarray(u, dtype=float)
    decay = math.exp(-rho * dt)
    out = u / (u + (1.0 - u) * decay)
    out = np.where(u == 0.0, 0.0, out)
    return out if out.ndim else float(out)


def heat_rhs(u: np.ndarray, nu: float, dx: float) -> np.ndarray:
    return nu * (np.roll(u, -1, axis=-1) - 2.0 * u + np.roll(u, 1, axis=-1)) / (dx * dx)


def diffreact_step(u: np.ndarray, params: ReactDiffParams, dx: float, dt: float) -> np.ndarray:
    if params.rho:
        u = pes_logistic_step(u, params.rho, 0.5 * dt)
    if params.nu:
        u = ssp_rk2(u, dt, lambda v: heat_rhs(v, params.nu, dx))
    if params.rho:
        u = pes_logistic_step(u, params.rho, 0.5 * dt)
    return u


def diffreact_march(u0: np.ndarray, params: ReactDiffParams, dx: float, time: TimeAxis) -> np.ndarray:
    dt_stable = cfl_timestep(dx, 0.0, params.nu) if params.nu > 0 else math.inf
    return march(u0, lambda u, dt: diffreact_step(u, params, dx, dt), lambda u: dt_stable, time)


def solve_diffreact1d(u0: Field, params: ReactDiffParams, time: TimeAxis) -> Trajectory:
    u = _scalar(u0, "solve_diffreact1d")
    return _trajectory(u0.grid, time, diffreact_march(u, params, u0.grid.dx[0], time))


# -- diffusion-sorption --------------------------------------------------------

def freundlich_retardation(u, params: SorptionParams = SorptionParams()):
    """Retardation factor of the Freundlich isotherm, clamped below at ``u_min``."""
    u = np.asarray(u, dtype=float)
    if np.any(u < 0):
        raise ValueError("retardation factor is undefined for negative concentration")
    return _retardation(u, params)


def _retardation(u, p: SorptionParams):
    uc = np.maximum(u, p.u_min)
    coef = (1.0 - p.porosity) / p.porosity * p.bulk_density * p.freundlich_k * p.freundlich_nf
    out = 1.0 + coef * uc ** (p.freundlich_nf - 1.0)
    return out if np.ndim(out) else float(out)


def cauchy_boundary_value(a: np.ndarray, b: np.ndarray, D: float, dx: float, sign: float = -1.0) -> np.ndarray:
    """Outlet face value u_b solving u_b = sign * D * du/dx.

    ``a`` and ``b`` are the last and second-to-last cell values; the
    derivative at the face is the one-sided (8 u_b - 9 a + b) / (3 dx).
    ``sign=-1`` is the outflow (flux leaves the domain) convention;
    ``sign=+1`` reproduces the literal form, which amplifies once
    dx < 8D/3 and is refused there.
    """
    denom = 3.0 * dx - sign * 8.0 * D
    if denom <= 0.0:
        raise ValueError(f"u = +D du/dx outlet is anti-dissipative for dx={dx:.3g} < 8D/3; use the outflow sign")
    return -sign * D * (9.0 * a - b) / denom


def diffsorp_rhs(u: np.ndarray, p: SorptionParams, dx: float) -> np.ndarray:
    D = p.diffusion
    face_u = 0.5 * (u[..., 1:] + u[..., :-1])
    inner = D / _retardation(face_u, p) * (u[..., 1:] - u[..., :-1]) / dx
    # Dirichlet inlet through the ghost 2*u_left - u_0: face value is exact
    left = D / _retardation(np.full(u.shape[:-1], p.left_value), p) * 2.0 * (u[..., 0] - p.left_value) / dx
    ub = cauchy_boundary_value(u[..., -1], u[..., -2], D, dx, p.outlet_sign)
    # the outlet condition fixes D du/dx = sign * u_b, so the face flux is that over R
    right = p.outlet_sign * ub / _retardation(np.maximum(ub, 0.0), p)
    flux = np.concatenate([left[..., None], inner, right[..., None]], axis=-1)
    return (flux[..., 1:] - flux[..., :-1]) / dx


def diffsorp_dt(u: np.ndarray, p: SorptionParams, dx: float, cfl_diff: float = DEFAULT_CFL_DIFF) -> float:
    u_top = max(float(np.max(u)), p.left_value)
    r_min = _retardation(u_top, p)
    dt = cfl_timestep(dx, 0.0, p.diffusion / r_min, cfl_diff=cfl_diff)
    # outlet coupling: d(u_last)/dt picks up |du_b/du_last| / (R dx)
    gain = 9.0 * p.diffusion / abs(3.0 * dx - p.outlet_sign * 8.0 * p.diffusion)
    r_out = r_min if p.outlet_sign < 0 else _retardation(p.u_min, p)
    return min(dt, 2.0 * r_out * dx / gain)


def diffsorp_march(u0: np.ndarray, p: SorptionParams, dx: float, time: TimeAxis) -> np.ndarray:
    return march(u0, lambda u, dt: rk4(u, dt, lambda v: diffsorp_rhs(v, p, dx)),
                 lambda u: diffsorp_dt(u, p, dx), time)


def solve_diffsorp(u0: Field, params: SorptionParams, time: TimeAxis) -> Trajectory:
    u = _scalar(u0, "solve_diffsorp")
    frames = diffsorp_march(u, params, u0.grid.dx[0], time)
    if not np.all(np.isfinite(frames)):
        raise NumericalFailure("diffusion-sorption run produced non-finite values")
    return _trajectory(u0.grid, time, frames)


def diffsorp_left_face_value(u: np.ndarray, p: SorptionParams = SorptionParams()) -> np.ndarray:
    """Value at the inlet face reconstructed from the Dirichlet ghost cell."""
    ghost = 2.0 * p.left_value - u[..., 0]
    return 0.5 * (ghost + u[..., 0])
