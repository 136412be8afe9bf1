"""Finite-volume solvers for compressible Navier-Stokes and shallow water.

Both use minmod-limited MUSCL reconstruction of primitive variables, an
approximate Riemann solver at each face (HLLC for gas dynamics, HLL for
shallow water) and SSP-RK2 in time.  Multi-dimensional updates are unsplit:
every RK stage sums flux differences from all axes.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..grid import DEFAULT_CFL_ADV, DEFAULT_CFL_DIFF, Field, Grid, NumericalFailure, TimeAxis, Trajectory, \
    cfl_timestep, march
from .oned import minmod, ssp_rk2

GAMMA = 5.0 / 3.0


class PositivityError(NumericalFailure):
    """Density, pressure or water depth became non-positive."""


@dataclass(frozen=True)
class ConservedState:
    """Channels ``[rho, rho v_1..v_d, E]`` on a grid."""

    grid: Grid
    values: np.ndarray
    gamma: float = GAMMA

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape + (self.grid.dim + 2,):
            raise ValueError(f"conserved state must have shape {self.grid.shape + (self.grid.dim + 2,)}")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        check_positive(to_primitive(values, self.gamma))

    @property
    def density(self) -> np.ndarray:
        return self.values[..., 0]

    def primitive(self) -> np.ndarray:
        return to_primitive(self.values, self.gamma)

    def totals(self) -> np.ndarray:
        """Discrete integrals of every conserved channel."""
        axes = tuple(range(self.grid.dim))
        return self.values.sum(axis=axes) * self.grid.cell_volume


@dataclass(frozen=True)
class CnsParams:
    eta: float = 1e-8
    zeta: float = 1e-8
    bc: str = "periodic"
    cfl: float = DEFAULT_CFL_ADV

    def __post_init__(self):
        if self.eta < 0 or self.zeta < 0:
            raise ValueError("viscosities must be non-negative")
        if self.bc not in ("periodic", "outgoing"):
            raise ValueError(f"unknown boundary condition {self.bc!r}")


@dataclass(frozen=True)
class SweState:
    """Channels ``[h, hu, hv]`` plus gravity and bathymetry."""

    grid: Grid
    values: np.ndarray
    g: float = 1.0
    bathymetry: np.ndarray | None = None

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if self.grid.dim != 2 or values.shape != self.grid.shape + (3,):
            raise ValueError("shallow-water state needs a 2D grid and 3 channels")
        if np.any(values[..., 0] <= 0):
            raise PositivityError("water depth must be positive")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @classmethod
    def at_rest(cls, h: Field, g: float = 1.0, bathymetry: np.ndarray | None = None):
        hv = h.values[..., 0]
        return cls(h.grid, np.stack([hv, np.zeros_like(hv), np.zeros_like(hv)], axis=-1), g, bathymetry)


# -- equation of state -----------------------------------------------------------

def eos_pressure(q: np.ndarray, gamma: float = GAMMA) -> np.ndarray:
    rho, E = q[..., 0], q[..., -1]
    kinetic = 0.5 * np.sum(q[..., 1:-1] ** 2, axis=-1) / rho
    return (gamma - 1.0) * (E - kinetic)


def eos_energy(rho, vel, p, gamma: float = GAMMA):
    """Total energy; ``vel`` carries the velocity components on its last axis."""
    vel = np.asarray(vel, dtype=float)
    v2 = np.sum(vel**2, axis=-1) if vel.ndim else vel**2
    return np.asarray(p) / (gamma - 1.0) + 0.5 * np.asarray(rho) * v2


def to_primitive(q: np.ndarray, gamma: float = GAMMA) -> np.ndarray:
    rho = q[..., :1]
    vel = q[..., 1:-1] / rho
    p = eos_pressure(q, gamma)[..., None]
    return np.concatenate([rho, vel, p], axis=-1)


def to_conserved(w: np.ndarray, gamma: float = GAMMA) -> np.ndarray:
    rho = w[..., :1]
    vel = w[..., 1:-1]
    E = eos_energy(w[..., 0], vel, w[..., -1], gamma)[..., None]
    return np.concatenate([rho, rho * vel, E], axis=-1)


def check_positive(w: np.ndarray):
    if not np.all(np.isfinite(w)):
        raise PositivityError("state contains non-finite values")
    if np.any(w[..., 0] <= 0):
        raise PositivityError(f"non-positive density (min {w[..., 0].min():.3e})")
    if np.any(w[..., -1] <= 0):
        raise PositivityError(f"non-positive pressure (min {w[..., -1].min():.3e})")


# -- reconstruction and Riemann fluxes ---------------------------------------------

def muscl_reconstruct(w: np.ndarray, axis: int = 0):
    """Minmod-limited face states along ``axis`` from a ghosted array.

    ``w`` holds cell values with at least two ghost cells on each side of
    ``axis``.  Returns ``(left, right)`` states at the faces between the
    cells ``1..n-2`` of the ghosted array: ``left[i]`` comes from cell
    ``i+1``, ``right[i]`` from cell ``i+2``, so with two ghost layers the
    result covers every physical face.
    """
    w = np.moveaxis(w, axis, 0)
    d_minus = w[1:-1] - w[:-2]
    d_plus = w[2:] - w[1:-1]
    slope = minmod(d_minus, d_plus)
    inner = w[1:-1]
    left = (inner + 0.5 * slope)[:-1]
    right = (inner - 0.5 * slope)[1:]
    return np.moveaxis(left, 0, axis), np.moveaxis(right, 0, axis)


def euler_flux(w: np.ndarray, axis: int, gamma: float = GAMMA) -> np.ndarray:
    """Physical flux along ``axis`` for primitives ``[rho, v..., p]`` (axis indexes velocity)."""
    rho, p = w[..., 0], w[..., -1]
    vel = w[..., 1:-1]
    un = vel[..., axis]
    E = eos_energy(rho, vel, p, gamma)
    mom = rho[..., None] * vel * un[..., None]
    mom[..., axis] += p
    return np.concatenate([(rho * un)[..., None], mom, (un * (E + p))[..., None]], axis=-1)


def hllc_flux(wl: np.ndarray, wr: np.ndarray, gamma: float = GAMMA, axis: int = 0) -> np.ndarray:
    """HLLC flux between primitive states with Davis wave-speed estimates.

    ``axis`` selects which velocity component is normal to the face.
    """
    wl = np.asarray(wl, dtype=float)
    wr = np.asarray(wr, dtype=float)
    check_positive(wl)
    check_positive(wr)
    rl, pl, ul = wl[..., 0], wl[..., -1], wl[..., 1 + axis]
    rr, pr, ur = wr[..., 0], wr[..., -1], wr[..., 1 + axis]
    cl = np.sqrt(gamma * pl / rl)
    cr = np.sqrt(gamma * pr / rr)
    sl = np.minimum(ul - cl, ur - cr)
    sr = np.maximum(ul + cl, ur + cr)
    ml = rl * (sl - ul)
    mr = rr * (sr - ur)
    s_star = (pr - pl + ul * ml - ur * mr) / (ml - mr)

    ql, qr = to_conserved(wl, gamma), to_conserved(wr, gamma)
    fl, fr = euler_flux(wl, axis, gamma), euler_flux(wr, axis, gamma)

    def star(q, w, s, m, un):
        rho, p = w[..., 0], w[..., -1]
        factor = m / (s - s_star)
        out = factor[..., None] * np.concatenate(
            [np.ones_like(rho)[..., None], w[..., 1:-1], (q[..., -1] / rho
             + (s_star - un) * (s_star + p / m))[..., None]], axis=-1)
        out[..., 1 + axis] = factor * s_star
        return out

    fl_star = fl + sl[..., None] * (star(ql, wl, sl, ml, ul) - ql)
    fr_star = fr + sr[..., None] * (star(qr, wr, sr, mr, ur) - qr)
    sl_, sr_, ss_ = sl[..., None], sr[..., None], s_star[..., None]
    return np.where(sl_ >= 0, fl, np.where(ss_ >= 0, fl_star, np.where(sr_ > 0, fr_star, fr)))


def _pad(a: np.ndarray, axis: int, width: int, bc: str) -> np.ndarray:
    pad = [(0, 0)] * a.ndim
    pad[axis] = (width, width)
    return np.pad(a, pad, mode="wrap" if bc == "periodic" else "edge")


def _central(v: np.ndarray, axis: int, dx: float) -> np.ndarray:
    """Central difference of a ghosted array along ``axis`` (drops one ghost each side)."""
    sl_p = [slice(None)] * v.ndim
    sl_m = [slice(None)] * v.ndim
    sl_p[axis], sl_m[axis] = slice(2, None), slice(None, -2)
    return (v[tuple(sl_p)] - v[tuple(sl_m)]) / (2.0 * dx)


def viscous_flux(w: np.ndarray, grid: Grid, eta: float, zeta: float, bc: str = "periodic") -> np.ndarray:
    """Rate of change of conserved variables due to the viscous stress.

    Face stresses use compact normal derivatives and averaged central
    tangential derivatives; the result is in conservative (face flux) form.
    """
    d = grid.dim
    out = np.zeros(w.shape[:-1] + (d + 2,))
    if eta == 0 and zeta == 0:
        return out
    vel = w[..., 1:-1]
    vg = vel
    for a in range(d):
        vg = _pad(vg, a, 1, bc)
    dx = grid.dx
    inner = tuple(slice(1, -1) for _ in range(d))
    # cell-centered gradients grad[b][..., j] = d v_j / d x_b on interior + one ghost along others
    for a in range(d):
        # faces along axis a: need values at cells i and i+1 along a (with 1 ghost on a)
        sel_core = [slice(1, -1)] * d
        sel_core[a] = slice(None)
        vcore = vg[tuple(sel_core)]                     # ghosted along a only
        lo = [slice(None)] * d
        hi = [slice(None)] * d
        lo[a], hi[a] = slice(None, -1), slice(1, None)
        grad_face = [None] * d
        grad_face[a] = (vcore[tuple(hi)] - vcore[tuple(lo)]) / dx[a]
        for b in range(d):
            if b == a:
                continue
            sel = [slice(1, -1)] * d
            sel[a] = slice(None)
            sel[b] = slice(None)
            vb = vg[tuple(sel)]
            cg = _central(vb, b, dx[b])                  # ghosted along a, interior along b
            grad_face[b] = 0.5 * (cg[tuple(lo)] + cg[tuple(hi)])
        div = sum(grad_face[b][..., b] for b in range(d))
        sigma = np.empty(grad_face[a].shape)
        for j in range(d):
            sigma[..., j] = eta * (grad_face[a][..., j] + grad_face[j][..., a])
        sigma[..., a] += (zeta - 2.0 * eta / 3.0) * div
        v_face = 0.5 * (vcore[tuple(lo)] + vcore[tuple(hi)])
        work = np.sum(v_face * sigma, axis=-1)
        flux = np.concatenate([np.zeros_like(work)[..., None], sigma, work[..., None]], axis=-1)
        out += np.diff(flux, axis=a) / dx[a]
    return out


def cns_rhs(q: np.ndarray, grid: Grid, params: CnsParams, gamma: float = GAMMA) -> np.ndarray:
    w = to_primitive(q, gamma)
    check_positive(w)
    rhs = np.zeros_like(q)
    for a in range(grid.dim):
        wg = _pad(w, a, 2, params.bc)
        wl, wr = muscl_reconstruct(wg, a)
        flux = hllc_flux(wl, wr, gamma, axis=a)
        rhs -= np.diff(flux, axis=a) / grid.dx[a]
    if params.eta or params.zeta:
        rhs += viscous_flux(w, grid, params.eta, params.zeta, params.bc)
    return rhs


def cns_dt(q: np.ndarray, grid: Grid, params: CnsParams, gamma: float = GAMMA) -> float:
    w = to_primitive(q, gamma)
    check_positive(w)
    c = np.sqrt(gamma * w[..., -1] / w[..., 0])
    rate = sum((np.abs(w[..., 1 + a]) + c) * (grid.dx_min / grid.dx[a]) for a in range(grid.dim))
    nu = max(4.0 * params.eta / 3.0 + params.zeta, params.eta) / float(w[..., 0].min())
    return cfl_timestep(grid, float(rate.max()), nu * grid.dim, cfl_adv=params.cfl, cfl_diff=DEFAULT_CFL_DIFF)


def cns_step(q: np.ndarray, dt: float, grid: Grid, params: CnsParams, gamma: float = GAMMA) -> np.ndarray:
    out = ssp_rk2(q, dt, lambda s: cns_rhs(s, grid, params, gamma))
    check_positive(to_primitive(out, gamma))
    return out


def cns_channel_names(dim: int) -> tuple[str, ...]:
    return ("density",) + ("Vx", "Vy", "Vz")[:dim] + ("pressure",)


def solve_cns(state0: ConservedState, params: CnsParams, time: TimeAxis) -> Trajectory:
    """Evolve a compressible state; stored frames hold primitives ``[rho, v..., p]``."""
    grid, gamma = state0.grid, state0.gamma
    frames = march(np.array(state0.values), lambda q, dt: cns_step(q, dt, grid, params, gamma),
                   lambda q: cns_dt(q, grid, params, gamma), time,
                   store=lambda q: to_primitive(q, gamma))
    return Trajectory(time, grid, frames, cns_channel_names(grid.dim))


# -- shallow water -------------------------------------------------------------------

def swe_flux(w: np.ndarray, axis: int, g: float) -> np.ndarray:
    """Physical flux of ``[h, hu, hv]`` along ``axis`` from primitives ``[h, u, v]``."""
    h = w[..., 0]
    un = w[..., 1 + axis]
    f = np.empty_like(w)
    f[..., 0] = h * un
    f[..., 1] = h * w[..., 1] * un
    f[..., 2] = h * w[..., 2] * un
    f[..., 1 + axis] += 0.5 * g * h * h
    return f


def swe_flux_hll(wl: np.ndarray, wr: np.ndarray, g: float = 1.0, axis: int = 0) -> np.ndarray:
    """HLL flux between primitive states ``[h, u, v]`` (Davis wave speeds)."""
    wl = np.asarray(wl, dtype=float)
    wr = np.asarray(wr, dtype=float)
    if np.any(wl[..., 0] <= 0) or np.any(wr[..., 0] <= 0):
        raise PositivityError("non-positive water depth at a face")
    cl = np.sqrt(g * wl[..., 0])
    cr = np.sqrt(g * wr[..., 0])
    ul, ur = wl[..., 1 + axis], wr[..., 1 + axis]
    sl = np.minimum(ul - cl, ur - cr)[..., None]
    sr = np.maximum(ul + cl, ur + cr)[..., None]
    fl, fr = swe_flux(wl, axis, g), swe_flux(wr, axis, g)
    ql = np.concatenate([wl[..., :1], wl[..., :1] * wl[..., 1:]], axis=-1)
    qr = np.concatenate([wr[..., :1], wr[..., :1] * wr[..., 1:]], axis=-1)
    # sr == sl only where both sides are at rest in the dry limit; that
    # branch is never selected, so ignore the 0/0 there
    with np.errstate(invalid="ignore", divide="ignore"):
        mid = (sr * fl - sl * fr + sl * sr * (qr - ql)) / (sr - sl)
    return np.where(sl >= 0, fl, np.where(sr <= 0, fr, mid))


def _swe_primitive(q: np.ndarray) -> np.ndarray:
    h = q[..., :1]
    return np.concatenate([h, q[..., 1:] / h], axis=-1)


def _reflect_pad(w: np.ndarray, axis: int, width: int) -> np.ndarray:
    pad = [(0, 0)] * w.ndim
    pad[axis] = (width, width)
    out = np.pad(w, pad, mode="symmetric")
    n = w.shape[axis]
    for side in (slice(0, width), slice(width + n, None)):
        sel = [slice(None)] * w.ndim
        sel[axis] = side
        sel[-1] = 1 + axis
        out[tuple(sel)] *= -1.0
    return out


def swe_rhs(q: np.ndarray, grid: Grid, g: float, bathymetry: np.ndarray | None = None) -> np.ndarray:
    w = _swe_primitive(q)
    if np.any(w[..., 0] <= 0) or not np.all(np.isfinite(w)):
        raise PositivityError("non-positive water depth")
    rhs = np.zeros_like(q)
    for a in range(2):
        wg = _reflect_pad(w, a, 2)
        wl, wr = muscl_reconstruct(wg, a)
        flux = swe_flux_hll(wl, wr, g, axis=a)
        rhs -= np.diff(flux, axis=a) / grid.dx[a]
    if bathymetry is not None:
        for a in range(2):
            db = _central(_pad(bathymetry, a, 1, "outgoing"), a, grid.dx[a])
            rhs[..., 1 + a] -= g * w[..., 0] * db
    return rhs


def swe_dt(q: np.ndarray, grid: Grid, g: float, cfl: float = DEFAULT_CFL_ADV) -> float:
    w = _swe_primitive(q)
    c = np.sqrt(g * np.maximum(w[..., 0], 0.0))
    rate = sum((np.abs(w[..., 1 + a]) + c) * (grid.dx_min / grid.dx[a]) for a in range(2))
    return cfl_timestep(grid, float(rate.max()), cfl_adv=cfl)


def solve_swe(state0: SweState, time: TimeAxis, cfl: float = DEFAULT_CFL_ADV, store_all: bool = False) -> Trajectory:
    """Shallow water with reflective walls; stores ``h`` only unless ``store_all``."""
    grid, g, b = state0.grid, state0.g, state0.bathymetry

    def step(q, dt):
        out = ssp_rk2(q, dt, lambda s: swe_rhs(s, grid, g, b))
        if np.any(out[..., 0] <= 0) or not np.all(np.isfinite(out)):
            raise PositivityError("water depth became non-positive")
        return out

    store = (lambda q: q.copy()) if store_all else (lambda q: q[..., :1].copy())
    frames = march(np.array(state0.values), step, lambda q: swe_dt(q, grid, g, cfl), time, store=store)
    names = ("h", "hu", "hv") if store_all else ("h",)
    return Trajectory(time, grid, frames, names)
