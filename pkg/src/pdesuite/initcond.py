"""Stochastic initial conditions and coefficient fields.

Every generator is a pure function of the random stream it receives and its
configuration, so a sample can be regenerated from ``(seed, stream_id)``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .grid import Field, Grid, SeededRng

GAMMA = 5.0 / 3.0


@dataclass(frozen=True)
class SinusoidSpec:
    n_modes: int = 2
    n_max: int = 8
    domain_length: float = 1.0
    abs_prob: float = 0.1
    window_prob: float = 0.1
    window_fraction: tuple[float, float] = (1.0 / 3.0, 2.0 / 3.0)

    def __post_init__(self):
        if self.n_modes < 1 or self.n_max < 1:
            raise ValueError("n_modes and n_max must be >= 1")
        for p in (self.abs_prob, self.window_prob):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")


@dataclass(frozen=True)
class GrfSpec:
    spectral_exponent: float = -3.0
    scale: float = 1.0
    dim: int = 2

    def __post_init__(self):
        if self.scale < 0:
            raise ValueError("scale must be non-negative")


@dataclass(frozen=True)
class ShockTubeSpec:
    """Sampling ranges for a random Riemann problem.

    Velocities are given in units of the local sound speed.  Setting a range
    to ``(a, a)`` forces that value.
    """

    rho_left: tuple[float, float] = (0.1, 1.0)
    rho_right: tuple[float, float] = (0.1, 1.0)
    p_left: tuple[float, float] = (0.1, 1.0)
    p_right: tuple[float, float] = (0.1, 1.0)
    v_left: tuple[float, float] = (-1.0, 1.0)
    v_right: tuple[float, float] = (-1.0, 1.0)
    jump: tuple[float, float] = (0.2, 0.8)

    @classmethod
    def sod(cls, position: float = 0.5):
        return cls((1.0, 1.0), (0.125, 0.125), (1.0, 1.0), (0.1, 0.1),
                   (0.0, 0.0), (0.0, 0.0), (position, position))


def _require_dim(grid: Grid, dims, what: str):
    if grid.dim not in dims:
        raise ValueError(f"{what} needs a grid of dimension {dims}, got {grid.dim}")


def _draw(rng: SeededRng, bounds: tuple[float, float]) -> float:
    lo, hi = bounds
    return float(lo) if lo == hi else float(rng.uniform(lo, hi))


def _sinusoid_modes(rng: SeededRng, grid: Grid, spec: SinusoidSpec) -> np.ndarray:
    """Sum of random plane waves ``A sin(k.x + phi)`` over the grid."""
    coords = grid.mesh()
    u = np.zeros(grid.shape)
    for _ in range(spec.n_modes):
        if grid.dim == 1:
            n = rng.integers(1, spec.n_max, size=1)
        else:
            n = np.zeros(grid.dim, dtype=int)
            while not n.any():
                n = rng.integers(-spec.n_max, spec.n_max, size=grid.dim)
        amp = rng.uniform(0.0, 1.0)
        phase = rng.uniform(0.0, 2.0 * np.pi)
        arg = sum(2.0 * np.pi * n[a] / grid.length[a] * coords[a] for a in range(grid.dim))
        u += amp * np.sin(arg + phase)
    return u


def _post_ops(rng: SeededRng, grid: Grid, u: np.ndarray, spec: SinusoidSpec) -> np.ndarray:
    # two independent Bernoulli draws, always consumed so streams stay aligned
    do_abs = rng.random() < spec.abs_prob
    sign = 1.0 if rng.random() < 0.5 else -1.0
    do_window = rng.random() < spec.window_prob
    frac = rng.uniform(*spec.window_fraction)
    if do_abs:
        u = sign * np.abs(u)
    if do_window:
        mask = np.ones(grid.shape, dtype=bool)
        for a, x in enumerate(grid.mesh()):
            mid = 0.5 * (grid.extent_lo[a] + grid.extent_hi[a])
            mask &= np.abs(x - mid) <= 0.5 * frac * grid.length[a]
        u = np.where(mask, u, 0.0)
    return u


def sinusoidal_superposition(rng: SeededRng, grid: Grid, spec: SinusoidSpec = SinusoidSpec()) -> Field:
    _require_dim(grid, (1,), "sinusoidal_superposition")
    u = _sinusoid_modes(rng, grid, spec)
    return Field(grid, _post_ops(rng, grid, u, spec))


def sinusoidal_superposition_nd(rng: SeededRng, grid: Grid, spec: SinusoidSpec = SinusoidSpec()) -> Field:
    """Multi-dimensional plane-wave superposition (no abs/window post-ops)."""
    return Field(grid, _sinusoid_modes(rng, grid, spec))


def normalized_positive_ic(rng: SeededRng, grid: Grid, spec: SinusoidSpec = SinusoidSpec(),
                           max_tries: int = 100) -> Field:
    _require_dim(grid, (1,), "normalized_positive_ic")
    for _ in range(max_tries):
        u = np.abs(sinusoidal_superposition(rng, grid, spec).values)
        peak = u.max()
        if peak > 0:
            return Field(grid, u / peak)
    raise RuntimeError("could not draw a non-zero initial condition")


def _wavenumbers(grid: Grid) -> list[np.ndarray]:
    """Integer wave indices per axis, broadcast to the grid (``ij``)."""
    ks = [np.fft.fftfreq(n, 1.0 / n) for n in grid.shape]
    return np.meshgrid(*ks, indexing="ij")


def gaussian_random_field(rng: SeededRng, grid: Grid, spec: GrfSpec = GrfSpec()) -> Field:
    """Isotropic GRF with power spectral density ``|k|^tau`` below the Nyquist shell."""
    noise = rng.normal(size=grid.shape)
    if spec.scale == 0:
        return Field(grid, np.zeros(grid.shape))
    # FFT of real white noise has the Hermitian symmetry for free
    w_hat = np.fft.fftn(noise)
    kmag = np.sqrt(sum(k.astype(float) ** 2 for k in _wavenumbers(grid)))
    k_nyq = min(grid.shape) // 2
    amp = np.zeros(grid.shape)
    live = (kmag > 0) & (kmag <= k_nyq)
    amp[live] = kmag[live] ** (0.5 * spec.spectral_exponent)
    f = np.real(np.fft.ifftn(w_hat * amp))
    f -= f.mean()
    std = f.std()
    if std == 0:
        return Field(grid, np.zeros(grid.shape))
    return Field(grid, f * (spec.scale / std))


def helmholtz_project(v: np.ndarray, grid: Grid) -> np.ndarray:
    """Remove the compressive (curl-free) part of a periodic vector field.

    ``v`` has shape ``grid.shape + (d,)``.  Wave vectors use physical
    scaling so non-square boxes are handled.  Nyquist planes of even axes
    are dropped: they have no signed partner, so their projection would not
    survive taking the real part.
    """
    d = grid.dim
    ks = _wavenumbers(grid)
    k = [kk / L for kk, L in zip(ks, grid.length)]
    k2 = sum(kk**2 for kk in k)
    k2[(0,) * d] = 1.0
    keep = np.ones(grid.shape, dtype=bool)
    for kk, n in zip(ks, grid.shape):
        if n % 2 == 0:
            keep &= kk != -(n // 2)
    v_hat = [np.fft.fftn(v[..., a]) for a in range(d)]
    div = sum(k[a] * v_hat[a] for a in range(d))
    out = np.empty_like(v)
    for a in range(d):
        out[..., a] = np.real(np.fft.ifftn((v_hat[a] - k[a] * div / k2) * keep))
    return out


def spectral_divergence_ratio(v: np.ndarray, grid: Grid) -> float:
    """``sum |k.v_hat|^2 / sum |k|^2 |v_hat|^2`` -- zero for solenoidal fields."""
    k = [kk / L for kk, L in zip(_wavenumbers(grid), grid.length)]
    v_hat = [np.fft.fftn(v[..., a]) for a in range(grid.dim)]
    num = np.sum(np.abs(sum(k[a] * v_hat[a] for a in range(grid.dim))) ** 2)
    den = np.sum(sum(k[a] ** 2 for a in range(grid.dim)) * sum(np.abs(vh) ** 2 for vh in v_hat))
    return float(num / den) if den > 0 else 0.0


def turbulence_velocity(rng: SeededRng, grid: Grid, mach: float, sound_speed: float = 1.0,
                        n_waves: int = 4, n_max: int = 4) -> Field:
    _require_dim(grid, (2, 3), "turbulence_velocity")
    d = grid.dim
    vbar = sound_speed * mach
    coords = grid.mesh()
    power = 1 if d == 2 else 2
    for _ in range(100):
        v = np.zeros(grid.shape + (d,))
        for _ in range(n_waves):
            n = np.zeros(d, dtype=int)
            while not n.any():
                n = rng.integers(-n_max, n_max, size=d)
            direction = rng.normal(size=d)
            direction /= np.linalg.norm(direction)
            phase = rng.uniform(0.0, 2.0 * np.pi)
            kvec = 2.0 * np.pi * n / np.asarray(grid.length)
            amp = direction / np.linalg.norm(n) ** power
            arg = sum(kvec[a] * coords[a] for a in range(d))
            v += amp * np.sin(arg + phase)[..., None]
        v = helmholtz_project(v, grid)
        rms = np.sqrt(np.mean(np.sum(v**2, axis=-1)))
        if rms > 1e-8:
            return Field(grid, v * (vbar / rms))
    raise RuntimeError("turbulent velocity draw kept collapsing to zero")


def primitive_to_conserved(rho: np.ndarray, vel: np.ndarray, p: np.ndarray, gamma: float = GAMMA) -> np.ndarray:
    """Stack ``[rho, rho*v_1..d, E]`` from primitives; ``vel`` has a trailing axis of length d."""
    E = p / (gamma - 1.0) + 0.5 * rho * np.sum(vel**2, axis=-1)
    return np.concatenate([rho[..., None], rho[..., None] * vel, E[..., None]], axis=-1)


def shock_tube_ic(rng: SeededRng, grid: Grid, spec: ShockTubeSpec = ShockTubeSpec(),
                  gamma: float = GAMMA, max_tries: int = 100):
    from .solvers.hyperbolic import ConservedState

    _require_dim(grid, (1,), "shock_tube_ic")
    for _ in range(max_tries):
        rl, rr = _draw(rng, spec.rho_left), _draw(rng, spec.rho_right)
        pl, pr = _draw(rng, spec.p_left), _draw(rng, spec.p_right)
        ml, mr = _draw(rng, spec.v_left), _draw(rng, spec.v_right)
        frac = _draw(rng, spec.jump)
        if min(rl, rr, pl, pr) > 0:
            break
    else:
        raise RuntimeError("shock-tube sampler never produced positive states")
    vl = ml * np.sqrt(gamma * pl / rl)
    vr = mr * np.sqrt(gamma * pr / rr)
    n = grid.n_cells[0]
    # snap to an interior face: 1..n-1
    j = int(np.clip(round(frac * n), 1, n - 1))
    left = np.arange(n) < j
    rho = np.where(left, rl, rr)
    vel = np.where(left, vl, vr)[:, None]
    p = np.where(left, pl, pr)
    return ConservedState(grid, primitive_to_conserved(rho, vel, p, gamma), gamma)


def radial_dam_break_ic(rng: SeededRng, grid: Grid, radius: float | None = None) -> Field:
    _require_dim(grid, (2,), "radial_dam_break_ic")
    r = float(rng.uniform(0.3, 0.7)) if radius is None else float(radius)
    x, y = grid.mesh()
    return Field(grid, np.where(np.sqrt(x**2 + y**2) < r, 2.0, 1.0))


def uniform_random_ic(rng: SeededRng, grid: Grid, lo: float = 0.0, hi: float = 0.2) -> Field:
    if not hi > lo:
        raise ValueError("uniform_random_ic needs hi > lo")
    return Field(grid, rng.uniform(lo, hi, size=grid.shape))


def normal_noise_ic(rng: SeededRng, grid: Grid, channels: int = 1) -> Field:
    return Field(grid, rng.normal(size=grid.shape + (channels,)))


def random_field_cns_ic(rng: SeededRng, grid: Grid, mach: float = 1.0, background_density: float = 1.0,
                        background_pressure: float = 1.0 / GAMMA, amplitude: float = 0.3,
                        spec: SinusoidSpec = SinusoidSpec(n_modes=4, n_max=4), gamma: float = GAMMA):
    """Uniform background plus plane-wave perturbations in density, pressure and velocity.

    Density and pressure perturbations are scaled so their peak relative
    deviation equals ``amplitude`` (< 1 keeps both positive).  The velocity
    is rescaled to an RMS speed of ``mach`` times the background sound speed.
    """
    from .solvers.hyperbolic import ConservedState

    if not 0 <= amplitude < 1:
        raise ValueError("amplitude must lie in [0, 1)")
    d = grid.dim

    def scaled(field: np.ndarray, target: float) -> np.ndarray:
        peak = np.max(np.abs(field))
        return field * (target / peak) if peak > 0 else field

    rho = background_density * (1.0 + scaled(_sinusoid_modes(rng, grid, spec), amplitude))
    p = background_pressure * (1.0 + scaled(_sinusoid_modes(rng, grid, spec), amplitude))
    vel = np.stack([_sinusoid_modes(rng, grid, spec) for _ in range(d)], axis=-1)
    cs = np.sqrt(gamma * background_pressure / background_density)
    rms = np.sqrt(np.mean(np.sum(vel**2, axis=-1)))
    vel = vel * (mach * cs / rms) if rms > 0 else np.zeros_like(vel)
    return ConservedState(grid, primitive_to_conserved(rho, vel, p, gamma), gamma)


def darcy_coefficient(rng: SeededRng, grid: Grid, a_low: float = 0.1, a_high: float = 1.0,
                      spectral_exponent: float = -3.0) -> Field:
    """Two-level diffusion coefficient from a thresholded GRF (median split)."""
    g = gaussian_random_field(rng, grid, GrfSpec(spectral_exponent, 1.0, grid.dim)).values[..., 0]
    return Field(grid, np.where(g > np.median(g), a_high, a_low))
