"""Discretization primitives shared by every solver.

Grids are rectilinear and cell-centered.  Trajectories keep all stored
snapshots in one array shaped ``(n_snapshots, x1..xd, V)`` so they can be
written to disk without repacking.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

DEFAULT_CFL_ADV = 0.4
DEFAULT_CFL_DIFF = 0.25


class NumericalFailure(RuntimeError):
    """A sample produced non-finite or non-physical values and must be rejected."""


@dataclass(frozen=True)
class Grid:
    extent_lo: tuple[float, ...]
    extent_hi: tuple[float, ...]
    n_cells: tuple[int, ...]

    def __post_init__(self):
        lo = tuple(float(v) for v in np.atleast_1d(self.extent_lo))
        hi = tuple(float(v) for v in np.atleast_1d(self.extent_hi))
        n = tuple(int(v) for v in np.atleast_1d(self.n_cells))
        if not (len(lo) == len(hi) == len(n)):
            raise ValueError("extent_lo, extent_hi and n_cells must have the same length")
        if len(n) not in (1, 2, 3):
            raise ValueError(f"grid dimension must be 1, 2 or 3, got {len(n)}")
        if any(k < 4 for k in n):
            raise ValueError(f"every axis needs at least 4 cells, got {n}")
        if any(h <= l for l, h in zip(lo, hi)):
            raise ValueError("extent_hi must exceed extent_lo on every axis")
        object.__setattr__(self, "extent_lo", lo)
        object.__setattr__(self, "extent_hi", hi)
        object.__setattr__(self, "n_cells", n)

    @classmethod
    def uniform(cls, n: int | Sequence[int], lo: float = 0.0, hi: float = 1.0, dim: int | None = None):
        """Box ``[lo, hi]^d`` with the same extent on every axis."""
        ns = (n,) * (dim or 1) if np.isscalar(n) else tuple(n)
        return cls((lo,) * len(ns), (hi,) * len(ns), ns)

    @property
    def dim(self) -> int:
        return len(self.n_cells)

    @property
    def shape(self) -> tuple[int, ...]:
        return self.n_cells

    @property
    def size(self) -> int:
        return int(np.prod(self.n_cells))

    @property
    def length(self) -> tuple[float, ...]:
        return tuple(h - l for l, h in zip(self.extent_lo, self.extent_hi))

    @property
    def dx(self) -> tuple[float, ...]:
        return tuple(L / n for L, n in zip(self.length, self.n_cells))

    @property
    def dx_min(self) -> float:
        return min(self.dx)

    @property
    def cell_volume(self) -> float:
        return float(np.prod(self.dx))

    def centers(self, axis: int) -> np.ndarray:
        lo, dx, n = self.extent_lo[axis], self.dx[axis], self.n_cells[axis]
        return lo + (np.arange(n) + 0.5) * dx

    def faces(self, axis: int) -> np.ndarray:
        lo, dx, n = self.extent_lo[axis], self.dx[axis], self.n_cells[axis]
        return lo + np.arange(n + 1) * dx

    def mesh(self) -> list[np.ndarray]:
        """Cell-center coordinates broadcast to the full grid shape (``ij`` indexing)."""
        return np.meshgrid(*(self.centers(a) for a in range(self.dim)), indexing="ij")

    def to_dict(self) -> dict:
        return {"extent_lo": list(self.extent_lo), "extent_hi": list(self.extent_hi),
                "n_cells": list(self.n_cells)}


@dataclass(frozen=True)
class TimeAxis:
    t_start: float
    t_end: float
    n_snapshots: int

    def __post_init__(self):
        if not self.t_end > self.t_start:
            raise ValueError("t_end must be greater than t_start")
        if self.n_snapshots < 2:
            raise ValueError("a time axis needs at least two snapshots")

    @property
    def interval(self) -> float:
        return (self.t_end - self.t_start) / (self.n_snapshots - 1)

    def times(self) -> np.ndarray:
        k = np.arange(self.n_snapshots)
        return self.t_start + k * self.interval

    def snapshot_time(self, k: int) -> float:
        if k == self.n_snapshots - 1:
            return float(self.t_end)
        return self.t_start + k * (self.t_end - self.t_start) / (self.n_snapshots - 1)

    def truncated(self, k: int) -> TimeAxis:
        """Axis covering snapshots ``0..k`` only (same spacing)."""
        return TimeAxis(self.t_start, self.snapshot_time(k), k + 1)

    def to_dict(self) -> dict:
        return {"t_start": self.t_start, "t_end": self.t_end, "n_snapshots": self.n_snapshots}


def check_finite(values: np.ndarray, what: str = "field") -> np.ndarray:
    if not np.all(np.isfinite(values)):
        raise NumericalFailure(f"{what} contains non-finite values")
    return values


@dataclass(frozen=True)
class Field:
    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape == self.grid.shape:
            values = values[..., None]
        if values.shape[:-1] != self.grid.shape:
            raise ValueError(f"values shape {values.shape} does not match grid {self.grid.shape} + (V,)")
        check_finite(values)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def channels(self) -> int:
        return self.values.shape[-1]

    def channel(self, v: int) -> np.ndarray:
        return self.values[..., v]


@dataclass(frozen=True)
class Trajectory:
    time_axis: TimeAxis
    grid: Grid
    values: np.ndarray  # (n_snapshots, x1..xd, V)
    channel_names: tuple[str, ...] = ()

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        expected = (self.time_axis.n_snapshots,) + self.grid.shape
        if values.shape[:-1] != expected:
            raise ValueError(f"trajectory shape {values.shape} does not match {expected} + (V,)")
        check_finite(values, "trajectory")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def channels(self) -> int:
        return self.values.shape[-1]

    @property
    def frames(self) -> list[Field]:
        return [self.frame(k) for k in range(len(self))]

    def frame(self, k: int) -> Field:
        return Field(self.grid, self.values[k])

    def __len__(self) -> int:
        return self.values.shape[0]


class SeededRng:
    """Counter-based random source keyed by ``(seed, stream_id)``.

    Each sample index gets its own Philox key, so draws do not depend on the
    order in which samples are generated.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        self.seed = int(seed)
        self.stream_id = int(stream_id)
        ss = np.random.SeedSequence([self.seed & (2**64 - 1), self.stream_id & (2**64 - 1)])
        self.gen = np.random.Generator(np.random.Philox(ss))

    def __repr__(self):
        return f"SeededRng(seed={self.seed}, stream_id={self.stream_id})"

    def uniform(self, low=0.0, high=1.0, size=None):
        return self.gen.uniform(low, high, size)

    def integers(self, low, high=None, size=None):
        """Integers in the closed range ``[low, high]``."""
        return self.gen.integers(low, high, size, endpoint=True)

    def normal(self, loc=0.0, scale=1.0, size=None):
        return self.gen.normal(loc, scale, size)

    def random(self, size=None):
        return self.gen.random(size)


def cfl_timestep(field: Field | Grid | float, max_signal_speed: float, diffusivity: float = 0.0,
                 cfl_adv: float = DEFAULT_CFL_ADV, cfl_diff: float = DEFAULT_CFL_DIFF) -> float:
    """Largest stable explicit step for the given advective and diffusive rates.

    ``field`` may be a Field, a Grid, or the smallest cell width directly.
    Terms whose rate is zero are ignored.
    """
    if isinstance(field, Field):
        dx = field.grid.dx_min
    elif isinstance(field, Grid):
        dx = field.dx_min
    else:
        dx = float(field)
    if max_signal_speed < 0 or diffusivity < 0:
        raise ValueError("signal speed and diffusivity must be non-negative")
    if not (0 < cfl_adv <= 1 and 0 < cfl_diff <= 1):
        raise ValueError("CFL factors must lie in (0, 1]")
    if max_signal_speed == 0 and diffusivity == 0:
        raise ValueError("static system, dt undefined")
    dt = math.inf
    if max_signal_speed > 0:
        dt = min(dt, cfl_adv * dx / max_signal_speed)
    if diffusivity > 0:
        dt = min(dt, cfl_diff * dx * dx / diffusivity)
    return dt


@dataclass
class MarchStats:
    n_steps: int = 0
    dt_min: float = math.inf
    dt_max: float = 0.0
    times: list[float] = field(default_factory=list)


def march(state: np.ndarray, step: Callable[[np.ndarray, float], np.ndarray],
          stable_dt: Callable[[np.ndarray], float], time_axis: TimeAxis,
          store: Callable[[np.ndarray], np.ndarray] | None = None,
          max_steps: int = 50_000_000, stats: MarchStats | None = None) -> np.ndarray:
    """Advance ``state`` through every snapshot of ``time_axis``.

    Substeps use ``stable_dt(state)``; the last substep before each snapshot
    is shortened so the snapshot time is landed on exactly.  Elapsed time is
    accumulated with Kahan summation.  Returns the stacked stored snapshots,
    ``store(state)`` applied to each (identity by default).
    """
    store = store or (lambda s: s.copy())
    out = [store(state)]
    t, comp = time_axis.t_start, 0.0
    steps = 0
    for k in range(1, time_axis.n_snapshots):
        target = time_axis.snapshot_time(k)
        while True:
            remaining = target - t
            if remaining <= 1e-12 * max(1.0, abs(target)):
                break
            dt = stable_dt(state)
            if not dt > 0:
                raise NumericalFailure(f"invalid time step {dt!r} at t={t}")
            # avoid a sliver step right before the snapshot
            if dt >= remaining or remaining - dt < 1e-6 * dt:
                dt = remaining
            elif remaining < 2 * dt:
                dt = 0.5 * remaining
            state = step(state, dt)
            steps += 1
            if steps > max_steps:
                raise NumericalFailure("step budget exhausted before reaching t_end")
            y = dt - comp
            s = t + y
            comp = (s - t) - y
            t = s
            if stats is not None:
                stats.dt_min = min(stats.dt_min, dt)
                stats.dt_max = max(stats.dt_max, dt)
        t, comp = target, 0.0
        if stats is not None:
            stats.times.append(t)
        out.append(store(state))
    if stats is not None:
        stats.n_steps = steps
    return np.stack(out)
