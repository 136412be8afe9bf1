"""PDE registry, run configuration and sharded dataset generation.

Sample ``i`` always draws from ``SeededRng(seed, i)``, so the produced file
depends only on the resolved configuration, never on the worker count.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

from . import initcond as ic
from .dataio import DatasetFile, DatasetWriter, FileName, PRECISIONS
from .grid import Field, Grid, NumericalFailure, SeededRng, TimeAxis
from .solvers import hyperbolic as hyp
from .solvers import oned, parabolic

log = logging.getLogger(__name__)

OUT_ENV = "PDESUITE_OUT"
NT_CONVENTION = "Nt counts stored snapshots; frame 0 is the initial condition"
MAX_REJECT_FRACTION = 0.01


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class PdeSpec:
    name: str
    dim: int
    domain: tuple[float, float]
    ns: int
    nt: int | None               # None: steady problem, no time axis
    t_end: float | None
    params: dict                 # name -> default (type taken from the default)
    scheme: str
    packing: str = "channel"     # "channel": one array (..., v); "variables": one array per variable

    @property
    def time_dependent(self) -> bool:
        return self.nt is not None


_CNS_PARAMS = {"eta": 1e-8, "zeta": 1e-8, "mach": 1.0, "ic": "random", "bc": "periodic"}

REGISTRY: dict[str, PdeSpec] = {s.name: s for s in [
    PdeSpec("advection", 1, (0.0, 1.0), 1024, 201, 2.0, {"beta": 0.4},
            "finite volume, 2nd-order upwind flux, SSP-RK2"),
    PdeSpec("burgers", 1, (0.0, 1.0), 1024, 201, 2.0, {"nu": 0.01},
            "finite volume, MUSCL-minmod + Godunov flux, central diffusion, SSP-RK2"),
    PdeSpec("diffreact1d", 1, (0.0, 1.0), 1024, 201, 1.0, {"nu": 0.5, "rho": 1.0},
            "Strang splitting: exact logistic (PES) + SSP-RK2 diffusion"),
    PdeSpec("diffsorp", 1, (0.0, 1.0), 1024, 101, 500.0, {"outlet_sign": -1.0},
            "finite volume, Freundlich retardation, RK4"),
    PdeSpec("diffreact2d", 2, (-1.0, 1.0), 128, 101, 5.0, {"du": 1e-3, "dv": 5e-3, "k": 5e-3},
            "finite volume FitzHugh-Nagumo, Neumann walls, RK4"),
    PdeSpec("darcy", 2, (0.0, 1.0), 128, None, None, {"beta": 1.0},
            "pseudo-time march to steady state, harmonic face coefficients"),
    PdeSpec("cns1d", 1, (0.0, 1.0), 1024, 101, 1.0, dict(_CNS_PARAMS),
            "HLLC + MUSCL-minmod on primitives, SSP-RK2", "variables"),
    PdeSpec("cns2d", 2, (0.0, 1.0), 512, 21, 1.0, dict(_CNS_PARAMS),
            "HLLC + MUSCL-minmod on primitives, SSP-RK2", "variables"),
    PdeSpec("cns3d", 3, (0.0, 1.0), 128, 21, 1.0, dict(_CNS_PARAMS),
            "HLLC + MUSCL-minmod on primitives, SSP-RK2", "variables"),
    PdeSpec("swe", 2, (-2.5, 2.5), 128, 101, 1.0, {},
            "finite volume, HLL + MUSCL-minmod, reflective walls, SSP-RK2"),
]}


def _coerce(name: str, value, default):
    if isinstance(default, str):
        return str(value)
    try:
        v = float(value)
    except (TypeError, ValueError):
        raise ConfigError(f"parameter {name}={value!r} is not a number") from None
    if not math.isfinite(v):
        raise ConfigError(f"parameter {name} must be finite")
    return v


@dataclass(frozen=True)
class GenerateConfig:
    pde: str
    params: dict = field(default_factory=dict)
    ns: int | None = None
    nt: int | None = None
    samples: int = 1
    seed: int = 0
    t_end: float | None = None
    precision: str = "f32"
    # execution settings; not part of the data identity
    out: str | None = None
    workers: int = 1

    @property
    def spec(self) -> PdeSpec:
        try:
            return REGISTRY[self.pde]
        except KeyError:
            raise ConfigError(f"unknown pde {self.pde!r}; choose from {sorted(REGISTRY)}") from None

    def resolved(self) -> "GenerateConfig":
        """Fill defaults, coerce types and validate; raises ConfigError."""
        spec = self.spec
        unknown = set(self.params) - set(spec.params)
        if unknown:
            raise ConfigError(f"unknown parameters for {spec.name}: {sorted(unknown)}")
        params = {k: _coerce(k, self.params.get(k, d), d) for k, d in spec.params.items()}
        cfg = replace(self, params=params,
                      ns=int(self.ns if self.ns is not None else spec.ns),
                      nt=(int(self.nt if self.nt is not None else spec.nt) if spec.time_dependent else None),
                      t_end=(float(self.t_end if self.t_end is not None else spec.t_end)
                             if spec.time_dependent else None),
                      samples=int(self.samples), seed=int(self.seed), workers=int(self.workers))
        if cfg.ns < 4 or cfg.samples < 1 or cfg.workers < 1 or cfg.seed < 0:
            raise ConfigError("ns >= 4, samples >= 1, workers >= 1 and seed >= 0 are required")
        if spec.time_dependent and (cfg.nt < 2 or not cfg.t_end > 0):
            raise ConfigError("nt >= 2 and t_end > 0 are required")
        if cfg.precision not in PRECISIONS:
            raise ConfigError(f"precision must be one of {sorted(PRECISIONS)}")
        try:
            _solver_params(cfg)
        except ValueError as e:
            raise ConfigError(str(e)) from None
        return cfg

    def grid(self) -> Grid:
        s = self.spec
        return Grid.uniform(self.ns, s.domain[0], s.domain[1], s.dim)

    def time_axis(self) -> TimeAxis | None:
        return TimeAxis(0.0, self.t_end, self.nt) if self.spec.time_dependent else None

    def data_config(self) -> dict:
        """Everything that determines the file contents (echoed into metadata)."""
        return {"pde": self.pde, "params": dict(self.params), "ns": self.ns, "nt": self.nt,
                "samples": self.samples, "seed": self.seed, "t_end": self.t_end,
                "precision": self.precision}

    def file_name(self) -> FileName:
        conf = {"Ns": self.ns}
        if self.nt is not None:
            conf["Nt"] = self.nt
            conf["T"] = self.t_end
        conf.update(N=self.samples, seed=self.seed, prec=self.precision)
        return FileName.from_values(self.pde, self.params, conf)

    @classmethod
    def from_meta(cls, meta: dict) -> "GenerateConfig":
        c = meta["config"]
        return cls(c["pde"], dict(c["params"]), c["ns"], c["nt"], c["samples"], c["seed"],
                   c["t_end"], c["precision"])


def _solver_params(cfg: GenerateConfig):
    p = cfg.params
    if cfg.pde == "advection":
        return oned.AdvectionParams(p["beta"])
    if cfg.pde == "burgers":
        return oned.BurgersParams(p["nu"])
    if cfg.pde == "diffreact1d":
        return oned.ReactDiffParams(p["nu"], p["rho"])
    if cfg.pde == "diffsorp":
        return oned.SorptionParams(outlet_sign=p["outlet_sign"])
    if cfg.pde == "diffreact2d":
        return parabolic.FhnParams(p["du"], p["dv"], p["k"])
    if cfg.pde == "darcy":
        if not p["beta"] >= 0:
            raise ValueError("Darcy forcing beta must be non-negative")
        return parabolic.DarcyParams(beta=p["beta"])
    if cfg.pde.startswith("cns"):
        if p["ic"] not in ("random", "shock", "turbulence"):
            raise ValueError(f"unknown CNS initial condition {p['ic']!r}")
        if p["ic"] == "shock" and cfg.spec.dim != 1:
            raise ValueError("shock-tube initial conditions are 1D only")
        if p["ic"] == "turbulence" and cfg.spec.dim == 1:
            raise ValueError("turbulence initial conditions need 2D or 3D")
        if not p["mach"] >= 0:
            raise ValueError("Mach number must be non-negative")
        return hyp.CnsParams(p["eta"], p["zeta"], p["bc"])
    return None


# -- layout --------------------------------------------------------------------

def channel_names(cfg: GenerateConfig) -> tuple[str, ...]:
    if cfg.pde.startswith("cns"):
        return hyp.cns_channel_names(cfg.spec.dim)
    if cfg.pde == "diffreact2d":
        return ("u", "v")
    if cfg.pde == "swe":
        return ("h",)
    if cfg.pde == "darcy":
        return ("a", "u")
    return ("u",)


def array_layout(cfg: GenerateConfig) -> dict[str, tuple[int, ...]]:
    """Per-sample shapes of every stored array."""
    spatial = cfg.grid().shape
    if cfg.pde == "darcy":
        return {"a": spatial, "u": spatial}
    t = (cfg.nt,)
    if cfg.spec.packing == "variables":
        return {name: t + spatial for name in channel_names(cfg)}
    return {"tensor": t + spatial + (len(channel_names(cfg)),)}


def target_arrays(cfg: GenerateConfig) -> list[str]:
    if cfg.pde == "darcy":
        return ["u"]
    return list(array_layout(cfg))


def coordinates(cfg: GenerateConfig) -> dict[str, np.ndarray]:
    g = cfg.grid()
    names = ("x", "y", "z")
    out = {f"{names[a]}-coordinate": g.centers(a) for a in range(g.dim)}
    if cfg.spec.time_dependent:
        out["t-coordinate"] = cfg.time_axis().times()
    return out


def metric_array(ds: DatasetFile) -> np.ndarray:
    """Pack a file's target arrays as (b, t, x..., v) float64 for the metrics."""
    cfg = GenerateConfig.from_meta(ds.meta)
    parts = []
    for name in target_arrays(cfg):
        a = np.asarray(ds.arrays[name], dtype=np.float64)
        if not cfg.spec.time_dependent:
            a = a[:, None]
        if cfg.spec.packing == "variables" or cfg.pde == "darcy":
            a = a[..., None]
        parts.append(a)
    return np.concatenate(parts, axis=-1)


# -- per-sample generation -------------------------------------------------------

def _cns_initial(cfg: GenerateConfig, rng: SeededRng, grid: Grid) -> hyp.ConservedState:
    p = cfg.params
    if p["ic"] == "shock":
        return ic.shock_tube_ic(rng, grid)
    if p["ic"] == "turbulence":
        v = ic.turbulence_velocity(rng, grid, p["mach"]).values
        rho = np.ones(grid.shape)
        pres = np.full(grid.shape, 1.0 / ic.GAMMA)
        return hyp.ConservedState(grid, ic.primitive_to_conserved(rho, v, pres))
    return ic.random_field_cns_ic(rng, grid, mach=p["mach"])


def generate_sample(cfg: GenerateConfig, index: int) -> dict[str, np.ndarray]:
    """Arrays for sample ``index`` (float64, per-sample layout)."""
    rng = SeededRng(cfg.seed, index)
    grid = cfg.grid()
    time = cfg.time_axis()
    sp = _solver_params(cfg)
    if cfg.pde == "advection":
        tr = oned.solve_advection(ic.sinusoidal_superposition(rng, grid), sp, time)
    elif cfg.pde == "burgers":
        tr = oned.solve_burgers(ic.sinusoidal_superposition(rng, grid), sp, time)
    elif cfg.pde == "diffreact1d":
        tr = oned.solve_diffreact1d(ic.normalized_positive_ic(rng, grid), sp, time)
    elif cfg.pde == "diffsorp":
        tr = oned.solve_diffsorp(ic.uniform_random_ic(rng, grid), sp, time)
    elif cfg.pde == "diffreact2d":
        noise = ic.normal_noise_ic(rng, grid, 2).values
        tr = parabolic.solve_diffreact2d(Field(grid, noise[..., 0]), Field(grid, noise[..., 1]), sp, time)
    elif cfg.pde == "darcy":
        res = parabolic.solve_darcy_steady(ic.darcy_coefficient(rng, grid), sp)
        return {"a": res.field.values[..., 0], "u": res.field.values[..., 1]}
    elif cfg.pde.startswith("cns"):
        tr = hyp.solve_cns(_cns_initial(cfg, rng, grid), sp, time)
        return {name: tr.values[..., k] for k, name in enumerate(tr.channel_names)}
    elif cfg.pde == "swe":
        tr = hyp.solve_swe(hyp.SweState.at_rest(ic.radial_dam_break_ic(rng, grid)), time)
    else:  # pragma: no cover - guarded by resolved()
        raise ConfigError(cfg.pde)
    return {"tensor": tr.values}


def _run_one(args):
    cfg, index = args
    try:
        arrays = generate_sample(cfg, index)
        for name, a in arrays.items():
            if not np.all(np.isfinite(a)):
                raise NumericalFailure(f"non-finite values in {name}")
        return index, arrays, None
    except NumericalFailure as e:
        return index, None, f"{type(e).__name__}: {e}"


@dataclass
class GenerateResult:
    path: Path
    rejected: dict[int, str]
    n_written: int


def default_out_dir() -> Path:
    return Path(os.environ.get(OUT_ENV, "."))


def file_metadata(cfg: GenerateConfig, rejected: dict[int, str]) -> dict:
    return {
        "config": cfg.data_config(),
        "pde": cfg.pde,
        "dim": cfg.spec.dim,
        "time_dependent": cfg.spec.time_dependent,
        "layout": "(b, t, x1..xd, v)" if cfg.spec.packing == "channel" and cfg.pde != "darcy"
                  else ("(b, x1..xd) per array" if cfg.pde == "darcy" else "(b, t, x1..xd) per variable"),
        "channels": list(channel_names(cfg)),
        "arrays": list(array_layout(cfg)),
        "domain": list(cfg.spec.domain),
        "nt_convention": NT_CONVENTION,
        "scheme": cfg.spec.scheme,
        "rng": "numpy Philox, SeedSequence([seed, stream_id]), stream_id = sample index",
        "rejected_stream_ids": sorted(rejected),
    }


def generate(cfg: GenerateConfig, out_dir=None) -> GenerateResult:
    """Generate ``cfg.samples`` samples and write one dataset file.

    Rejected samples (positivity loss, non-finite values) are skipped and
    reported by stream id; more than 1% rejections raises NumericalFailure
    and no file is kept.
    """
    cfg = cfg.resolved()
    out = Path(out_dir or cfg.out or default_out_dir())
    path = out / cfg.file_name().render()
    layout = array_layout(cfg)
    tasks = [(cfg, i) for i in range(cfg.samples)]
    rejected: dict[int, str] = {}
    results = []
    if cfg.workers == 1:
        results = map(_run_one, tasks)
        pool = None
    else:
        pool = ProcessPoolExecutor(max_workers=cfg.workers)
        results = pool.map(_run_one, tasks)
    try:
        # metadata (incl. rejected ids) is only known at the end; generate
        # first into the writer with a placeholder, then patch the attribute
        with DatasetWriter(path, cfg.pde, layout, cfg.samples, file_metadata(cfg, {}),
                           cfg.precision, coordinates(cfg)) as w:
            for index, arrays, err in results:
                if err is not None:
                    log.warning("sample %d (stream_id=%d) rejected: %s", index, index, err)
                    rejected[index] = err
                    w.skip(index)
                    if len(rejected) > MAX_REJECT_FRACTION * cfg.samples:
                        raise NumericalFailure(
                            f"{len(rejected)} of {cfg.samples} samples rejected (stream ids {sorted(rejected)}); "
                            f"first: {next(iter(rejected.values()))}")
                else:
                    w.write_sample(index, arrays)
            w.set_meta(file_metadata(cfg, rejected))
    finally:
        if pool is not None:
            pool.shutdown(cancel_futures=True)
    return GenerateResult(path, rejected, cfg.samples - len(rejected))


# -- forward maps for the inverse problem --------------------------------------------

def forward_map(cfg: GenerateConfig, horizon: int) -> Callable[[np.ndarray], np.ndarray]:
    """Batched IC -> snapshot ``horizon`` map for the 1D scalar problems."""
    cfg = cfg.resolved()
    if not cfg.spec.time_dependent or not 1 <= horizon < cfg.nt:
        raise ConfigError(f"horizon {horizon} outside the stored trajectory")
    dx = cfg.grid().dx[0]
    time = cfg.time_axis().truncated(horizon)
    sp = _solver_params(cfg)
    if cfg.pde == "advection":
        return lambda u: oned.advection_march(u, sp.beta, dx, time)[-1]
    if cfg.pde == "burgers":
        return lambda u: oned.burgers_march(u, sp, dx, time)[-1]
    if cfg.pde == "diffreact1d":
        return lambda u: oned.diffreact_march(u, sp, dx, time)[-1]
    if cfg.pde == "diffsorp":
        return lambda u: oned.diffsorp_march(u, sp, dx, time)[-1]
    raise ConfigError(f"inverse estimation supports 1D scalar problems, not {cfg.pde!r}")
