"""Initial-condition estimation by gradient descent through a forward solver.

The unknown IC is parameterized by 64 control values on a uniform lattice
spanning the domain (8x8 in 2D) and recovered by (bi)linear interpolation.
Gradients of the MSE at the observation snapshot are taken by central finite
differences; all 128 probes go through the forward map as one batch.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .grid import Field, Grid, NumericalFailure
from .metrics import MetricReport, inverse_report

N_CONTROLS = 64

# forward(ics) maps a batch (m, x1..xd) of initial conditions to the
# predicted observation snapshots (m, x1..xd); must be deterministic
ForwardMap = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True)
class InverseConfig:
    horizon: int = 15
    learning_rate: float = 0.2
    n_iterations: int = 200
    fd_epsilon: float = 1e-4
    n_test_samples: int = 100
    optimizer: str = "adam"          # or "gd"
    max_failures: int = 12

    def __post_init__(self):
        if not self.learning_rate > 0:
            raise ValueError("learning_rate must be positive")
        if self.horizon < 1:
            raise ValueError("horizon must be a snapshot index >= 1")
        if self.n_iterations < 0 or self.fd_epsilon <= 0:
            raise ValueError("n_iterations >= 0 and fd_epsilon > 0 required")
        if self.optimizer not in ("adam", "gd"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")


def lattice_shape(dim: int, n_controls: int = N_CONTROLS) -> tuple[int, ...]:
    per_axis = round(n_controls ** (1.0 / dim))
    if per_axis**dim != n_controls:
        raise ValueError(f"{n_controls} controls do not form a {dim}-D lattice")
    return (per_axis,) * dim


def _hat_matrix(x: np.ndarray, nodes: np.ndarray) -> np.ndarray:
    """Linear-interpolation weights, shape (len(x), len(nodes))."""
    eye = np.eye(len(nodes))
    return np.stack([np.interp(x, nodes, eye[j]) for j in range(len(nodes))], axis=1)


@dataclass(frozen=True)
class IcParameterization:
    control_values: np.ndarray
    lo: tuple[float, ...]
    hi: tuple[float, ...]

    def __post_init__(self):
        c = np.array(self.control_values, dtype=np.float64)
        if c.size != N_CONTROLS:
            raise ValueError(f"expected {N_CONTROLS} control values, got {c.size}")
        c = c.reshape(lattice_shape(len(self.lo)))
        c.setflags(write=False)
        object.__setattr__(self, "control_values", c)

    @classmethod
    def zeros(cls, grid: Grid):
        return cls(np.zeros(N_CONTROLS), grid.extent_lo, grid.extent_hi)

    @property
    def dim(self) -> int:
        return len(self.lo)

    def nodes(self, axis: int) -> np.ndarray:
        n = self.control_values.shape[axis]
        return np.linspace(self.lo[axis], self.hi[axis], n)

    def with_values(self, values) -> "IcParameterization":
        return IcParameterization(np.asarray(values).ravel(), self.lo, self.hi)


def interpolation_matrix(params: IcParameterization, grid: Grid) -> np.ndarray:
    """Dense (cells, 64) operator; cell ordering matches ``grid.shape`` in C order."""
    if grid.dim != params.dim:
        raise ValueError(f"lattice is {params.dim}-D but grid is {grid.dim}-D")
    mats = [_hat_matrix(grid.centers(a), params.nodes(a)) for a in range(grid.dim)]
    out = mats[0]
    for m in mats[1:]:
        out = np.kron(out, m)
    return out


def reconstruct_ic(params: IcParameterization, grid: Grid) -> Field:
    b = interpolation_matrix(params, grid)
    return Field(grid, (b @ params.control_values.ravel()).reshape(grid.shape))


def sample_at_lattice(values: np.ndarray, params: IcParameterization, grid: Grid) -> np.ndarray:
    """Least-squares control values for a cell-centered field.

    Exact (to round-off) for fields that are already (bi)linear on the
    lattice, so ``reconstruct_ic`` after this is the identity on them.
    """
    b = interpolation_matrix(params, grid)
    c, *_ = np.linalg.lstsq(b, np.asarray(values, dtype=np.float64).reshape(-1), rcond=None)
    return c.reshape(params.control_values.shape)


def _losses(controls: np.ndarray, basis: np.ndarray, grid: Grid, observed: np.ndarray,
            forward: ForwardMap) -> np.ndarray:
    ics = (controls @ basis.T).reshape((len(controls),) + grid.shape)
    pred = np.asarray(forward(ics), dtype=np.float64)
    err = pred.reshape(len(controls), -1) - observed.reshape(1, -1)
    return np.mean(err * err, axis=1)


def inverse_loss(params: IcParameterization, observed, forward: ForwardMap, grid: Grid) -> float:
    """MSE between forward(reconstruct_ic(params)) and the observation."""
    obs = observed.values if isinstance(observed, Field) else np.asarray(observed, dtype=np.float64)
    basis = interpolation_matrix(params, grid)
    return float(_losses(params.control_values.reshape(1, -1), basis, grid, obs, forward)[0])


def fd_gradient(loss_batch: Callable[[np.ndarray], np.ndarray], c: np.ndarray, eps: float):
    """Central differences; returns (loss at c, gradient).

    ``loss_batch`` evaluates a stack of control vectors (m, n) in one call.
    The probe size is ``eps * max(1, |c_i|)``.
    """
    n = c.size
    h = eps * np.maximum(1.0, np.abs(c))
    probes = np.concatenate([c[None], c + np.diag(h), c - np.diag(h)])
    with np.errstate(invalid="ignore", over="ignore"):
        vals = loss_batch(probes)
        grad = (vals[1:n + 1] - vals[n + 1:]) / (2.0 * h)
    return float(vals[0]), grad, bool(np.all(np.isfinite(vals)))


@dataclass
class InverseEstimate:
    params: IcParameterization
    loss_trace: list[float] = field(default_factory=list)
    best_trace: list[float] = field(default_factory=list)
    best_loss: float = math.inf
    rejected_steps: int = 0


def estimate_ic(observed, forward: ForwardMap, grid: Grid, config: InverseConfig = InverseConfig(),
                initial: IcParameterization | None = None) -> InverseEstimate:
    """Minimize the observation MSE over the 64 control values.

    ``optimizer="gd"`` is plain descent with step = learning_rate; the
    default ``"adam"`` uses the same learning rate with Adam moment scaling.
    Returns the best iterate seen and the loss traces.
    """
    obs = observed.values if isinstance(observed, Field) else np.asarray(observed, dtype=np.float64)
    params = initial or IcParameterization.zeros(grid)
    basis = interpolation_matrix(params, grid)
    loss_batch = lambda cs: _losses(cs, basis, grid, obs, forward)

    c = params.control_values.ravel().copy()
    lr, eps = config.learning_rate, config.fd_epsilon
    m = np.zeros_like(c)
    v = np.zeros_like(c)
    b1, b2, adam_eps = 0.9, 0.999, 1e-8
    est = InverseEstimate(params)
    best_c = c.copy()
    prev_c = None
    failures, k = 0, 0
    while k <= config.n_iterations:
        loss, grad, ok = fd_gradient(loss_batch, c, eps)
        if not (ok and math.isfinite(loss) and np.all(np.isfinite(grad))):
            failures += 1
            est.rejected_steps += 1
            if failures > config.max_failures or prev_c is None and not math.isfinite(loss):
                raise NumericalFailure("inverse loss stayed non-finite after step/epsilon halving")
            lr, eps = 0.5 * lr, 0.5 * eps
            if prev_c is not None:
                c = prev_c.copy()
            continue
        failures = 0
        est.loss_trace.append(loss)
        if loss < est.best_loss:
            est.best_loss, best_c = loss, c.copy()
        est.best_trace.append(est.best_loss)
        if k == config.n_iterations or loss == 0.0:
            break
        prev_c = c.copy()
        if config.optimizer == "gd":
            c = c - lr * grad
        else:
            m = b1 * m + (1 - b1) * grad
            v = b2 * v + (1 - b2) * grad * grad
            mh = m / (1 - b1 ** (k + 1))
            vh = v / (1 - b2 ** (k + 1))
            c = c - lr * mh / (np.sqrt(vh) + adam_eps)
        k += 1
    est.params = params.with_values(best_c)
    return est


def evaluate_estimate(est: InverseEstimate, truth_ic: np.ndarray, observed: np.ndarray,
                      forward: ForwardMap, grid: Grid) -> MetricReport:
    """Inverse report for one sample: IC errors and primed horizon errors."""
    u0_hat = reconstruct_ic(est.params, grid).values[..., 0]
    pred_T = np.asarray(forward(u0_hat[None]))[0]
    return inverse_report(u0_hat[..., None], np.asarray(truth_ic).reshape(grid.shape)[..., None],
                          pred_T.reshape(grid.shape)[..., None], np.asarray(observed).reshape(grid.shape)[..., None])
