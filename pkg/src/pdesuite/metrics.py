"""Forward and inverse error metrics.

Forward metrics take prediction/truth arrays laid out ``(b, t, x1..xd, v)``;
time-independent data should carry a length-1 ``t`` axis.  Everything is
computed per (sample, timestep, channel), then averaged over time, batch and
finally channels.

DFT convention: the forward transform is unnormalized and the squared
magnitude is divided once by the number of cells, so that the shell powers
of an error field sum to ``sum(|err|**2)`` (Parseval).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

FORWARD_BANDS = {"low": (0, 4), "mid": (5, 12), "high": (13, None)}
FORWARD_KEYS = ("RMSE", "nRMSE", "max error", "cRMSE", "bRMSE", "fRMSE low", "fRMSE mid", "fRMSE high")
AVERAGING = "space -> sqrt -> mean(time) -> mean(batch) per channel -> mean(channels)"


@dataclass
class MetricReport:
    values: dict[str, float]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for k, v in self.values.items():
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError(f"metric {k!r} is {v}; expected finite and >= 0")

    def __getitem__(self, key):
        return self.values[key]

    def keys(self):
        return self.values.keys()

    def to_dict(self) -> dict:
        return {"values": {k: float(v) for k, v in self.values.items()}, "metadata": self.metadata}

    @classmethod
    def from_dict(cls, d: dict) -> "MetricReport":
        return cls({k: float(v) for k, v in d["values"].items()}, dict(d.get("metadata", {})))

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


# -- helpers -------------------------------------------------------------------

def _prep(pred, true, spatial_dim=None):
    pred = np.asarray(pred, dtype=np.float64)
    true = np.asarray(true, dtype=np.float64)
    if pred.shape != true.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {true.shape}")
    d = pred.ndim - 3 if spatial_dim is None else int(spatial_dim)
    if d < 1 or pred.ndim != d + 3:
        raise ValueError(f"expected (b, t, x1..xd, v) arrays, got shape {pred.shape}")
    # channel axis next to (b, t) so that spatial axes are trailing
    return np.moveaxis(pred, -1, 2), np.moveaxis(true, -1, 2), d


def _average(per_btv: np.ndarray) -> float:
    """(b, t, v) -> scalar following the documented order."""
    per_channel = per_btv.mean(axis=1).mean(axis=0)
    return float(per_channel.mean())


def _space_axes(d):
    return tuple(range(-d, 0))


# -- forward metrics -----------------------------------------------------------

def rmse(pred, true, spatial_dim=None) -> float:
    p, t, d = _prep(pred, true, spatial_dim)
    return _average(np.sqrt(np.mean((p - t) ** 2, axis=_space_axes(d))))


def nrmse(pred, true, spatial_dim=None) -> float:
    """Not symmetric: normalized by the truth norm."""
    p, t, d = _prep(pred, true, spatial_dim)
    ax = _space_axes(d)
    denom = np.sqrt(np.sum(t**2, axis=ax))
    if np.any(denom == 0.0):
        raise ValueError("nRMSE undefined: zero-norm truth in some (sample, timestep, channel)")
    return _average(np.sqrt(np.sum((p - t) ** 2, axis=ax)) / denom)


def max_error(pred, true, spatial_dim=None) -> float:
    p, t, _ = _prep(pred, true, spatial_dim)
    err = np.abs(p - t).reshape(p.shape[0], -1)
    return float(err.max(axis=1).mean())


def crmse(pred, true, spatial_dim=None) -> float:
    """|sum_x pred - sum_x true| / N per channel and timestep."""
    p, t, d = _prep(pred, true, spatial_dim)
    ax = _space_axes(d)
    n = int(np.prod(p.shape[-d:]))
    return _average(np.abs(np.sum(p, axis=ax) - np.sum(t, axis=ax)) / n)


def boundary_mask(shape) -> np.ndarray:
    """True on the outermost cell layer of a box of the given spatial shape."""
    mask = np.zeros(shape, dtype=bool)
    for ax in range(len(shape)):
        idx = [slice(None)] * len(shape)
        idx[ax] = 0
        mask[tuple(idx)] = True
        idx[ax] = -1
        mask[tuple(idx)] = True
    return mask


def brmse(pred, true, spatial_dim=None) -> float:
    p, t, d = _prep(pred, true, spatial_dim)
    mask = boundary_mask(p.shape[-d:])
    err2 = ((p - t) ** 2)[..., mask]
    return _average(np.sqrt(err2.mean(axis=-1)))


def shell_index(shape) -> np.ndarray:
    """Integer radius round(|k|) of every DFT mode of a grid with ``shape`` cells."""
    ks = np.meshgrid(*[np.fft.fftfreq(n, 1.0 / n) for n in shape], indexing="ij")
    if len(shape) == 1:
        return np.abs(ks[0]).astype(np.int64)
    return np.rint(np.sqrt(sum(k * k for k in ks))).astype(np.int64)


def nyquist_shell(shape) -> int:
    return int(min(shape) // 2)


def _shell_power(err: np.ndarray, d: int) -> np.ndarray:
    """(..., x1..xd) -> (..., n_shells) shell-summed |F err|^2 / N."""
    shape = err.shape[-d:]
    n = int(np.prod(shape))
    power = np.abs(np.fft.fftn(err, axes=_space_axes(d))) ** 2 / n
    shells = shell_index(shape).ravel()
    n_shells = int(shells.max()) + 1
    onehot = sp.csr_matrix((np.ones(n), (shells, np.arange(n))), shape=(n_shells, n))
    lead = power.shape[:-d]
    flat = power.reshape(-1, n)
    return np.asarray(onehot @ flat.T).T.reshape(*lead, n_shells)


def radial_spectrum(err, dim: int | None = None) -> np.ndarray:
    """Angularly integrated error power per integer wavenumber shell.

    ``err`` is a Field (channel axis moved to the front of the result) or an
    array whose trailing ``dim`` axes are spatial (default: all axes).
    """
    if hasattr(err, "grid") and hasattr(err, "values"):
        d = err.grid.dim
        arr = np.moveaxis(np.asarray(err.values, dtype=np.float64), -1, 0)
    else:
        arr = np.asarray(err, dtype=np.float64)
        d = arr.ndim if dim is None else int(dim)
    return _shell_power(arr, d)


def band_slice(band: str, k_nyquist: int, n_shells: int):
    """(shell slice, normalization width) for a forward band name."""
    lo, hi = FORWARD_BANDS[band]
    if hi is None:
        # every shell from 13 on, including corner shells beyond Nyquist;
        # width uses the finite Nyquist index
        return slice(lo, n_shells), max(k_nyquist - lo + 1, 1)
    return slice(lo, hi + 1), hi - lo + 1


def frmse(pred, true, band: str = "low", spatial_dim=None) -> float:
    p, t, d = _prep(pred, true, spatial_dim)
    spec = _shell_power(p - t, d)
    sl, width = band_slice(band, nyquist_shell(p.shape[-d:]), spec.shape[-1])
    return _average(np.sqrt(spec[..., sl].sum(axis=-1)) / width)


def forward_report(pred, true, spatial_dim=None) -> MetricReport:
    vals = {
        "RMSE": rmse(pred, true, spatial_dim),
        "nRMSE": nrmse(pred, true, spatial_dim),
        "max error": max_error(pred, true, spatial_dim),
        "cRMSE": crmse(pred, true, spatial_dim),
        "bRMSE": brmse(pred, true, spatial_dim),
    }
    for b in FORWARD_BANDS:
        vals[f"fRMSE {b}"] = frmse(pred, true, b, spatial_dim)
    shape = np.shape(pred)
    meta = {"averaging": AVERAGING, "shape": list(shape),
            "bands": {k: [v[0], v[1] if v[1] is not None else "nyquist"] for k, v in FORWARD_BANDS.items()},
            "dft": "unnormalized forward, power / N"}
    return MetricReport(vals, meta)


# -- inverse metrics -----------------------------------------------------------

def inverse_norm_error(pred, true, p: int = 2) -> float:
    pred = np.asarray(pred, dtype=np.float64)
    true = np.asarray(true, dtype=np.float64)
    if pred.shape != true.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {true.shape}")
    denom = np.sum(np.abs(true) ** p) ** (1.0 / p)
    if denom == 0.0:
        raise ValueError(f"nL{p} undefined for a zero truth field")
    return float(np.sum(np.abs(pred - true) ** p) ** (1.0 / p) / denom)


def inverse_bands(k_max: int) -> dict[str, tuple[float, float]]:
    """Quarter partition [0, k/4), [k/4, 3k/4), [3k/4, inf)."""
    return {"low": (0.0, k_max / 4.0), "mid": (k_max / 4.0, 3.0 * k_max / 4.0), "high": (3.0 * k_max / 4.0, math.inf)}


def inverse_spectral_errors(pred, true, spatial_dim=None, prime: str = "") -> MetricReport:
    """fMSE / fL2 / fL3 over the full spectrum and per quarter band.

    Fields are ``(x1..xd, v)`` (trailing channel axis); 1-D inputs are
    treated as a single-channel 1-D field.  Band MSEs sum to the spatial
    MSE; band Lp errors are normalized by the full-spectrum truth norm so
    that squared fL2 bands recompose to fL2 (which equals nL2).
    """
    pred = np.asarray(pred, dtype=np.float64)
    true = np.asarray(true, dtype=np.float64)
    if pred.shape != true.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {true.shape}")
    if pred.ndim == 1:
        pred, true = pred[:, None], true[:, None]
    d = pred.ndim - 1 if spatial_dim is None else int(spatial_dim)
    ax = tuple(range(d))
    shape = pred.shape[:d]
    n = int(np.prod(shape))
    n_ch = int(np.prod(pred.shape[d:]))
    fe = np.abs(np.fft.fftn(pred - true, axes=ax))
    ft = np.abs(np.fft.fftn(true, axes=ax))
    shells = shell_index(shape).reshape(shape + (1,) * (pred.ndim - d))
    shells = np.broadcast_to(shells, pred.shape)
    masks = {"": np.ones(pred.shape, dtype=bool)}
    for b, (lo, hi) in inverse_bands(nyquist_shell(shape)).items():
        masks[" " + b] = (shells >= lo) & (shells < hi)
    vals = {}
    for suffix, m in masks.items():
        vals[f"fMSE{prime}{suffix}"] = float(np.sum(fe[m] ** 2) / (n * n * n_ch))
    for p in (2, 3):
        denom = np.sum(ft**p) ** (1.0 / p)
        if denom == 0.0:
            raise ValueError(f"fL{p} undefined for a zero truth field")
        for suffix, m in masks.items():
            vals[f"fL{p}{prime}{suffix}"] = float(np.sum(fe[m] ** p) ** (1.0 / p) / denom)
    return MetricReport(vals, {"bands": "quarters of the Nyquist shell", "spatial_dim": d})


def _field_errors(pred, true, prime: str) -> dict[str, float]:
    pred = np.asarray(pred, dtype=np.float64)
    true = np.asarray(true, dtype=np.float64)
    vals = {f"MSE{prime}": float(np.mean((pred - true) ** 2)),
            f"nL2{prime}": inverse_norm_error(pred, true, 2),
            f"nL3{prime}": inverse_norm_error(pred, true, 3)}
    vals.update(inverse_spectral_errors(pred, true, prime=prime).values)
    return vals


def inverse_report(estimated, truth_ic, pred_T, true_T) -> MetricReport:
    """IC-space errors plus primed errors of the horizon prediction."""
    vals = _field_errors(estimated, truth_ic, "")
    vals.update(_field_errors(pred_T, true_T, "'"))
    return MetricReport(vals, {"prime": "error of the prediction at the horizon T"})


def mean_std_reports(reports: list[MetricReport]) -> MetricReport:
    """Average a list of per-sample reports; stds go into the metadata."""
    if not reports:
        raise ValueError("no reports to aggregate")
    keys = list(reports[0].values)
    arr = np.array([[r.values[k] for k in keys] for r in reports])
    return MetricReport(dict(zip(keys, arr.mean(axis=0).tolist())),
                        {"n": len(reports), "std": dict(zip(keys, arr.std(axis=0).tolist()))})
