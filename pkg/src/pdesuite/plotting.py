"""Report figures, rendered off-screen to image files."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .metrics import FORWARD_BANDS, _shell_power  # noqa: E402


def _save(fig, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, dpi=110, bbox_inches="tight")
    plt.close(fig)
    return path


def plot_sample(truth: np.ndarray, pred: np.ndarray, path, channel: int = 0) -> Path:
    """Truth vs prediction for one sample laid out (t, x..., v).

    1D: a few snapshots as lines.  2D+: last frame (mid-plane in 3D) as
    truth / prediction / |error| images.
    """
    d = truth.ndim - 2
    if d == 1:
        fig, ax = plt.subplots(figsize=(6, 3.5))
        nt = truth.shape[0]
        x = (np.arange(truth.shape[1]) + 0.5) / truth.shape[1]
        for k, c in zip(sorted({0, nt // 2, nt - 1}), ("C0", "C1", "C2")):
            ax.plot(x, truth[k, :, channel], color=c, label=f"truth, frame {k}")
            ax.plot(x, pred[k, :, channel], "--", color=c, label=f"pred, frame {k}")
        ax.set_xlabel("x / L")
        ax.legend(fontsize=7, ncol=2)
        return _save(fig, path)
    sel = (-1,) + (slice(None),) * 2 + (truth.shape[3] // 2,) * (d - 2) + (channel,)
    a, b = truth[sel], pred[sel]
    fig, axes = plt.subplots(1, 3, figsize=(10, 3.2))
    vmin, vmax = min(a.min(), b.min()), max(a.max(), b.max())
    for ax, img, title in zip(axes, (a, b, np.abs(a - b)), ("truth", "prediction", "|error|")):
        kw = {"vmin": vmin, "vmax": vmax} if title != "|error|" else {}
        im = ax.imshow(img.T, origin="lower", **kw)
        ax.set_title(title)
        ax.set_xticks([])
        ax.set_yticks([])
        fig.colorbar(im, ax=ax, shrink=0.8)
    return _save(fig, path)


def plot_error_spectrum(truth: np.ndarray, pred: np.ndarray, path) -> Path:
    """Time/batch/channel-averaged shell power of the error, forward bands shaded."""
    d = truth.ndim - 3
    err = np.moveaxis(np.asarray(pred, float) - np.asarray(truth, float), -1, 2)
    spec = _shell_power(err, d).mean(axis=(0, 1, 2))
    k = np.arange(len(spec))
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.semilogy(k, np.maximum(spec, 1e-300), "k.-", lw=1)
    colors = {"low": "C0", "mid": "C1", "high": "C3"}
    for name, (lo, hi) in FORWARD_BANDS.items():
        hi = k[-1] if hi is None else min(hi, k[-1])
        if lo <= k[-1]:
            ax.axvspan(lo - 0.5, hi + 0.5, color=colors[name], alpha=0.15, label=name)
    ax.set_xlabel("shell |k|")
    ax.set_ylabel("error power")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_inverse(x, u0_true, u0_est, obs, pred, trace, path) -> Path:
    fig, axes = plt.subplots(1, 3, figsize=(12, 3.3))
    axes[0].plot(x, u0_true, "k", label="true IC")
    axes[0].plot(x, u0_est, "C3--", label="estimate")
    axes[0].legend(fontsize=8)
    axes[1].plot(x, obs, "k", label="observed u(T)")
    axes[1].plot(x, pred, "C3--", label="u(T | estimate)")
    axes[1].legend(fontsize=8)
    axes[2].semilogy(np.maximum(np.asarray(trace), 1e-300))
    axes[2].set_xlabel("iteration")
    axes[2].set_ylabel("best loss")
    return _save(fig, path)
