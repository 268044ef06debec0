"""Figures written next to the CLI's textual reports."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.ticker import MaxNLocator  # noqa: E402

from .volume import as_array  # noqa: E402

_PLANES = ("sagittal", "coronal", "axial")


def central_slices(v):
    a = as_array(v)
    L, W, H = a.shape
    return a[L // 2, :, :], a[:, W // 2, :], a[:, :, H // 2]


def _show_row(axes, vol, label, vmin=0.0, vmax=1.0, cmap="gray"):
    for ax, sl, plane in zip(axes, central_slices(vol), _PLANES):
        ax.imshow(np.rot90(sl), cmap=cmap, vmin=vmin, vmax=vmax)
        ax.set_xticks([])
        ax.set_yticks([])
        ax.set_title(f"{label} ({plane})", fontsize=8)


def plot_restoration(y, x_hat, report, path):
    """Input and output central slices plus the per-iteration noise trace."""
    fig = plt.figure(figsize=(10, 6.5))
    grid = fig.add_gridspec(3, 3, height_ratios=[1, 1, 0.8])
    hi = max(float(np.percentile(as_array(x_hat), 99.9)), 1e-6)
    _show_row([fig.add_subplot(grid[0, i]) for i in range(3)], y, "input", 0.0, hi)
    _show_row([fig.add_subplot(grid[1, i]) for i in range(3)], x_hat, "restored", 0.0, hi)
    ax = fig.add_subplot(grid[2, :])
    hist = np.asarray(report.sigma_history, dtype=float).reshape(-1, 2)
    steps = np.arange(1, len(hist) + 1)
    ax.axhline(report.initial_raw_std, color="0.5", ls=":", label="input")
    if len(hist):
        ax.plot(steps, hist[:, 0], "o-", label="before denoising")
        ax.plot(steps, hist[:, 1], "s-", label="after correction")
    ax.xaxis.set_major_locator(MaxNLocator(integer=True))
    ax.set_xlabel("iteration")
    ax.set_ylabel("raw gradient std")
    ax.set_title(f"stop: {report.stop_reason} after {report.iterations_run} iteration(s)", fontsize=9)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)


def plot_comparison(test, ref, path, gradient_domain=False):
    """Test, reference and absolute difference, one row each."""
    from .metrics import gradient_magnitude

    a, b = as_array(test), as_array(ref)
    if gradient_domain:
        a, b = gradient_magnitude(a), gradient_magnitude(b)
    hi = float(max(np.max(a), np.max(b), 1e-12))
    diff = np.abs(a - b)
    fig, axes = plt.subplots(3, 3, figsize=(9, 9))
    _show_row(axes[0], a, "test", 0.0, hi)
    _show_row(axes[1], b, "reference", 0.0, hi)
    _show_row(axes[2], diff, "|difference|", 0.0, float(max(diff.max(), 1e-12)), cmap="magma")
    fig.tight_layout()
    fig.savefig(path, dpi=100)
    plt.close(fig)
