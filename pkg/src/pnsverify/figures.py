"""Matplotlib figure rendering for the CLI report path.

Each report type gets one PNG next to its CSV.  Rendering is file-only
(Agg backend) and deterministic for a fixed matplotlib version.
"""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_DPI = 120


def _save(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=_DPI)
    plt.close(fig)
    return path


def blowup_curves(header, rows, t_star, path):
    """Log-scale derivative-magnitude curves over time with the singular time."""
    arr = np.asarray(rows, dtype=float)
    fig, ax = plt.subplots(figsize=(6, 4))
    for col in range(1, arr.shape[1]):
        label = header[col].replace("abs_derivative_m", "order ")
        positive = arr[:, col] > 0
        ax.semilogy(arr[positive, 0], arr[positive, col], label=label)
    ax.axvline(t_star, color="k", linestyle=":", linewidth=1, label="singular time")
    ax.set_xlabel("t")
    ax.set_ylabel("|derivative|")
    ax.legend(fontsize=8)
    ax.set_title("time-factor derivative growth")
    return _save(fig, path)


def exponent_fits(fits, path):
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ms = [f.m for f in fits]
    ax.plot(ms, [f.fitted_slope for f in fits], "o", label="fitted")
    ax.plot(ms, [f.expected_slope for f in fits], "k_", markersize=16, label="expected 1/6 - m")
    ax.set_xlabel("derivative order m")
    ax.set_ylabel("log-log slope")
    ax.set_xticks(ms)
    ax.legend(fontsize=8)
    ax.set_title("blowup exponent fits")
    return _save(fig, path)


def dns_diagnostics(series, path):
    t = np.asarray(series.times)
    fig, axes = plt.subplots(2, 2, figsize=(8, 6), sharex=True)
    axes[0, 0].plot(t, series.energy)
    axes[0, 0].set_ylabel("energy")
    axes[0, 1].plot(t, series.enstrophy)
    axes[0, 1].set_ylabel("enstrophy")
    axes[1, 0].plot(t, series.max_vorticity, label="max vorticity")
    axes[1, 0].plot(t, series.bkm_integral, label="BKM integral")
    axes[1, 0].set_ylabel("vorticity")
    axes[1, 0].legend(fontsize=8)
    axes[1, 1].plot(t, series.min_pressure)
    axes[1, 1].set_ylabel("min pressure")
    for ax in axes[1]:
        ax.set_xlabel("t")
    fig.suptitle("DNS diagnostics")
    return _save(fig, path)


def residual_bars(reports, path):
    names = [r.name for r in reports]
    l2 = np.asarray([max(r.l2, 1e-18) for r in reports])
    linf = np.asarray([max(r.linf, 1e-18) for r in reports])
    x = np.arange(len(names))
    fig, ax = plt.subplots(figsize=(6.5, 4))
    ax.bar(x - 0.2, l2, width=0.4, label="L2")
    ax.bar(x + 0.2, linf, width=0.4, label="Linf")
    ax.set_yscale("log")
    ax.set_xticks(x)
    ax.set_xticklabels(names, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("residual norm")
    ax.legend(fontsize=8)
    ax.set_title("residual norms")
    return _save(fig, path)


def inequality_margins(reports, path):
    fig, ax = plt.subplots(figsize=(5.5, 4))
    idx = np.arange(len(reports))
    ax.bar(idx - 0.2, [r.lhs for r in reports], width=0.4, label="weighted norm")
    ax.bar(idx + 0.2, [r.rhs for r in reports], width=0.4, label="constant * gradient norm")
    ax.set_xticks(idx)
    ax.set_xticklabels([r.name for r in reports], rotation=20, ha="right", fontsize=8)
    ax.legend(fontsize=8)
    ax.set_title("weighted-norm inequality")
    return _save(fig, path)


def wave_residual_bars(rows, path):
    """rows: (label, value) pairs of max residual magnitudes."""
    labels = [r[0] for r in rows]
    vals = np.asarray([max(float(r[1]), 1e-18) for r in rows])
    fig, ax = plt.subplots(figsize=(6, 3.5))
    ax.bar(np.arange(len(labels)), vals)
    ax.set_yscale("log")
    ax.set_xticks(np.arange(len(labels)))
    ax.set_xticklabels(labels, rotation=20, ha="right", fontsize=8)
    ax.set_ylabel("max |residual|")
    ax.set_title("wave reduction residuals")
    return _save(fig, path)
