"""Figure rendering for experiment reports (written next to the CSV output)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def plot_phase(rates: np.ndarray, x_grid, gamma_grid, path) -> str:
    fig, ax = plt.subplots(figsize=(5.2, 4.0))
    mesh = ax.pcolormesh(np.arange(len(gamma_grid) + 1), np.arange(len(x_grid) + 1),
                         rates, cmap="viridis", vmin=0.0, vmax=1.0)
    ax.set_xticks(np.arange(len(gamma_grid)) + 0.5)
    ax.set_xticklabels([f"{g:g}" for g in gamma_grid])
    ax.set_yticks(np.arange(len(x_grid)) + 0.5)
    ax.set_yticklabels([f"{x:g}" for x in x_grid])
    ax.set_xlabel("noise-to-signal ratio")
    ax.set_ylabel("regularization multiplier x")
    ax.set_title("success rate")
    fig.colorbar(mesh, ax=ax)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def plot_crb(rows: list, path) -> str:
    methods = sorted({r["method"] for r in rows})
    deltas = sorted({r["delta"] for r in rows}, reverse=True)
    fig, axes = plt.subplots(1, len(deltas), figsize=(3.4 * len(deltas), 3.4),
                             sharey=True, squeeze=False)
    for ax, d in zip(axes[0], deltas):
        sub = [r for r in rows if r["delta"] == d]
        snrs = sorted({r["snr_db"] for r in sub})
        for m in methods:
            mse = [next(r["mse"] for r in sub
                        if r["method"] == m and r["snr_db"] == s) for s in snrs]
            ax.semilogy(snrs, mse, marker="o", label=m)
        crb_vals = [next(r["crb"] for r in sub if r["snr_db"] == s) for s in snrs]
        ax.semilogy(snrs, crb_vals, "k--", label="CRB")
        ax.set_title(f"separation {d:g}/n")
        ax.set_xlabel("SNR (dB)")
    axes[0][0].set_ylabel("frequency MSE")
    axes[0][0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def plot_scaling(result, path) -> str:
    fig, ax = plt.subplots(figsize=(4.6, 3.6))
    ax.loglog(result.rate_values, result.medians, "o-", label="median error")
    if not result.fit_skipped:
        x = np.asarray(result.rate_values)
        c = np.exp(np.mean(np.log(result.medians) - result.slope * np.log(x)))
        ax.loglog(x, c * x**result.slope, "k--",
                  label=f"fit slope {result.slope:.3f}")
    ax.set_xlabel("sqrt(log n) / n^(3/2)")
    ax.set_ylabel("median weighted frequency error")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)


def plot_certificate(fgrid: np.ndarray, magnitudes: np.ndarray, support,
                     path) -> str:
    fig, ax = plt.subplots(figsize=(6.0, 3.2))
    ax.plot(fgrid, magnitudes, lw=0.8)
    ax.axhline(1.0, color="k", ls="--", lw=0.8)
    for f in np.atleast_1d(support):
        ax.axvline(f % 1.0, color="r", ls=":", lw=0.8)
    ax.set_xlabel("frequency")
    ax.set_ylabel("|Q(f)|")
    ax.set_ylim(0, 1.15)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return str(path)
