"""Figure rendering for the CLI report path.

Everything draws through the Agg backend straight to a file; the numeric
modules never import this.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

_VALUE_LABEL = {
    "gamma_accel": r"$\Gamma\tau$",
    "gamma_tilt": r"$\Gamma\tau$",
    "bound_accel": r"$\sqrt{S_{aa}}$ (raw)",
    "bound_tilt": r"$\sqrt{S_{\theta\theta}}$ (raw)",
    "dx_max": r"$\Delta x_{max}$ (m)",
    "kernel": r"$f_{aa}(\xi)$",
}


def plot_sweep(result, path) -> None:
    """Line plot for 1-D sweeps, log-color map plus contours for 2-D."""
    spec = result.spec
    fig, ax = plt.subplots(figsize=(6.0, 4.2), constrained_layout=True)
    label = _VALUE_LABEL.get(spec.quantity, spec.quantity)

    if result.y_values is None:
        ax.plot(result.x_values, result.grid, lw=1.2)
        ax.set_xlabel(spec.x_axis.name)
        ax.set_ylabel(label)
        if spec.x_axis.scale == "log":
            ax.set_xscale("log")
    else:
        grid = np.ma.masked_invalid(result.grid.T)
        positive = grid[grid > 0]
        norm = None
        if positive.size and positive.max() / max(positive.min(), 1e-300) > 1e3:
            norm = matplotlib.colors.LogNorm(vmin=positive.min(), vmax=positive.max())
        mesh = ax.pcolormesh(
            result.x_values, result.y_values, grid, shading="nearest", norm=norm,
            cmap="viridis",
        )
        fig.colorbar(mesh, ax=ax, label=label)
        for contour in result.contours:
            for line in contour.polylines:
                ax.plot(line[:, 0], line[:, 1], "k--", lw=1.0)
        ax.set_xlabel(spec.x_axis.name)
        ax.set_ylabel(spec.y_axis.name)
        if spec.x_axis.scale == "log":
            ax.set_xscale("log")
        if spec.y_axis.scale == "log":
            ax.set_yscale("log")

    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_table1(rows, path) -> None:
    """Horizontal log-scale bars: computed bounds vs reference orders."""
    fig, ax = plt.subplots(figsize=(6.4, 3.6), constrained_layout=True)
    labels = [
        f"{channel} $\\theta_0$={theta:.3f}$^\\circ$, a={accel:.3g}"
        for channel, theta, accel, *_ in rows
    ]
    computed = [row[3] for row in rows]
    reference = [row[4] for row in rows]
    y = np.arange(len(rows))
    ax.barh(y + 0.18, computed, height=0.34, label="computed")
    ax.barh(y - 0.18, reference, height=0.34, label="reference order")
    ax.set_yticks(y, labels, fontsize=8)
    ax.set_xscale("log")
    ax.set_xlabel("tolerable amplitude spectral density (raw units)")
    ax.legend(fontsize=8)
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_kernel(rows, path) -> None:
    """f_aa(xi) samples with the pi^2 peak marked."""
    xi = [r[0] for r in rows]
    val = [r[1] for r in rows]
    fig, ax = plt.subplots(figsize=(6.0, 4.0), constrained_layout=True)
    ax.plot(xi, val, lw=1.2)
    ax.axhline(math.pi**2, color="gray", ls=":", lw=0.8)
    ax.set_xlabel(r"$\xi = \omega/\omega_0$")
    ax.set_ylabel(r"$f_{aa}(\xi)$")
    fig.savefig(path, dpi=150)
    plt.close(fig)
