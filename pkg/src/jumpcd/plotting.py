"""Figure rendering for the CLI report path.

Each helper takes the already-computed table data and writes a PNG next to
the delimited output.  Everything uses the Agg backend; nothing here is
needed for the library computations.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

__all__ = [
    "plot_cd_table",
    "plot_relaxation",
    "plot_heat_solution",
    "plot_liyau_margins",
    "plot_heat_bounds",
]

_STYLE = {"lw": 1.6}


def _save(fig, path: str) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def plot_cd_table(a: np.ndarray, f: np.ndarray, label: str, path: str) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.loglog(a, f, **_STYLE)
    ax.set_xlabel("a")
    ax.set_ylabel("F(a)")
    ax.set_title(label)
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, path)


def plot_relaxation(t: np.ndarray, phi: np.ndarray, label: str, path: str) -> None:
    fig, ax = plt.subplots(figsize=(5.5, 4))
    ax.loglog(t, phi, **_STYLE)
    ax.set_xlabel("t")
    ax.set_ylabel("phi(t)")
    ax.set_title(label)
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, path)


def plot_heat_solution(times, sites, values, label: str, path: str) -> None:
    fig, axes = plt.subplots(1, 2, figsize=(10, 4))
    im = axes[0].pcolormesh(sites, times, values, shading="auto")
    axes[0].set_xlabel("x")
    axes[0].set_ylabel("t")
    fig.colorbar(im, ax=axes[0], label="u(t,x)")
    show = np.linspace(0, len(times) - 1, min(6, len(times))).astype(int)
    for ti in show:
        axes[1].plot(sites, values[ti], label=f"t={times[ti]:.3g}", lw=1.2)
    axes[1].set_xlabel("x")
    axes[1].set_ylabel("u")
    axes[1].legend(fontsize=7)
    axes[1].grid(alpha=0.3)
    fig.suptitle(label)
    _save(fig, path)


def plot_liyau_margins(times, m1_worst, m2_worst, phis, label: str, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.semilogx(times, m1_worst, label="worst margin: -Lv <= phi", **_STYLE)
    ax.semilogx(times, m2_worst, label="worst margin: dv/dt >= psi(v) - phi", **_STYLE)
    ax.semilogx(times, phis, "--", label="phi(t)", lw=1.0, color="gray")
    ax.axhline(0.0, color="k", lw=0.8)
    ax.set_xlabel("t")
    ax.set_ylabel("margin")
    ax.set_title(label)
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    _save(fig, path)


def plot_heat_bounds(t, lower, upper, p_vals, label: str, path: str) -> None:
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.loglog(t, lower, label="lower bound", **_STYLE)
    up = np.array([np.nan if u is None else u for u in upper], dtype=float)
    if np.any(np.isfinite(up)):
        ax.loglog(t, up, label="upper bound", **_STYLE)
    if p_vals is not None:
        ax.loglog(t, p_vals, "o-", ms=3, lw=1.0, label="p_t (killed window)")
    ax.set_xlabel("t")
    ax.set_ylabel("value")
    ax.set_title(label)
    ax.legend(fontsize=8)
    ax.grid(True, which="both", alpha=0.3)
    _save(fig, path)
