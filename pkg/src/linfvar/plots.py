"""Figure rendering for report outputs (opt-in via --emit-figures).

Uses the Agg backend so figures render headlessly alongside the CSV/JSON
artifacts; nothing here is needed for the numerics.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .grid import ScalarField  # noqa: E402

__all__ = ["plot_field", "plot_trace"]


def plot_field(path, fld: ScalarField, title: str = "") -> Path:
    """Line plot in 1D, filled contour in 2D."""
    g = fld.grid
    fig, ax = plt.subplots(figsize=(5, 3.2), constrained_layout=True)
    if g.dim == 1:
        ax.plot(g.points[:, 0], fld.values, lw=1.2)
        ax.set_xlabel("x")
    else:
        Z = fld.reshape()
        im = ax.contourf(g.axes[0], g.axes[1], Z.T, levels=21)
        fig.colorbar(im, ax=ax)
        ax.set_xlabel("x")
        ax.set_ylabel("y")
    if title:
        ax.set_title(title)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return Path(path)


def plot_trace(path, p_values, e_values, title: str = "energy trace") -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.2), constrained_layout=True)
    ax.semilogx(p_values, e_values, "o-", base=2)
    ax.set_xlabel("p")
    ax.set_ylabel("e_p")
    ax.set_title(title)
    fig.savefig(path, dpi=130)
    plt.close(fig)
    return Path(path)
