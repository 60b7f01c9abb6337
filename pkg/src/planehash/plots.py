"""Figure rendering for the report commands.

Each report command writes a PNG next to its CSV. Rendering is headless
(Agg) and deterministic given the same rows.
"""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .families import collision_prob

FAMILY_COLORS = {"ah": "tab:blue", "eh": "tab:green", "bh": "tab:red", "lbh": "tab:purple"}


def collision_figure(rows: list, path: str) -> None:
    """Analytic collision-probability curves vs squared angle, with the
    Monte-Carlo estimates overlaid as markers."""
    fig, ax = plt.subplots(figsize=(6, 4.2), dpi=120)
    schemes = sorted({row["family"] for row in rows})
    grid = np.linspace(0.0, (np.pi / 2) ** 2, 200)
    for scheme in schemes:
        color = FAMILY_COLORS.get(scheme, "gray")
        ax.plot(
            grid,
            [collision_prob(scheme, np.sqrt(r)) for r in grid],
            color=color,
            label=f"{scheme} analytic",
        )
        pts = [(row["alpha"] ** 2, row["empirical_p"]) for row in rows if row["family"] == scheme]
        if pts:
            xs, ys = zip(*pts)
            ax.plot(xs, ys, "o", color=color, markersize=5, label=f"{scheme} empirical")
    ax.set_xlabel("squared point-to-hyperplane angle r")
    ax.set_ylabel("collision probability")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def rho_figure(rows: list, path: str) -> None:
    """Query-time exponent vs squared-angle radius, per family (valid points only)."""
    fig, ax = plt.subplots(figsize=(6, 4.2), dpi=120)
    schemes = sorted({row["family"] for row in rows})
    for scheme in schemes:
        pts = [
            (row["r"], row["rho"])
            for row in rows
            if row["family"] == scheme and row["valid"]
        ]
        if pts:
            xs, ys = zip(*pts)
            ax.plot(xs, ys, color=FAMILY_COLORS.get(scheme, "gray"), label=scheme)
    ax.set_xlabel("squared-angle radius r")
    ax.set_ylabel("query-time exponent rho")
    ax.legend(fontsize=8)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)


def al_figure(history: list, path: str) -> None:
    """AP, selected margin, and held-out accuracy vs iteration, averaged
    over arms and seeds."""
    iters = sorted({row["iteration"] for row in history})
    def series(field):
        out = []
        for it in iters:
            vals = [
                row[field]
                for row in history
                if row["iteration"] == it and np.isfinite(row[field])
            ]
            out.append(np.mean(vals) if vals else np.nan)
        return out

    fig, axes = plt.subplots(1, 3, figsize=(12, 3.6), dpi=120)
    axes[0].plot(iters, series("ap"), color="tab:blue")
    axes[0].set_ylabel("average precision")
    axes[1].plot(iters, series("selected_margin"), color="tab:orange")
    axes[1].set_ylabel("selected-sample margin")
    axes[2].plot(iters, series("test_accuracy"), color="tab:green")
    axes[2].set_ylabel("held-out accuracy")
    for ax in axes:
        ax.set_xlabel("iteration")
        ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path)
    plt.close(fig)
