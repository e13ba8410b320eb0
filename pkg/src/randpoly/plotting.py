"""Figures for result tables: scaled estimates against n with the limit constant."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def plot_table(table, path, title: str | None = None) -> None:
    names = table.functionals
    fig, axes = plt.subplots(1, len(names), figsize=(5.5 * len(names), 4.0), squeeze=False)
    for ax, name in zip(axes[0], names):
        rows = table.select(name)
        n = np.array([r.record.n for r in rows], dtype=float)
        scaled = np.array([r.scaled for r in rows])
        err = np.array([r.record.stderr * r.record.n ** r.exponent for r in rows])
        ax.errorbar(n, scaled, yerr=2.0 * err, marker="o", ms=4, capsize=3, lw=1.2, label="scaled estimate")
        theory = rows[0].theory if rows else float("nan")
        if np.isfinite(theory):
            ax.axhline(theory, color="0.3", ls="--", lw=1.0, label="limit")
        ax.set_xscale("log", base=2)
        ax.set_xlabel("n")
        ax.set_ylabel("scaled value")
        ax.set_title(f"{name} ({rows[0].record.body})" if rows else name, fontsize=10)
        ax.grid(alpha=0.3, which="both")
        ax.legend(fontsize=8, frameon=False)
    if title:
        fig.suptitle(title)
    fig.tight_layout()
    fig.savefig(path, dpi=110)
    plt.close(fig)
