"""Learning-curve figures: mean line with a +-1 std band, saved as SVG."""

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_curve_figure(path, title: str, aggregate, label: str | None = None):
    """Render one cell's (cost, mean, std) aggregate to an SVG file."""
    costs, means, stds = (np.asarray(col, dtype=np.float64)
                          for col in zip(*aggregate))
    fig, ax = plt.subplots(figsize=(5.5, 3.8))
    ax.plot(costs, means, marker="o", lw=1.5, label=label or title)
    ax.fill_between(costs, means - stds, means + stds, alpha=0.25)
    ax.set_xlabel("labeled instances")
    ax.set_ylabel("micro-average accuracy")
    ax.set_title(title)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)


def save_overview_figure(path, cell_aggregates: dict):
    """All cells' mean curves on one axis for a quick visual comparison."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    for name in sorted(cell_aggregates):
        costs, means, _ = (np.asarray(col, dtype=np.float64)
                           for col in zip(*cell_aggregates[name]))
        ax.plot(costs, means, marker=".", lw=1.2, label=name)
    ax.set_xlabel("labeled instances")
    ax.set_ylabel("micro-average accuracy")
    ax.grid(alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(path, metadata={"Date": None})
    plt.close(fig)
