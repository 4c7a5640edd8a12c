"""Report figures: per-dataset metric bar charts rendered next to the
delimited output."""

from __future__ import annotations

import math
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt

from .experiment import ResultRow


def render_figures(rows: list[ResultRow], out_dir: str) -> list[Path]:
    """One PNG per dataset: RMSE and MAE by model."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    datasets: dict[str, list[ResultRow]] = {}
    for r in rows:
        datasets.setdefault(r.dataset, []).append(r)

    paths = []
    for name, group in datasets.items():
        models = [r.model for r in group]
        fig, axes = plt.subplots(1, 2, figsize=(max(6.0, 1.2 * len(models)), 3.2))
        for ax, metric in zip(axes, ("rmse", "mae")):
            vals = [getattr(r, metric) for r in group]
            vals = [0.0 if math.isnan(v) else v for v in vals]
            ax.bar(range(len(models)), vals, color="#4878a8")
            ax.set_xticks(range(len(models)))
            ax.set_xticklabels(models, rotation=45, ha="right", fontsize=8)
            ax.set_title(f"{name}: test {metric.upper()}", fontsize=10)
            ax.grid(axis="y", alpha=0.3)
        fig.tight_layout()
        path = out / f"{name}_metrics.png"
        fig.savefig(path, dpi=120)
        plt.close(fig)
        paths.append(path)
    return paths
