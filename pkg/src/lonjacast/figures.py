"""Matplotlib renderings written next to the delimited report outputs."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .analysis import CorrelationMatrix
from .evaluation import EvaluationReport
from .ingest import PricePanel

__all__ = ["correlation_heatmap", "panel_chart", "report_chart", "history_chart"]


def correlation_heatmap(corr: CorrelationMatrix, path: str | Path) -> Path:
    """Market-by-market Pearson heatmap."""
    path = Path(path)
    n = len(corr.markets)
    fig, ax = plt.subplots(figsize=(max(6, n * 0.8), max(5, n * 0.7)))
    im = ax.imshow(corr.r, vmin=min(0.9, float(corr.r.min())), vmax=1.0, cmap="viridis")
    labels = [m.id for m in corr.markets]
    ax.set_xticks(range(n), labels, rotation=45, ha="right")
    ax.set_yticks(range(n), labels)
    for i in range(n):
        for j in range(n):
            ax.text(j, i, f"{corr.r[i, j]:.3f}", ha="center", va="center", fontsize=7, color="w")
    ax.set_title("Cross-market price correlation")
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def panel_chart(panel: PricePanel, path: str | Path) -> Path:
    """All market series over the aligned week range."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(10, 5))
    x = np.arange(panel.n_weeks)
    for j, market in enumerate(panel.markets):
        ax.plot(x, panel.values[:, j], label=market.id, linewidth=1)
    step = max(1, panel.n_weeks // 10)
    ax.set_xticks(x[::step], [str(w) for w in panel.weeks[::step]], rotation=45, ha="right")
    ax.set_ylabel("EUR/kg")
    ax.set_title("Weekly prices by market")
    ax.legend(fontsize=7, ncol=2)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def report_chart(report: EvaluationReport, path: str | Path) -> Path:
    """Grouped RMSE bars per model and scenario."""
    path = Path(path)
    scenarios = sorted({r.scenario for r in report.rows})
    models = [r.model for r in report.rows_for(scenarios[0])]
    width = 0.8 / len(scenarios)
    fig, ax = plt.subplots(figsize=(max(8, len(models) * 1.1), 4.5))
    x = np.arange(len(models))
    for k, scen in enumerate(scenarios):
        by_model = {r.model: r for r in report.rows if r.scenario == scen}
        vals = [
            by_model[m].rmse if m in by_model and np.isfinite(by_model[m].rmse) else 0.0
            for m in models
        ]
        ax.bar(x + k * width, vals, width, label=scen)
    ax.set_xticks(x + width * (len(scenarios) - 1) / 2, models, rotation=30, ha="right")
    ax.set_ylabel("test RMSE (EUR/kg)")
    ax.set_title("Model comparison by data-availability scenario")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def history_chart(pairs: list[dict], path: str | Path) -> Path:
    """Predicted vs agreed settlement prices per week."""
    path = Path(path)
    fig, ax = plt.subplots(figsize=(9, 4.5))
    weeks = [p["week"] for p in pairs]
    ax.plot(weeks, [p["predicted"] for p in pairs], marker="o", label="predicted")
    ax.plot(weeks, [p["agreed"] for p in pairs], marker="s", label="agreed")
    ax.set_ylabel("EUR/kg")
    ax.set_title("Forecast vs settled reference price")
    ax.tick_params(axis="x", rotation=45)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
