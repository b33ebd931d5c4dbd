"""Matplotlib renderings of the report artifacts, written straight to files.

Everything here is presentation-only: the csv/json outputs carry the same
numbers. Figures are rendered with the Agg backend so the CLI works on
headless machines.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .data import DomainDataset
from .harness import EvaluationReport, pearson_matrix


def feature_shift_figure(
    before_s: np.ndarray,
    before_t: np.ndarray,
    after_s: np.ndarray,
    after_t: np.ndarray,
    path: str | Path,
    feature_names: tuple[str, ...] | None = None,
    bins: int = 30,
) -> Path:
    """Per-feature histogram overlays, generated-source vs target, pre and post mapping."""
    before_s, before_t = np.asarray(before_s), np.asarray(before_t)
    after_s, after_t = np.asarray(after_s), np.asarray(after_t)
    d_pre, d_post = before_s.shape[1], after_s.shape[1]
    cols = max(d_pre, d_post)
    fig, axes = plt.subplots(2, cols, figsize=(2.6 * cols, 5.2), squeeze=False)
    for row, (S, T, width) in enumerate(
        [(before_s, before_t, d_pre), (after_s, after_t, d_post)]
    ):
        for j in range(cols):
            ax = axes[row][j]
            if j >= width:
                ax.axis("off")
                continue
            lo = min(S[:, j].min(), T[:, j].min())
            hi = max(S[:, j].max(), T[:, j].max())
            if hi <= lo:
                lo, hi = lo - 0.5, hi + 0.5
            edges = np.linspace(lo, hi, bins + 1)
            ax.hist(S[:, j], bins=edges, alpha=0.55, label="source", density=True)
            ax.hist(T[:, j], bins=edges, alpha=0.55, label="target", density=True)
            if row == 0:
                name = feature_names[j] if feature_names else f"f{j}"
                ax.set_title(name, fontsize=9)
            else:
                ax.set_title(f"tc{j}", fontsize=9)
            ax.tick_params(labelsize=7)
    axes[0][0].set_ylabel("before mapping", fontsize=9)
    axes[1][0].set_ylabel("after mapping", fontsize=9)
    axes[0][0].legend(fontsize=7)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=140)
    plt.close(fig)
    return path


def correlation_heatmap(ds: DomainDataset, path: str | Path) -> Path:
    """Feature/label correlation matrix, features ordered by label relevance."""
    corr = pearson_matrix(ds)
    names = list(ds.schema.all_names)
    d = len(ds.schema.feature_names)
    label_idx = list(range(d, len(names)))
    if label_idx:
        relevance = np.max(np.abs(corr[:d][:, label_idx]), axis=1)
    else:
        relevance = np.max(np.abs(corr[:d, :d] - np.eye(d)), axis=1)
    order = list(np.argsort(relevance)[::-1]) + label_idx
    corr = corr[np.ix_(order, order)]
    names = [names[i] for i in order]

    fig, ax = plt.subplots(figsize=(1.0 + 0.55 * len(names), 0.8 + 0.55 * len(names)))
    im = ax.imshow(corr, vmin=-1.0, vmax=1.0, cmap="RdBu_r")
    ax.set_xticks(range(len(names)), names, rotation=45, ha="right", fontsize=8)
    ax.set_yticks(range(len(names)), names, fontsize=8)
    for i in range(len(names)):
        for j in range(len(names)):
            ax.text(j, i, f"{corr[i, j]:.2f}", ha="center", va="center", fontsize=6)
    fig.colorbar(im, ax=ax, shrink=0.8)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=140)
    plt.close(fig)
    return path


def prediction_figure(report: EvaluationReport, path: str | Path) -> Path:
    """Actual vs predicted label values per (label, regressor), both arms."""
    rows = report.rows
    if not rows or not rows[0].y_true:
        raise ValueError("report carries no stored predictions")
    fig, axes = plt.subplots(
        len(rows), 1, figsize=(7.0, 2.2 * len(rows)), squeeze=False, sharex=False
    )
    for ax, row in zip(axes[:, 0], rows):
        y = np.asarray(row.y_true)
        order = np.argsort(y)
        ax.plot(y[order], color="c", lw=1.6, label="profiled")
        ax.plot(np.asarray(row.original_pred)[order], ".", ms=2.5, alpha=0.6, label="original")
        ax.plot(np.asarray(row.ftca_pred)[order], ".", ms=2.5, alpha=0.6, label="ftca")
        ax.set_title(f"{report.task}: {row.label} / {row.regressor}", fontsize=9)
        ax.tick_params(labelsize=7)
    axes[0][0].legend(fontsize=7)
    fig.tight_layout()
    path = Path(path)
    fig.savefig(path, dpi=140)
    plt.close(fig)
    return path
