"""Metric files, Markdown tables, and plot emission."""

from __future__ import annotations

import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def write_metrics_csv(path, rows) -> None:
    """Rows of (metric, value) pairs."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["metric", "value"])
        for metric, value in rows:
            writer.writerow([metric, f"{value:.6f}"])


def read_metrics_csv(path):
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for metric, value in reader:
            rows.append((metric, float(value)))
    return rows


def metrics_markdown_table(label, metrics: dict, ranks) -> str:
    """One table row in the benchmark layout: mAP then rank columns."""
    header = "| Training Data | mAP | " + " | ".join(f"R-{r}" for r in ranks) + " |"
    sep = "|" + "---|" * (2 + len(ranks))
    cells = [f"{100 * metrics['mAP']:.1f}"]
    cells += [f"{100 * metrics[f'rank-{r}']:.1f}" for r in ranks]
    row = f"| {label} | " + " | ".join(cells) + " |"
    return "\n".join([header, sep, row])


def write_cmc_curve(csv_path, png_path, curve) -> None:
    ranks = list(range(1, len(curve) + 1))
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["rank", "accuracy"])
        for r, v in zip(ranks, curve):
            writer.writerow([r, f"{v:.6f}"])
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(ranks, curve, marker="o")
    ax.set_xlabel("rank")
    ax.set_ylabel("matching rate")
    ax.set_ylim(0, 1.02)
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(png_path)
    plt.close(fig)


def write_scatter(csv_path, png_path, points, labels, centroids=None,
                  title=None) -> None:
    with open(csv_path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "domain"])
        for (x, y), d in zip(points, labels):
            writer.writerow([f"{x:.6f}", f"{y:.6f}", int(d)])
    fig, ax = plt.subplots(figsize=(4.5, 4))
    for d, marker, color in ((0, "o", "tab:red"), (1, "^", "tab:blue")):
        sel = labels == d
        ax.scatter(points[sel, 0], points[sel, 1], s=12, marker=marker,
                   color=color, alpha=0.6, label=f"domain {d}")
    if centroids is not None:
        ax.scatter(centroids[:, 0], centroids[:, 1], s=120, marker="*",
                   color="black", label="centroids")
    if title:
        ax.set_title(title)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(png_path)
    plt.close(fig)
