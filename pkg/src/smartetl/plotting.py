"""Report figures (PNG, non-interactive backend)."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

# no software/date stamps so reruns produce identical files
_PNG_META = {"Software": None}


def _save(fig, path) -> None:
    fig.tight_layout()
    fig.savefig(path, dpi=100, metadata=_PNG_META)
    plt.close(fig)


def needle_quartiles(report, path) -> None:
    qs = [1, 2, 3, 4]
    rates = [report.quartiles[q]["error_rate"] for q in qs]
    counts = [report.quartiles[q]["trials"] for q in qs]
    fig, ax = plt.subplots(figsize=(5, 3.2))
    bars = ax.bar([f"Q{q}" for q in qs], rates, color="#4c72b0")
    for bar, n in zip(bars, counts):
        ax.annotate(f"n={n}", (bar.get_x() + bar.get_width() / 2, bar.get_height()),
                    ha="center", va="bottom", fontsize=8)
    ax.set_ylim(0, 1.1)
    ax.set_ylabel("error rate")
    ax.set_xlabel("needle position (quartile of prompt)")
    _save(fig, path)


def needle_buckets(report, path) -> None:
    labels = [f"{b['start'] // 1000}k" for b in report.buckets]
    errors = [b["errors"] for b in report.buckets]
    ok = [b["trials"] - b["errors"] for b in report.buckets]
    x = np.arange(len(labels))
    fig, ax = plt.subplots(figsize=(max(4, 0.5 * len(labels) + 2), 3.2))
    ax.bar(x, ok, color="#55a868", label="found")
    ax.bar(x, errors, bottom=ok, color="#c44e52", label="error")
    ax.set_xticks(x, labels, rotation=45, ha="right", fontsize=8)
    ax.set_xlabel("prompt size bucket (chars)")
    ax.set_ylabel("trials")
    ax.legend(fontsize=8)
    _save(fig, path)


def eval_domains(reports, path) -> None:
    """Grouped P/R/F1 bars per domain, one panel per report."""
    fig, axes = plt.subplots(1, len(reports), figsize=(4.2 * len(reports), 3.4), squeeze=False)
    for ax, rep in zip(axes[0], reports):
        names = [d.domain.replace("(Part of) the ", "") for d in rep.domains]
        x = np.arange(len(names))
        for i, (attr, color) in enumerate((("precision", "#4c72b0"), ("recall", "#dd8452"), ("f1", "#55a868"))):
            ax.bar(x + (i - 1) * 0.27, [getattr(d, attr) for d in rep.domains], 0.27, label=attr, color=color)
        ax.set_xticks(x, names, fontsize=7)
        ax.set_ylim(0, 1.05)
        ax.set_title(f"{rep.run_label} {rep.dataset_label}: total F1 {rep.total_f1:.2f}", fontsize=9)
    axes[0][0].legend(fontsize=7)
    _save(fig, path)
