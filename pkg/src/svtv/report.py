"""Results table and figure rendering for the harness.

The evaluate stage emits one tab-separated table plus matplotlib figures
next to it.  Figures are written through the Agg backend with metadata
stripped so identical runs produce identical bytes.
"""

from __future__ import annotations

import math
import os

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

RESULTS_COLUMNS = ("image", "variant", "fidelity", "isnr_db", "bsnr_db")
_PNG_META = {"Software": None}


def format_db(value: float) -> str:
    """Fixed-width dB formatting with explicit sentinels."""
    if math.isnan(value):
        return "undef"
    if math.isinf(value):
        return "inf" if value > 0 else "-inf"
    return f"{value:.4f}"


def write_results_table(path: str | os.PathLike, rows: list[dict]) -> None:
    """Tab-separated results, one row per (image, variant), fixed column order."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\t".join(RESULTS_COLUMNS) + "\n")
        for row in rows:
            fh.write("\t".join([
                str(row["image"]),
                str(row["variant"]),
                str(row["fidelity"]),
                format_db(row["isnr_db"]),
                format_db(row["bsnr_db"]),
            ]) + "\n")


def render_isnr_figure(path: str | os.PathLike, labels: list[str],
                       isnr_values: list[float]) -> None:
    """Bar chart of ISNR per variant."""
    fig, ax = plt.subplots(figsize=(6.0, 3.5))
    finite = [0.0 if not math.isfinite(v) else v for v in isnr_values]
    ax.bar(range(len(labels)), finite, color="steelblue")
    ax.set_xticks(range(len(labels)))
    ax.set_xticklabels(labels, rotation=20, ha="right")
    ax.set_ylabel("ISNR [dB]")
    ax.set_title("Restoration improvement by variant")
    ax.grid(axis="y", alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)


def render_convergence_figure(path: str | os.PathLike,
                              traces: dict[str, list[float]]) -> None:
    """Relative-change trace per variant, log scale."""
    fig, ax = plt.subplots(figsize=(6.0, 3.5))
    plotted = False
    for label, trace in traces.items():
        if trace:
            ax.semilogy(range(1, len(trace) + 1), trace, label=label)
            plotted = True
    ax.set_xlabel("iteration")
    ax.set_ylabel("relative change")
    ax.set_title("Convergence")
    ax.grid(True, which="both", alpha=0.3)
    if plotted:
        ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, metadata=_PNG_META)
    plt.close(fig)
