"""Static accuracy-vs-cost figures rendered next to the delimited output."""

from __future__ import annotations

import csv
from collections import defaultdict
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

_FIG_KW = dict(figsize=(5.0, 3.4), dpi=140)


def _read_rows(curve_path):
    with open(curve_path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    series = defaultdict(list)
    for row in rows:
        key = f"{row['algorithm']} (alpha={row['alpha']})"
        series[key].append(row)
    return series


def _plot(series, x_field, x_label, out_path):
    fig, ax = plt.subplots(**_FIG_KW)
    for label, rows in series.items():
        xs = [float(r[x_field]) for r in rows]
        ys = [100.0 * float(r["accuracy"]) for r in rows]
        marker = "o" if len(rows) == 1 else "."
        ax.plot(xs, ys, marker=marker, label=label)
    ax.set_xlabel(x_label)
    ax.set_ylabel("test accuracy (%)")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=7)
    fig.tight_layout()
    fig.savefig(out_path)
    plt.close(fig)


def render_curve_figures(curve_path, outdir) -> dict:
    """Accuracy vs cumulative bytes and vs wall seconds, one line per
    (algorithm, alpha) series found in the CSV."""
    outdir = Path(outdir)
    series = _read_rows(curve_path)
    bytes_fig = outdir / "accuracy_vs_bytes.png"
    secs_fig = outdir / "accuracy_vs_seconds.png"
    _plot(series, "cum_bytes", "cumulative bytes", bytes_fig)
    _plot(series, "cum_seconds", "cumulative seconds", secs_fig)
    return {"accuracy_vs_bytes": bytes_fig, "accuracy_vs_seconds": secs_fig}
