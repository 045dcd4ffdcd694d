"""Matplotlib renderings of the delimited reports.

Every report-producing CLI command can drop a PNG next to its CSV: eCDF
overlays and similarity histograms for distribution comparisons, KS
curves per retained-variance level for sweeps, and metric bars for
linkage scenarios.  The Agg backend keeps rendering headless and
deterministic.
"""

from __future__ import annotations

import math

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from .metrics import ecdf_points

_COLORS = ("#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b")


def _finish(fig, path):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)


def save_similarity_comparison(samples: dict, path, title: str = "") -> None:
    """Histogram + eCDF overlay for labeled similarity samples.

    ``samples`` maps a legend label to a 1-D array of cosine similarities.
    """
    fig, (ax_hist, ax_cdf) = plt.subplots(1, 2, figsize=(9.0, 3.6))
    for color, (label, values) in zip(_COLORS, samples.items()):
        values = np.asarray(values, dtype=np.float64)
        ax_hist.hist(values, bins=60, density=True, histtype="step",
                     color=color, label=label)
        xs, heights = ecdf_points(values)
        ax_cdf.step(xs, heights, where="post", color=color, label=label)
    ax_hist.set_xlabel("cosine similarity")
    ax_hist.set_ylabel("density")
    ax_cdf.set_xlabel("cosine similarity")
    ax_cdf.set_ylabel("eCDF")
    ax_cdf.set_ylim(0.0, 1.02)
    ax_cdf.legend(fontsize=8, loc="lower right")
    if title:
        fig.suptitle(title)
    _finish(fig, path)


def save_sweep_figure(cells, path, title: str = "") -> None:
    """KS statistic against component count, one line per (gender, variance)."""
    fig, ax = plt.subplots(figsize=(6.4, 4.0))
    genders = sorted({c.gender for c in cells})
    variances = sorted({c.retained_variance_target for c in cells})
    styles = {"male": "-", "female": "--", "unspecified": ":"}
    idx = 0
    for gender in genders:
        for variance in variances:
            points = sorted(
                (c.n_components, c.ks_statistic)
                for c in cells
                if c.gender == gender and c.retained_variance_target == variance
                and c.error is None and not math.isnan(c.ks_statistic)
            )
            if not points:
                continue
            xs, ys = zip(*points)
            ax.plot(xs, ys, styles.get(gender, "-"), marker="o", ms=3,
                    color=_COLORS[idx % len(_COLORS)],
                    label=f"{gender}, {variance:.0%} variance")
            idx += 1
    ax.set_xlabel("GMM components")
    ax.set_ylabel("KS statistic")
    ax.set_xscale("log")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    _finish(fig, path)


def save_metrics_figure(rows, path, title: str = "") -> None:
    """Grouped bars of EER and Cllr_min per (scenario, strategy, gender) row.

    ``rows`` are dicts with scenario/strategy/gender/eer/cllr_min keys.
    """
    labels = [f"{r['scenario']}/{r['strategy']}/{r['gender']}" for r in rows]
    eers = [r["eer"] for r in rows]
    cllr_mins = [r["cllr_min"] for r in rows]
    positions = np.arange(len(rows))
    width = 0.38
    fig, ax = plt.subplots(figsize=(max(6.4, 1.1 * len(rows)), 4.0))
    ax.bar(positions - width / 2, eers, width, label="EER", color=_COLORS[0])
    ax.bar(positions + width / 2, cllr_mins, width, label="Cllr_min", color=_COLORS[1])
    ax.set_xticks(positions)
    ax.set_xticklabels(labels, rotation=30, ha="right", fontsize=8)
    ax.set_ylabel("metric value")
    ax.axhline(0.5, color="gray", lw=0.8, ls=":")
    ax.legend(fontsize=8)
    if title:
        ax.set_title(title)
    _finish(fig, path)
