"""Figure rendering for detection reports.

Optional presentation layer: the CLI's report path can render these next to
its delimited outputs.  Figures are written straight to files (Agg backend,
no display required).
"""

from __future__ import annotations

from pathlib import Path
from typing import Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from .model import AppliancePanel, LoadSeries, to_power  # noqa: E402
from .solver import DetectionReport  # noqa: E402

_FLAG_COLOR = "#c4261d"
_TRUTH_COLOR = "#1f6f43"
_BOUND_COLOR = "#4878a8"


def save_detection_figure(
    series: LoadSeries,
    panel: AppliancePanel,
    report: DetectionReport,
    path: str | Path,
    truth_indices: Sequence[int] | None = None,
    title: str | None = None,
) -> Path:
    """Observed power with the committed-state bounds band and flagged slots,
    over a second panel tracing the virtual power."""
    powers = to_power(series, panel)
    slots = range(1, len(powers) + 1)
    lows = [b[0] for b in report.estimated_bounds_w]
    highs = [b[1] for b in report.estimated_bounds_w]

    fig, (ax_load, ax_virtual) = plt.subplots(
        2, 1, figsize=(10, 6), sharex=True, height_ratios=[2, 1]
    )
    ax_load.fill_between(
        slots, lows, highs, color=_BOUND_COLOR, alpha=0.25, linewidth=0,
        label="state bounds",
    )
    ax_load.plot(slots, powers, color="black", linewidth=0.8, label="observed power")
    if truth_indices:
        ax_load.plot(
            list(truth_indices),
            [powers[i - 1] for i in truth_indices],
            linestyle="none",
            marker="o",
            markersize=5,
            markerfacecolor="none",
            markeredgecolor=_TRUTH_COLOR,
            label="truth corrupted",
        )
    if report.corrupted_indices:
        ax_load.plot(
            list(report.corrupted_indices),
            [powers[i - 1] for i in report.corrupted_indices],
            linestyle="none",
            marker="x",
            markersize=5,
            color=_FLAG_COLOR,
            label="flagged",
        )
    ax_load.set_ylabel("power [W]")
    ax_load.legend(loc="upper right", fontsize=8)
    if title:
        ax_load.set_title(title)

    ax_virtual.axhline(0.0, color="gray", linewidth=0.6)
    ax_virtual.plot(slots, report.virtual_power_w, color=_FLAG_COLOR, linewidth=0.8)
    ax_virtual.set_ylabel("virtual power [W]")
    ax_virtual.set_xlabel("timeslot")

    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out


def save_state_distance_figure(
    distances: Sequence[int], path: str | Path, title: str | None = None
) -> Path:
    """Per-slot Hamming distance between estimated and true states."""
    fig, ax = plt.subplots(figsize=(10, 3.2))
    slots = range(1, len(distances) + 1)
    ax.plot(slots, distances, color=_BOUND_COLOR, linewidth=0.9)
    if distances:
        mean = sum(distances) / len(distances)
        ax.axhline(mean, color=_FLAG_COLOR, linewidth=0.8, linestyle="--")
        ax.annotate(
            f"mean {mean:.1f}",
            xy=(0.99, 0.95),
            xycoords="axes fraction",
            ha="right",
            va="top",
            fontsize=8,
            color=_FLAG_COLOR,
        )
    ax.set_xlabel("timeslot")
    ax.set_ylabel("state distance")
    if title:
        ax.set_title(title)
    fig.tight_layout()
    out = Path(path)
    fig.savefig(out, dpi=150)
    plt.close(fig)
    return out
