"""Appliance-oblivious reference detector: rolling median absolute deviation.

Flags slot i when its value sits more than ``threshold`` scaled-MAD units
from the median of the surrounding window.  Windows truncate at the series
boundaries.  A zero-MAD window (more than half its values identical) flags
only values that differ from the median at all, which keeps the detector
exactly equivariant under positive scaling and constant shifts.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .model import LoadSeries

# Consistency factor making the MAD estimate sigma for Gaussian data.
MAD_SCALE = 1.4826


class SeriesTooShortError(ValueError):
    """The series cannot hold even one full rolling window."""


@dataclass(frozen=True)
class BaselineConfig:
    half_window: int = 5
    threshold: float = 3.0

    def __post_init__(self) -> None:
        if self.half_window < 1:
            raise ValueError(f"half_window must be >= 1, got {self.half_window}")
        if self.threshold <= 0:
            raise ValueError(f"threshold must be > 0, got {self.threshold}")


def detect_rolling_mad(series: LoadSeries, config: BaselineConfig) -> tuple[int, ...]:
    """Flagged timeslots (1-based, ascending) under the rolling-MAD rule."""
    n = series.n
    h = config.half_window
    if n < 2 * h + 1:
        raise SeriesTooShortError(
            f"series has {n} slots but the rolling window needs {2 * h + 1}"
        )
    values = np.asarray(series.values)
    flagged: list[int] = []
    for i in range(n):
        window = values[max(0, i - h) : min(n, i + h + 1)]
        med = float(np.median(window))
        mad = float(np.median(np.abs(window - med)))
        dev = abs(float(values[i]) - med)
        if mad == 0.0:
            if dev > 0.0:
                flagged.append(i + 1)
        elif dev > config.threshold * MAD_SCALE * mad:
            flagged.append(i + 1)
    return tuple(flagged)
