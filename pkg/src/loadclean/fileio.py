"""On-disk formats: panel/report/truth JSON, series/metrics CSV, manifests.

All writers are deterministic (fixed key order, repr floats), so re-running
a command on the same inputs produces byte-identical files; the run manifest
is the single exception, carrying a wall-clock timestamp.

Timeslot indices inside JSON files are 1-based like the domain model; the
series CSV ``index`` column is 0-based (slot k lives on row index k-1).
"""

from __future__ import annotations

import csv
import json
import os
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Iterable, Mapping, Sequence

from .datagen import GroundTruth
from .evaluate import MetricsRow
from .model import AppliancePanel, ApplianceProfile, LoadSeries, StateVector
from .solver import DetectionReport

SERIES_HEADER = ["index", "watt_hours"]
METRICS_HEADER = [
    "scenario",
    "seed",
    "method",
    "delta",
    "w",
    "tp",
    "fp",
    "tn",
    "fn",
    "precision",
    "recall",
    "f_measure",
    "runtime_ms",
]
UNDEFINED = "undefined"

PathLike = str | os.PathLike


class FileFormatError(ValueError):
    """An input file does not match its expected schema."""


def _load_json(path: PathLike) -> Any:
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise FileFormatError(f"{path}: not valid JSON ({exc})") from exc


def _dump_json(obj: Any, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def _expect(cond: bool, path: PathLike, message: str) -> None:
    if not cond:
        raise FileFormatError(f"{path}: {message}")


# ---------------------------------------------------------------- panel JSON


def write_panel(panel: AppliancePanel, path: PathLike) -> None:
    _dump_json(
        {
            "sampling_per_hour": panel.sampling_per_hour,
            "delta": panel.switch_budget,
            "appliances": [
                {"name": a.name, "lower_w": a.lower_w, "upper_w": a.upper_w}
                for a in panel.appliances
            ],
        },
        path,
    )


def read_panel(path: PathLike) -> AppliancePanel:
    data = _load_json(path)
    _expect(isinstance(data, dict), path, "panel file must be a JSON object")
    for key in ("sampling_per_hour", "delta", "appliances"):
        _expect(key in data, path, f"missing key {key!r}")
    raw = data["appliances"]
    _expect(isinstance(raw, list) and raw, path, "'appliances' must be a nonempty list")
    appliances = []
    for i, item in enumerate(raw):
        _expect(isinstance(item, dict), path, f"appliance {i} must be an object")
        for key in ("name", "lower_w", "upper_w"):
            _expect(key in item, path, f"appliance {i} missing key {key!r}")
        try:
            appliances.append(
                ApplianceProfile(
                    name=str(item["name"]),
                    lower_w=float(item["lower_w"]),
                    upper_w=float(item["upper_w"]),
                )
            )
        except (TypeError, ValueError) as exc:
            raise FileFormatError(f"{path}: appliance {i}: {exc}") from exc
    try:
        return AppliancePanel(
            appliances=tuple(appliances),
            sampling_per_hour=float(data["sampling_per_hour"]),
            switch_budget=int(data["delta"]),
        )
    except (TypeError, ValueError) as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------- series CSV


def write_series(series: LoadSeries, path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(SERIES_HEADER)
        for i, v in enumerate(series.values):
            writer.writerow([i, repr(v)])


def read_series(path: PathLike) -> LoadSeries:
    values: list[float] = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        _expect(
            header is not None and [c.strip() for c in header] == SERIES_HEADER,
            path,
            f"line 1: header must be {','.join(SERIES_HEADER)!r}, got {header!r}",
        )
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            _expect(len(row) == 2, path, f"line {lineno}: expected 2 columns, got {len(row)}")
            try:
                idx = int(row[0])
                val = float(row[1])
            except ValueError as exc:
                raise FileFormatError(f"{path}: line {lineno}: {exc}") from exc
            _expect(
                idx == len(values),
                path,
                f"line {lineno}: index {idx} out of order (expected {len(values)})",
            )
            values.append(val)
    try:
        return LoadSeries(tuple(values))
    except ValueError as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------- report JSON


def write_report(report: DetectionReport, path: PathLike) -> None:
    _dump_json(
        {
            "n": report.n,
            "epsilon_w": report.zero_tolerance_w,
            "corrupted": list(report.corrupted_indices),
            "virtual_power_w": list(report.virtual_power_w),
            "states": [s.to_bitstring() for s in report.committed_states],
            "bounds_w": [[lo, hi] for lo, hi in report.estimated_bounds_w],
        },
        path,
    )


def read_report(path: PathLike) -> DetectionReport:
    data = _load_json(path)
    _expect(isinstance(data, dict), path, "report file must be a JSON object")
    for key in ("n", "epsilon_w", "corrupted", "virtual_power_w", "states", "bounds_w"):
        _expect(key in data, path, f"missing key {key!r}")
    n = int(data["n"])
    for key in ("virtual_power_w", "states", "bounds_w"):
        _expect(len(data[key]) == n, path, f"{key!r} must have n={n} entries")
    try:
        return DetectionReport(
            virtual_power_w=tuple(float(v) for v in data["virtual_power_w"]),
            corrupted_indices=tuple(int(i) for i in data["corrupted"]),
            committed_states=tuple(
                StateVector.from_bitstring(s) for s in data["states"]
            ),
            estimated_bounds_w=tuple(
                (float(b[0]), float(b[1])) for b in data["bounds_w"]
            ),
            zero_tolerance_w=float(data["epsilon_w"]),
        )
    except (TypeError, ValueError, IndexError) as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def write_baseline_report(n: int, flagged: Sequence[int], path: PathLike) -> None:
    """Baseline runs have no states, bounds, or virtual power to report."""
    _dump_json({"n": n, "method": "rolling_mad", "corrupted": list(flagged)}, path)


# ----------------------------------------------------------- truth and states


def write_truth(truth: GroundTruth, path: PathLike) -> None:
    _dump_json(
        {
            "corrupted": list(truth.corrupted_indices),
            "originals_wh": list(truth.original_values_wh),
        },
        path,
    )


def read_truth(path: PathLike) -> GroundTruth:
    data = _load_json(path)
    _expect(isinstance(data, dict), path, "truth file must be a JSON object")
    for key in ("corrupted", "originals_wh"):
        _expect(key in data, path, f"missing key {key!r}")
    try:
        return GroundTruth(
            corrupted_indices=tuple(int(i) for i in data["corrupted"]),
            original_values_wh=tuple(float(v) for v in data["originals_wh"]),
        )
    except (TypeError, ValueError) as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


def write_states(states: Sequence[StateVector], path: PathLike) -> None:
    _dump_json({"states": [s.to_bitstring() for s in states]}, path)


def read_states(path: PathLike) -> tuple[StateVector, ...]:
    data = _load_json(path)
    _expect(
        isinstance(data, dict) and "states" in data, path, "missing key 'states'"
    )
    try:
        return tuple(StateVector.from_bitstring(s) for s in data["states"])
    except (TypeError, ValueError) as exc:
        raise FileFormatError(f"{path}: {exc}") from exc


# ---------------------------------------------------------------- metrics CSV


def _metric_cell(value: float | int | None) -> str:
    if value is None:
        return UNDEFINED
    return repr(value) if isinstance(value, float) else str(value)


def write_metrics(rows: Iterable[MetricsRow], path: PathLike) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(METRICS_HEADER)
        for row in rows:
            writer.writerow(
                [
                    row.scenario,
                    row.seed,
                    row.method,
                    "" if row.delta is None else row.delta,
                    "" if row.w is None else row.w,
                    row.tp,
                    row.fp,
                    row.tn,
                    row.fn,
                    _metric_cell(row.precision),
                    _metric_cell(row.recall),
                    _metric_cell(row.f_measure),
                    "" if row.runtime_ms is None else repr(row.runtime_ms),
                ]
            )


# ------------------------------------------------------------------ manifest


def write_manifest(
    path: PathLike,
    command: str,
    params: Mapping[str, Any],
    inputs: Sequence[str],
    outputs: Sequence[str],
    seed: int | None,
) -> None:
    """Reproducibility record written alongside every command's outputs."""
    from . import __version__

    _dump_json(
        {
            "command": command,
            "version": __version__,
            "seed": seed,
            "params": dict(params),
            "inputs": [str(p) for p in inputs],
            "outputs": [str(p) for p in outputs],
            "created_utc": datetime.now(timezone.utc).isoformat(),
        },
        path,
    )


def manifest_path_for(output: PathLike) -> Path:
    """manifest sits next to its primary output: report.json ->
    report.manifest.json; directories get DIR/manifest.json."""
    p = Path(output)
    if p.is_dir():
        return p / "manifest.json"
    return p.with_name(p.stem + ".manifest.json")
