"""Scoring and experiment drivers for corruption detectors.

Precision/recall/F are reported as ``None`` when their denominator is zero
(nothing detected, nothing corrupted, or both all-zero); they are never
silently coerced to 0, and the CSV writer renders them as ``undefined``.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace
from typing import Iterable, Sequence

from .baseline import BaselineConfig, detect_rolling_mad
from .datagen import (
    CorruptionParams,
    GenParams,
    GroundTruth,
    equilibrium_initial_state,
    gen_panel,
    inject_consecutive,
    inject_random,
    random_initial_state,
    simulate,
)
from .model import (
    AppliancePanel,
    ApplianceProfile,
    DimensionMismatchError,
    LoadSeries,
    StateVector,
)
from .solver import DEFAULT_ZERO_TOLERANCE_W, DetectionReport, SolverConfig, detect


@dataclass(frozen=True)
class Confusion:
    tp: int
    fp: int
    tn: int
    fn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.tn, self.fn) < 0:
            raise ValueError("confusion counts must be >= 0")

    @property
    def n(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


def confusion(truth: GroundTruth, detected: Iterable[int], n: int) -> Confusion:
    """Count slot-level agreement between truth labels and detected flags."""
    truth_set = set(truth.corrupted_indices)
    detected_set = {int(i) for i in detected}
    for name, idx in (("truth", truth_set), ("detected", detected_set)):
        bad = [i for i in idx if not (1 <= i <= n)]
        if bad:
            raise ValueError(f"{name} indices outside [1, {n}]: {sorted(bad)[:5]}")
    tp = len(truth_set & detected_set)
    fp = len(detected_set - truth_set)
    fn = len(truth_set - detected_set)
    return Confusion(tp=tp, fp=fp, tn=n - tp - fp - fn, fn=fn)


def f_measure(precision: float, recall: float) -> float | None:
    """Harmonic mean of precision and recall; None when both are zero."""
    if precision + recall <= 0:
        return None
    return 2 * precision * recall / (precision + recall)


def precision_recall_f(
    counts: Confusion,
) -> tuple[float | None, float | None, float | None]:
    """(precision, recall, F-measure); a metric whose denominator is zero is
    returned as None rather than 0 or NaN."""
    precision = counts.tp / (counts.tp + counts.fp) if counts.tp + counts.fp else None
    recall = counts.tp / (counts.tp + counts.fn) if counts.tp + counts.fn else None
    f = None
    if precision is not None and recall is not None:
        f = f_measure(precision, recall)
    return precision, recall, f


def state_distance(
    estimated: Sequence[StateVector], truth: Sequence[StateVector]
) -> list[int]:
    """Per-slot Hamming distance between estimated and true states."""
    if len(estimated) != len(truth):
        raise DimensionMismatchError(
            f"state sequences differ in length: {len(estimated)} vs {len(truth)}"
        )
    return [e.hamming(t) for e, t in zip(estimated, truth)]


def perturb_ranges(
    panel: AppliancePanel,
    widen_pct: float = 0.0,
    shift_pct: float = 0.0,
    shift_upper_pct: float | None = None,
) -> AppliancePanel:
    """Misspecify appliance ranges for robustness experiments.

    ``widen_pct`` grows each range's width about its fixed center (10% turns
    [100, 200] into [95, 205]).  ``shift_pct`` scales the lower bound and,
    by default, the upper bound by the same factor (5% turns [100, 200] into
    [105, 210]); pass ``shift_upper_pct`` to scale the upper bound by a
    different factor.  Lower bounds clamp at zero.
    """
    if shift_upper_pct is None:
        shift_upper_pct = shift_pct
    out: list[ApplianceProfile] = []
    for a in panel.appliances:
        center = (a.lower_w + a.upper_w) / 2.0
        half = (a.upper_w - a.lower_w) / 2.0 * (1.0 + widen_pct)
        lo, hi = center - half, center + half
        lo *= 1.0 + shift_pct
        hi *= 1.0 + shift_upper_pct
        out.append(ApplianceProfile(name=a.name, lower_w=max(lo, 0.0), upper_w=hi))
    return AppliancePanel(
        appliances=tuple(out),
        sampling_per_hour=panel.sampling_per_hour,
        switch_budget=panel.switch_budget,
    )


@dataclass(frozen=True)
class ConsecutiveSpec:
    """Constant-run corruption: slots [start, start+length) set to value_wh."""

    start: int
    length: int
    value_wh: float = 0.0


@dataclass(frozen=True)
class ExperimentScenario:
    """One synthetic experiment: generation, corruption, detection settings.

    ``delta`` is the detector's switch budget (set on the generated panel);
    ``widen_pct``/``shift_pct`` perturb the panel the detector sees while the
    data stays generated from the true one; ``gen_initial`` picks the state
    the walk starts from ("zeros" for a cold start, "random" for an
    equilibrium start); ``randomize_initial_state`` hands the detector a
    random initial state instead of the true one.
    """

    name: str
    gen: GenParams
    delta: int
    window_size: int = 1
    corruption: CorruptionParams | None = None
    consecutive: ConsecutiveSpec | None = None
    widen_pct: float = 0.0
    shift_pct: float = 0.0
    gen_initial: str = "zeros"
    randomize_initial_state: bool = False
    run_baseline: bool = True
    baseline: BaselineConfig = BaselineConfig()
    zero_tolerance: float = DEFAULT_ZERO_TOLERANCE_W

    def __post_init__(self) -> None:
        if self.gen_initial not in ("zeros", "random"):
            raise ValueError(f"gen_initial must be 'zeros' or 'random', got {self.gen_initial!r}")


@dataclass(frozen=True)
class MetricsRow:
    """One scored detector run, shaped like a metrics CSV row."""

    scenario: str
    seed: int
    method: str
    delta: int | None
    w: int | None
    tp: int
    fp: int
    tn: int
    fn: int
    precision: float | None
    recall: float | None
    f_measure: float | None
    runtime_ms: float | None


@dataclass(frozen=True)
class ExperimentRun:
    """Everything one seed produced, for tests and figure rendering."""

    seed: int
    panel: AppliancePanel
    detect_panel: AppliancePanel
    series: LoadSeries
    truth: GroundTruth
    report: DetectionReport
    baseline_flags: tuple[int, ...] | None
    rows: tuple[MetricsRow, ...]


def run_scenario_seed(scenario: ExperimentScenario, seed: int) -> ExperimentRun:
    """Generate, corrupt, detect, and score one seed of a scenario."""
    gp = replace(scenario.gen, seed=seed)
    panel = gen_panel(gp, switch_budget=scenario.delta)
    if scenario.gen_initial == "random":
        true_initial = equilibrium_initial_state(panel.m, seed)
    else:
        true_initial = StateVector.zeros(panel.m)
    series, states = simulate(panel, gp, true_initial)
    if scenario.corruption is not None and scenario.consecutive is not None:
        raise ValueError("scenario cannot use both corruption modes at once")
    if scenario.corruption is not None:
        cp = replace(scenario.corruption, seed=seed)
        series, truth = inject_random(series, cp, true_states=states)
    elif scenario.consecutive is not None:
        spec = scenario.consecutive
        series, truth = inject_consecutive(
            series, spec.start, spec.length, spec.value_wh, true_states=states
        )
    else:
        truth = GroundTruth((), (), true_states=states)

    detect_panel = panel
    if scenario.widen_pct or scenario.shift_pct:
        detect_panel = perturb_ranges(panel, scenario.widen_pct, scenario.shift_pct)
    initial = (
        random_initial_state(panel.m, seed)
        if scenario.randomize_initial_state
        else true_initial
    )
    config = SolverConfig(
        initial_state=initial,
        window_size=scenario.window_size,
        zero_tolerance=scenario.zero_tolerance,
    )
    t0 = time.perf_counter()
    report = detect(series, detect_panel, config)
    sloa_ms = (time.perf_counter() - t0) * 1000.0

    rows: list[MetricsRow] = []
    c = confusion(truth, report.corrupted_indices, series.n)
    p, r, f = precision_recall_f(c)
    rows.append(
        MetricsRow(
            scenario=scenario.name,
            seed=seed,
            method="sloa",
            delta=scenario.delta,
            w=scenario.window_size,
            tp=c.tp,
            fp=c.fp,
            tn=c.tn,
            fn=c.fn,
            precision=p,
            recall=r,
            f_measure=f,
            runtime_ms=sloa_ms,
        )
    )
    baseline_flags: tuple[int, ...] | None = None
    if scenario.run_baseline:
        t0 = time.perf_counter()
        baseline_flags = detect_rolling_mad(series, scenario.baseline)
        base_ms = (time.perf_counter() - t0) * 1000.0
        cb = confusion(truth, baseline_flags, series.n)
        pb, rb, fb = precision_recall_f(cb)
        rows.append(
            MetricsRow(
                scenario=scenario.name,
                seed=seed,
                method="rolling_mad",
                delta=scenario.delta,
                w=scenario.window_size,
                tp=cb.tp,
                fp=cb.fp,
                tn=cb.tn,
                fn=cb.fn,
                precision=pb,
                recall=rb,
                f_measure=fb,
                runtime_ms=base_ms,
            )
        )
    return ExperimentRun(
        seed=seed,
        panel=panel,
        detect_panel=detect_panel,
        series=series,
        truth=truth,
        report=report,
        baseline_flags=baseline_flags,
        rows=tuple(rows),
    )


def run_experiment(
    scenario: ExperimentScenario, seeds: Sequence[int]
) -> list[MetricsRow]:
    """Score a scenario over seeds; rows come back in seed order, detector
    before baseline within each seed."""
    rows: list[MetricsRow] = []
    for seed in seeds:
        rows.extend(run_scenario_seed(scenario, seed).rows)
    return rows


def mean_defined(values: Iterable[float | None]) -> float | None:
    """Mean over the defined entries; None when every entry is undefined."""
    defined = [v for v in values if v is not None]
    if not defined:
        return None
    return sum(defined) / len(defined)
