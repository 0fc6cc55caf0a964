"""Corruption detection for electric load curves.

The library models a household as a panel of appliances with known power
ranges and a bound on how many can switch per timeslot.  Observed load values
that no admissible appliance schedule can explain are flagged as corrupted.
"""

__version__ = "0.1.0"

from .baseline import BaselineConfig, SeriesTooShortError, detect_rolling_mad
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
from .evaluate import (
    Confusion,
    ConsecutiveSpec,
    ExperimentRun,
    ExperimentScenario,
    MetricsRow,
    confusion,
    mean_defined,
    perturb_ranges,
    f_measure,
    precision_recall_f,
    run_experiment,
    run_scenario_seed,
    state_distance,
)
from .fileio import (
    FileFormatError,
    read_panel,
    read_report,
    read_series,
    read_states,
    read_truth,
    write_baseline_report,
    write_manifest,
    write_metrics,
    write_panel,
    write_report,
    write_series,
    write_states,
    write_truth,
)
from .model import (
    AppliancePanel,
    ApplianceProfile,
    DegenerateUnionError,
    DimensionMismatchError,
    LoadSeries,
    StateVector,
    iter_states,
    min_window_size,
    neighbor_count,
    overlap_index,
    state_bounds,
    to_power,
)
from .oracle import (
    BudgetExceededError,
    GlobalSolution,
    OracleLimits,
    count_tree_paths,
    solve_global,
)
from .solver import (
    DEFAULT_ZERO_TOLERANCE_W,
    DetectionReport,
    SolverConfig,
    WindowSolution,
    committed_objective,
    detect,
    enumerate_transitions,
    minimal_slack,
    solve_window,
)

__all__ = [
    "__version__",
    "ApplianceProfile",
    "AppliancePanel",
    "LoadSeries",
    "StateVector",
    "DimensionMismatchError",
    "DegenerateUnionError",
    "state_bounds",
    "to_power",
    "overlap_index",
    "min_window_size",
    "neighbor_count",
    "iter_states",
    "minimal_slack",
    "enumerate_transitions",
    "solve_window",
    "committed_objective",
    "detect",
    "SolverConfig",
    "DetectionReport",
    "WindowSolution",
    "DEFAULT_ZERO_TOLERANCE_W",
    "solve_global",
    "count_tree_paths",
    "OracleLimits",
    "GlobalSolution",
    "BudgetExceededError",
    "GenParams",
    "CorruptionParams",
    "GroundTruth",
    "gen_panel",
    "simulate",
    "inject_random",
    "inject_consecutive",
    "random_initial_state",
    "equilibrium_initial_state",
    "BaselineConfig",
    "SeriesTooShortError",
    "detect_rolling_mad",
    "Confusion",
    "confusion",
    "f_measure",
    "precision_recall_f",
    "state_distance",
    "perturb_ranges",
    "ConsecutiveSpec",
    "ExperimentScenario",
    "ExperimentRun",
    "MetricsRow",
    "run_experiment",
    "run_scenario_seed",
    "mean_defined",
    "FileFormatError",
    "read_panel",
    "write_panel",
    "read_series",
    "write_series",
    "read_report",
    "write_report",
    "write_baseline_report",
    "read_truth",
    "write_truth",
    "read_states",
    "write_states",
    "write_metrics",
    "write_manifest",
]
