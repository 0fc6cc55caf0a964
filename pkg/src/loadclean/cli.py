"""Command-line toolkit: generate, corrupt, detect, oracle, eval.

Every command writes a manifest next to its outputs recording the resolved
parameters, inputs, outputs, and seed.  Exit codes: 0 success, 1 domain or
schema errors, 2 usage or oracle-limit errors, 3 I/O errors.  Outputs are
deterministic byte-for-byte except the manifest timestamp.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path
from typing import Any

from .baseline import BaselineConfig, detect_rolling_mad
from .datagen import (
    CorruptionParams,
    GenParams,
    equilibrium_initial_state,
    gen_panel,
    inject_consecutive,
    inject_random,
    simulate,
)
from .evaluate import confusion, precision_recall_f, MetricsRow
from .fileio import (
    FileFormatError,
    _dump_json,
    _load_json,
    manifest_path_for,
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
    DegenerateUnionError,
    LoadSeries,
    StateVector,
    min_window_size,
    overlap_index,
)
from .oracle import BudgetExceededError, OracleLimits, solve_global
from .solver import DEFAULT_ZERO_TOLERANCE_W, SolverConfig, detect


def _parse_initial_state(text: str | None, m: int) -> StateVector:
    if text is None:
        return StateVector.zeros(m)
    state = StateVector.from_bitstring(text)
    if state.m != m:
        raise ValueError(f"--s0 has {state.m} bits but the panel has {m} appliances")
    return state


def _parse_consecutive(text: str) -> tuple[int, int]:
    try:
        start_s, length_s = text.split(":", 1)
        return int(start_s), int(length_s)
    except ValueError as exc:
        raise ValueError(f"--consecutive expects START:LENGTH, got {text!r}") from exc


def cmd_generate(args: argparse.Namespace) -> int:
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    params = GenParams(
        m=args.m,
        p_min_w=args.pmin,
        p_max_w=args.pmax,
        range_ratio=args.r,
        switch_rate=args.switch_rate,
        samples_per_hour=3600.0 / args.interval_s,
        n_slots=args.slots,
        seed=args.seed,
    )
    panel = gen_panel(params, switch_budget=args.delta)
    if args.s0 == "random":
        initial = equilibrium_initial_state(panel.m, args.seed)
    else:
        initial = StateVector.zeros(panel.m)
    series, states = simulate(panel, params, initial)

    panel_path = out / "panel.json"
    series_path = out / "series.csv"
    truth_path = out / "truth.json"
    states_path = out / "states.json"
    write_panel(panel, panel_path)
    write_series(series, series_path)
    # Freshly generated data carries no corruption; labels start empty.
    from .datagen import GroundTruth

    write_truth(GroundTruth((), ()), truth_path)
    write_states(states, states_path)
    outputs = [panel_path, series_path, truth_path, states_path]
    write_manifest(
        manifest_path_for(out),
        command="generate",
        params={
            "m": args.m,
            "pmin": args.pmin,
            "pmax": args.pmax,
            "r": args.r,
            "lambda": args.switch_rate,
            "interval_s": args.interval_s,
            "samples_per_hour": params.samples_per_hour,
            "slots": args.slots,
            "delta": args.delta,
            "s0": initial.to_bitstring(),
        },
        inputs=[],
        outputs=[str(p) for p in outputs],
        seed=args.seed,
    )
    print(f"generated {series.n} slots for {panel.m} appliances into {out}")
    return 0


def cmd_corrupt(args: argparse.Namespace) -> int:
    series = read_series(args.series)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if (args.consecutive is None) == (not args.random):
        raise ValueError("choose exactly one of --random or --consecutive START:LENGTH")
    if args.random:
        params = CorruptionParams(
            mean_gap_slots=args.mu, max_value_wh=args.max_wh, seed=args.seed
        )
        corrupted, truth = inject_random(series, params)
        mode_params: dict[str, Any] = {
            "mode": "random",
            "mu": args.mu,
            "max_wh": args.max_wh,
        }
    else:
        start, length = _parse_consecutive(args.consecutive)
        corrupted, truth = inject_consecutive(series, start, length, args.value)
        mode_params = {
            "mode": "consecutive",
            "start": start,
            "length": length,
            "value_wh": args.value,
        }
    series_path = out / "series.csv"
    truth_path = out / "truth.json"
    write_series(corrupted, series_path)
    write_truth(truth, truth_path)
    write_manifest(
        manifest_path_for(out),
        command="corrupt",
        params=mode_params,
        inputs=[str(args.series)],
        outputs=[str(series_path), str(truth_path)],
        seed=args.seed if args.random else None,
    )
    print(f"corrupted {len(truth.corrupted_indices)} of {series.n} slots into {out}")
    return 0


def cmd_detect(args: argparse.Namespace) -> int:
    panel = read_panel(args.panel)
    if args.delta is not None:
        panel = replace(panel, switch_budget=args.delta)
    series = read_series(args.series)
    initial = _parse_initial_state(args.s0, panel.m)

    if args.baseline:
        config_note: dict[str, Any] = {
            "method": "rolling_mad",
            "half_window": args.half_window,
            "threshold": args.threshold,
        }
        flags = detect_rolling_mad(
            series, BaselineConfig(half_window=args.half_window, threshold=args.threshold)
        )
        write_baseline_report(series.n, flags, args.out)
        flagged_count = len(flags)
        report = None
    else:
        if args.w == "auto":
            w = min_window_size(panel)
            try:
                overlap = f"{overlap_index(panel):.4f}"
            except DegenerateUnionError:
                overlap = "undefined (degenerate ranges)"
            print(f"auto window: overlap index O={overlap}, w={w}", file=sys.stderr)
        else:
            w = int(args.w)
        config = SolverConfig(
            initial_state=initial,
            window_size=w,
            zero_tolerance=args.epsilon,
        )
        report = detect(series, panel, config)
        write_report(report, args.out)
        flagged_count = len(report.corrupted_indices)
        config_note = {
            "method": "sloa",
            "w": w,
            "delta": panel.switch_budget,
            "epsilon_w": args.epsilon,
            "s0": initial.to_bitstring(),
        }

    outputs = [str(args.out)]
    if args.figures and report is not None:
        from .plots import save_detection_figure

        fig_dir = Path(args.figures)
        fig_dir.mkdir(parents=True, exist_ok=True)
        truth_idx = None
        if args.truth:
            truth_idx = read_truth(args.truth).corrupted_indices
        fig = save_detection_figure(
            series,
            panel,
            report,
            fig_dir / (Path(args.out).stem + "_detection.png"),
            truth_indices=truth_idx,
        )
        outputs.append(str(fig))
    write_manifest(
        manifest_path_for(Path(args.out)),
        command="detect",
        params=config_note,
        inputs=[str(args.panel), str(args.series)],
        outputs=outputs,
        seed=None,
    )
    print(f"flagged {flagged_count} of {series.n} slots -> {args.out}")
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    panel = read_panel(args.panel)
    if args.delta is not None:
        panel = replace(panel, switch_budget=args.delta)
    series = read_series(args.series)
    initial = _parse_initial_state(args.s0, panel.m)
    limits = OracleLimits(
        max_n=args.max_n, max_m=args.max_m, max_states_explored=args.budget
    )
    solution = solve_global(series, panel, initial, limits)
    _dump_json(
        {
            "objective_w": solution.objective,
            "slacks_w": list(solution.slacks),
            "states": [s.to_bitstring() for s in solution.states],
            "states_explored": solution.states_explored,
        },
        args.out,
    )
    write_manifest(
        manifest_path_for(Path(args.out)),
        command="oracle",
        params={
            "max_n": args.max_n,
            "max_m": args.max_m,
            "budget": args.budget,
            "delta": panel.switch_budget,
            "s0": initial.to_bitstring(),
        },
        inputs=[str(args.panel), str(args.series)],
        outputs=[str(args.out)],
        seed=None,
    )
    print(
        f"oracle objective {solution.objective} W over {series.n} slots "
        f"({solution.states_explored} states explored) -> {args.out}"
    )
    return 0


def cmd_eval(args: argparse.Namespace) -> int:
    truth = read_truth(args.truth)
    data = _load_json(args.report)
    if not isinstance(data, dict) or "corrupted" not in data or "n" not in data:
        raise FileFormatError(f"{args.report}: missing 'n'/'corrupted'")
    n = int(data["n"])
    detected = [int(i) for i in data["corrupted"]]
    method = args.method or str(data.get("method", "sloa"))

    counts = confusion(truth, detected, n)
    precision, recall, f_measure = precision_recall_f(counts)
    row = MetricsRow(
        scenario=args.scenario,
        seed=args.seed,
        method=method,
        delta=args.delta,
        w=args.w,
        tp=counts.tp,
        fp=counts.fp,
        tn=counts.tn,
        fn=counts.fn,
        precision=precision,
        recall=recall,
        f_measure=f_measure,
        runtime_ms=None,
    )
    write_metrics([row], args.out)

    outputs = [str(args.out)]
    if args.figures:
        if not (args.series and args.panel):
            raise ValueError("--figures needs --series and --panel to draw from")
        from .evaluate import state_distance
        from .plots import save_detection_figure, save_state_distance_figure

        fig_dir = Path(args.figures)
        fig_dir.mkdir(parents=True, exist_ok=True)
        series = read_series(args.series)
        panel = read_panel(args.panel)
        report = read_report(args.report)
        fig = save_detection_figure(
            series,
            panel,
            report,
            fig_dir / (Path(args.out).stem + "_detection.png"),
            truth_indices=truth.corrupted_indices,
        )
        outputs.append(str(fig))
        if args.states:
            true_states = read_states(args.states)
            distances = state_distance(list(report.committed_states), list(true_states))
            fig2 = save_state_distance_figure(
                distances, fig_dir / (Path(args.out).stem + "_state_distance.png")
            )
            outputs.append(str(fig2))
    write_manifest(
        manifest_path_for(Path(args.out)),
        command="eval",
        params={
            "scenario": args.scenario,
            "method": method,
            "delta": args.delta,
            "w": args.w,
        },
        inputs=[str(args.truth), str(args.report)],
        outputs=outputs,
        seed=args.seed,
    )

    def fmt(v: float | None) -> str:
        return "undefined" if v is None else f"{v:.4f}"

    print(
        f"tp={counts.tp} fp={counts.fp} tn={counts.tn} fn={counts.fn} "
        f"precision={fmt(precision)} recall={fmt(recall)} f={fmt(f_measure)}"
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="loadclean",
        description="Detect corrupted values in electric load curves by "
        "checking appliance-level data-generation rules.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="draw a synthetic panel and load curve")
    p.add_argument("--m", type=int, default=50, help="appliance count")
    p.add_argument("--pmin", type=float, default=50.0, help="min lower bound [W]")
    p.add_argument("--pmax", type=float, default=2000.0, help="max power bound [W]")
    p.add_argument("--r", type=float, default=0.15, help="max range width ratio")
    p.add_argument(
        "--lambda",
        dest="switch_rate",
        type=float,
        default=5.0,
        help="mean appliance switches per slot",
    )
    p.add_argument("--interval-s", type=float, default=6.0, help="seconds per sample")
    p.add_argument("--slots", type=int, default=600, help="series length")
    p.add_argument("--delta", type=int, default=4, help="panel switch budget")
    p.add_argument(
        "--s0",
        choices=["zeros", "random"],
        default="zeros",
        help="starting state of the switching walk (the exact bitstring is "
        "recorded in the manifest)",
    )
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("corrupt", help="inject corruption into a series")
    p.add_argument("--series", required=True)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--random", action="store_true", help="Exponential-gap corruption")
    p.add_argument("--mu", type=float, default=30.0, help="mean gap between corruptions")
    p.add_argument("--max-wh", type=float, default=100.0, help="replacement upper bound [Wh]")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--consecutive", help="START:LENGTH constant-run corruption")
    p.add_argument("--value", type=float, default=0.0, help="constant value [Wh]")
    p.set_defaults(func=cmd_corrupt)

    p = sub.add_parser("detect", help="flag corrupted slots in a series")
    p.add_argument("--panel", required=True)
    p.add_argument("--series", required=True)
    p.add_argument("--w", default="1", help="lookahead window size, or 'auto'")
    p.add_argument("--delta", type=int, help="override the panel switch budget")
    p.add_argument(
        "--epsilon",
        type=float,
        default=DEFAULT_ZERO_TOLERANCE_W,
        help="|virtual power| below this counts as zero [W]",
    )
    p.add_argument("--s0", help="initial state bitstring (default all off)")
    p.add_argument("--out", required=True, help="report JSON path")
    p.add_argument("--figures", help="also render figures into this directory")
    p.add_argument("--truth", help="truth JSON to overlay on figures")
    p.add_argument(
        "--baseline",
        action="store_true",
        help="run the rolling-MAD baseline instead of the state solver",
    )
    p.add_argument("--half-window", type=int, default=5, help="baseline half window")
    p.add_argument("--threshold", type=float, default=3.0, help="baseline MAD multiple")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("oracle", help="exact global solve on a small instance")
    p.add_argument("--panel", required=True)
    p.add_argument("--series", required=True)
    p.add_argument("--delta", type=int, help="override the panel switch budget")
    p.add_argument("--s0", help="initial state bitstring (default all off)")
    p.add_argument("--max-n", type=int, default=8)
    p.add_argument("--max-m", type=int, default=6)
    p.add_argument("--budget", type=int, default=2_000_000, help="max states explored")
    p.add_argument("--out", required=True, help="solution JSON path")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("eval", help="score a report against truth labels")
    p.add_argument("--truth", required=True)
    p.add_argument("--report", required=True)
    p.add_argument("--out", required=True, help="metrics CSV path")
    p.add_argument("--scenario", default="adhoc")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--method", help="method label (default: from report)")
    p.add_argument("--delta", type=int, help="delta column value")
    p.add_argument("--w", type=int, help="window column value")
    p.add_argument("--figures", help="also render figures into this directory")
    p.add_argument("--series", help="series CSV (for figures)")
    p.add_argument("--panel", help="panel JSON (for figures)")
    p.add_argument("--states", help="true states JSON (for the distance figure)")
    p.set_defaults(func=cmd_eval)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
