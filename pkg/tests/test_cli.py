"""Command-line pipeline: artifacts, exit codes, reproducibility."""

from __future__ import annotations

import json

import pytest

from loadclean.cli import main
from loadclean.fileio import read_report, read_series, read_states, read_truth

GEN = [
    "generate",
    "--m",
    "6",
    "--pmin",
    "50",
    "--pmax",
    "500",
    "--r",
    "0.15",
    "--lambda",
    "1.5",
    "--interval-s",
    "6",
    "--slots",
    "40",
    "--delta",
    "3",
]


def run(argv):
    return main([str(a) for a in argv])


@pytest.fixture
def dataset(tmp_path):
    out = tmp_path / "data"
    assert run(GEN + ["--seed", 1, "--out", out]) == 0
    return out


class TestGenerate:
    def test_writes_artifact_set(self, dataset):
        for name in ("panel.json", "series.csv", "truth.json", "states.json", "manifest.json"):
            assert (dataset / name).exists()
        assert read_series(dataset / "series.csv").n == 40
        assert len(read_states(dataset / "states.json")) == 40
        assert read_truth(dataset / "truth.json").corrupted_indices == ()
        panel = json.loads((dataset / "panel.json").read_text())
        assert len(panel["appliances"]) == 6
        assert panel["delta"] == 3
        assert panel["sampling_per_hour"] == 600.0

    def test_manifest_records_run(self, dataset):
        manifest = json.loads((dataset / "manifest.json").read_text())
        assert manifest["command"] == "generate"
        assert manifest["seed"] == 1
        assert manifest["params"]["lambda"] == 1.5
        assert manifest["params"]["s0"] == "0" * 6

    def test_deterministic_artifacts(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        assert run(GEN + ["--seed", 9, "--out", a]) == 0
        assert run(GEN + ["--seed", 9, "--out", b]) == 0
        for name in ("panel.json", "series.csv", "truth.json", "states.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_seed_changes_data(self, tmp_path):
        a = tmp_path / "a"
        b = tmp_path / "b"
        assert run(GEN + ["--seed", 1, "--out", a]) == 0
        assert run(GEN + ["--seed", 2, "--out", b]) == 0
        assert (a / "series.csv").read_bytes() != (b / "series.csv").read_bytes()

    def test_random_start_mode(self, tmp_path):
        cold = tmp_path / "cold"
        warm = tmp_path / "warm"
        assert run(GEN + ["--seed", 3, "--out", cold]) == 0
        assert run(GEN + ["--seed", 3, "--s0", "random", "--out", warm]) == 0
        assert (cold / "series.csv").read_bytes() != (warm / "series.csv").read_bytes()
        manifest = json.loads((warm / "manifest.json").read_text())
        assert set(manifest["params"]["s0"]) <= {"0", "1"}
        assert manifest["params"]["s0"] != "0" * 6

    def test_invalid_params_exit_one(self, tmp_path):
        assert (
            run(
                [
                    "generate",
                    "--m",
                    "0",
                    "--seed",
                    "1",
                    "--out",
                    tmp_path / "x",
                ]
            )
            == 1
        )


class TestCorrupt:
    def test_random_mode(self, dataset, tmp_path):
        out = tmp_path / "corrupt"
        code = run(
            [
                "corrupt",
                "--series",
                dataset / "series.csv",
                "--random",
                "--mu",
                "8",
                "--max-wh",
                "0.2",
                "--seed",
                "5",
                "--out",
                out,
            ]
        )
        assert code == 0
        truth = read_truth(out / "truth.json")
        assert truth.corrupted_indices
        corrupted = read_series(out / "series.csv")
        original = read_series(dataset / "series.csv")
        for slot in truth.corrupted_indices:
            assert 0.0 <= corrupted.values[slot - 1] <= 0.2
        assert corrupted.n == original.n

    def test_consecutive_mode(self, dataset, tmp_path):
        out = tmp_path / "corrupt"
        code = run(
            [
                "corrupt",
                "--series",
                dataset / "series.csv",
                "--consecutive",
                "10:5",
                "--value",
                "0.0",
                "--out",
                out,
            ]
        )
        assert code == 0
        truth = read_truth(out / "truth.json")
        assert truth.corrupted_indices == (10, 11, 12, 13, 14)
        corrupted = read_series(out / "series.csv")
        assert corrupted.values[9:14] == (0.0,) * 5

    def test_requires_exactly_one_mode(self, dataset, tmp_path):
        base = ["corrupt", "--series", dataset / "series.csv", "--out", tmp_path / "c"]
        assert run(base) == 1
        assert run(base + ["--random", "--consecutive", "1:2"]) == 1

    def test_malformed_consecutive_spec(self, dataset, tmp_path):
        code = run(
            [
                "corrupt",
                "--series",
                dataset / "series.csv",
                "--consecutive",
                "abc",
                "--out",
                tmp_path / "c",
            ]
        )
        assert code == 1

    def test_missing_series_exits_three(self, tmp_path):
        code = run(
            [
                "corrupt",
                "--series",
                tmp_path / "nope.csv",
                "--random",
                "--out",
                tmp_path / "c",
            ]
        )
        assert code == 3


class TestDetect:
    def test_report_artifacts(self, dataset, tmp_path, capsys):
        report_path = tmp_path / "report.json"
        code = run(
            [
                "detect",
                "--panel",
                dataset / "panel.json",
                "--series",
                dataset / "series.csv",
                "--w",
                "1",
                "--out",
                report_path,
            ]
        )
        assert code == 0
        report = read_report(report_path)
        assert report.n == 40
        assert (tmp_path / "report.manifest.json").exists()
        out = capsys.readouterr().out
        assert "flagged" in out

    def test_auto_window_logs_overlap(self, dataset, tmp_path, capsys):
        code = run(
            [
                "detect",
                "--panel",
                dataset / "panel.json",
                "--series",
                dataset / "series.csv",
                "--w",
                "auto",
                "--out",
                tmp_path / "report.json",
            ]
        )
        assert code == 0
        err = capsys.readouterr().err
        assert "auto window" in err
        assert "w=" in err

    def test_delta_override_recorded(self, dataset, tmp_path):
        report_path = tmp_path / "report.json"
        code = run(
            [
                "detect",
                "--panel",
                dataset / "panel.json",
                "--series",
                dataset / "series.csv",
                "--delta",
                "2",
                "--out",
                report_path,
            ]
        )
        assert code == 0
        manifest = json.loads((tmp_path / "report.manifest.json").read_text())
        assert manifest["params"]["delta"] == 2

    def test_s0_bitstring(self, dataset, tmp_path):
        code = run(
            [
                "detect",
                "--panel",
                dataset / "panel.json",
                "--series",
                dataset / "series.csv",
                "--s0",
                "000000",
                "--out",
                tmp_path / "report.json",
            ]
        )
        assert code == 0

    def test_wrong_length_s0_exits_one(self, dataset, tmp_path):
        code = run(
            [
                "detect",
                "--panel",
                dataset / "panel.json",
                "--series",
                dataset / "series.csv",
                "--s0",
                "010",
                "--out",
                tmp_path / "report.json",
            ]
        )
        assert code == 1

    def test_baseline_mode(self, dataset, tmp_path):
        out = tmp_path / "baseline.json"
        code = run(
            [
                "detect",
                "--panel",
                dataset / "panel.json",
                "--series",
                dataset / "series.csv",
                "--baseline",
                "--half-window",
                "4",
                "--out",
                out,
            ]
        )
        assert code == 0
        data = json.loads(out.read_text())
        assert data["method"] == "rolling_mad"
        assert data["n"] == 40
        assert isinstance(data["corrupted"], list)

    def test_figures_rendered(self, dataset, tmp_path):
        figures = tmp_path / "figs"
        code = run(
            [
                "detect",
                "--panel",
                dataset / "panel.json",
                "--series",
                dataset / "series.csv",
                "--out",
                tmp_path / "report.json",
                "--figures",
                figures,
            ]
        )
        assert code == 0
        pngs = list(figures.glob("*.png"))
        assert len(pngs) == 1
        assert pngs[0].stat().st_size > 0

    def test_byte_identical_reports_across_runs(self, dataset, tmp_path):
        a = tmp_path / "a.json"
        b = tmp_path / "b.json"
        for out in (a, b):
            assert (
                run(
                    [
                        "detect",
                        "--panel",
                        dataset / "panel.json",
                        "--series",
                        dataset / "series.csv",
                        "--out",
                        out,
                    ]
                )
                == 0
            )
        assert a.read_bytes() == b.read_bytes()


class TestOracle:
    def small_dataset(self, tmp_path):
        out = tmp_path / "small"
        argv = GEN.copy()
        argv[argv.index("--m") + 1] = "4"
        argv[argv.index("--slots") + 1] = "5"
        # With the budget at the appliance count every walk step is feasible.
        argv[argv.index("--delta") + 1] = "4"
        assert run(argv + ["--seed", 2, "--out", out]) == 0
        return out

    def test_solution_written(self, tmp_path):
        data = self.small_dataset(tmp_path)
        out = tmp_path / "solution.json"
        code = run(
            [
                "oracle",
                "--panel",
                data / "panel.json",
                "--series",
                data / "series.csv",
                "--out",
                out,
            ]
        )
        assert code == 0
        solution = json.loads(out.read_text())
        assert set(solution) == {"objective_w", "slacks_w", "states", "states_explored"}
        assert len(solution["slacks_w"]) == 5
        assert len(solution["states"]) == 5
        # The generating trajectory is feasible, so nothing is unexplained.
        assert solution["objective_w"] == pytest.approx(0.0, abs=1e-9)

    def test_oversized_instance_exits_two(self, dataset, tmp_path):
        code = run(
            [
                "oracle",
                "--panel",
                dataset / "panel.json",
                "--series",
                dataset / "series.csv",
                "--out",
                tmp_path / "solution.json",
            ]
        )
        assert code == 2


class TestEval:
    def pipeline(self, dataset, tmp_path):
        corrupt_dir = tmp_path / "corrupt"
        report_path = tmp_path / "report.json"
        assert (
            run(
                [
                    "corrupt",
                    "--series",
                    dataset / "series.csv",
                    "--random",
                    "--mu",
                    "8",
                    "--max-wh",
                    "0.05",
                    "--seed",
                    "5",
                    "--out",
                    corrupt_dir,
                ]
            )
            == 0
        )
        assert (
            run(
                [
                    "detect",
                    "--panel",
                    dataset / "panel.json",
                    "--series",
                    corrupt_dir / "series.csv",
                    "--out",
                    report_path,
                ]
            )
            == 0
        )
        return corrupt_dir, report_path

    def test_metrics_csv(self, dataset, tmp_path, capsys):
        corrupt_dir, report_path = self.pipeline(dataset, tmp_path)
        out = tmp_path / "metrics.csv"
        code = run(
            [
                "eval",
                "--truth",
                corrupt_dir / "truth.json",
                "--report",
                report_path,
                "--scenario",
                "pipeline",
                "--seed",
                "5",
                "--delta",
                "3",
                "--w",
                "1",
                "--out",
                out,
            ]
        )
        assert code == 0
        lines = out.read_text().strip().splitlines()
        assert len(lines) == 2
        cells = lines[1].split(",")
        assert cells[0] == "pipeline"
        assert cells[2] == "sloa"
        printed = capsys.readouterr().out
        assert "tp=" in printed and "precision=" in printed

    def test_eval_scores_baseline_report(self, dataset, tmp_path):
        corrupt_dir, _ = self.pipeline(dataset, tmp_path)
        baseline_path = tmp_path / "baseline.json"
        assert (
            run(
                [
                    "detect",
                    "--panel",
                    dataset / "panel.json",
                    "--series",
                    corrupt_dir / "series.csv",
                    "--baseline",
                    "--out",
                    baseline_path,
                ]
            )
            == 0
        )
        out = tmp_path / "metrics.csv"
        code = run(
            [
                "eval",
                "--truth",
                corrupt_dir / "truth.json",
                "--report",
                baseline_path,
                "--out",
                out,
            ]
        )
        assert code == 0
        assert out.read_text().splitlines()[1].split(",")[2] == "rolling_mad"

    def test_figures_need_series_and_panel(self, dataset, tmp_path):
        corrupt_dir, report_path = self.pipeline(dataset, tmp_path)
        code = run(
            [
                "eval",
                "--truth",
                corrupt_dir / "truth.json",
                "--report",
                report_path,
                "--out",
                tmp_path / "metrics.csv",
                "--figures",
                tmp_path / "figs",
            ]
        )
        assert code == 1

    def test_figures_with_state_distance(self, dataset, tmp_path):
        corrupt_dir, report_path = self.pipeline(dataset, tmp_path)
        figures = tmp_path / "figs"
        code = run(
            [
                "eval",
                "--truth",
                corrupt_dir / "truth.json",
                "--report",
                report_path,
                "--out",
                tmp_path / "metrics.csv",
                "--figures",
                figures,
                "--series",
                corrupt_dir / "series.csv",
                "--panel",
                dataset / "panel.json",
                "--states",
                dataset / "states.json",
            ]
        )
        assert code == 0
        names = {p.name for p in figures.glob("*.png")}
        assert names == {"metrics_detection.png", "metrics_state_distance.png"}


class TestUsageErrors:
    def test_no_command_is_usage_error(self):
        with pytest.raises(SystemExit) as info:
            main([])
        assert info.value.code == 2

    def test_unknown_command_is_usage_error(self):
        with pytest.raises(SystemExit) as info:
            main(["frobnicate"])
        assert info.value.code == 2

    def test_schema_error_exits_one(self, tmp_path):
        bad = tmp_path / "panel.json"
        bad.write_text('{"not": "a panel"}')
        code = run(
            [
                "detect",
                "--panel",
                bad,
                "--series",
                bad,
                "--out",
                tmp_path / "r.json",
            ]
        )
        assert code == 1
