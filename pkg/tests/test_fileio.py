"""On-disk formats: round trips, schema rejection, byte-level determinism."""

from __future__ import annotations

import json

import numpy as np
import pytest

from loadclean.datagen import GroundTruth
from loadclean.evaluate import MetricsRow
from loadclean.fileio import (
    METRICS_HEADER,
    SERIES_HEADER,
    UNDEFINED,
    FileFormatError,
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
from loadclean.model import LoadSeries, StateVector
from loadclean.solver import SolverConfig, detect

from conftest import make_panel, series


class TestPanelRoundTrip:
    def test_round_trip(self, tmp_path):
        panel = make_panel(
            [(2.0, 4.0), (10.5, 12.25)], sampling_per_hour=600.0, switch_budget=2
        )
        path = tmp_path / "panel.json"
        write_panel(panel, path)
        assert read_panel(path) == panel

    def test_schema_keys(self, tmp_path):
        panel = make_panel([(1.0, 2.0)])
        path = tmp_path / "panel.json"
        write_panel(panel, path)
        data = json.loads(path.read_text())
        assert set(data) == {"sampling_per_hour", "delta", "appliances"}
        assert data["appliances"][0] == {"name": "A1", "lower_w": 1.0, "upper_w": 2.0}

    def test_rejects_missing_key(self, tmp_path):
        path = tmp_path / "panel.json"
        path.write_text('{"sampling_per_hour": 1.0, "appliances": []}')
        with pytest.raises(FileFormatError):
            read_panel(path)

    def test_rejects_empty_appliances(self, tmp_path):
        path = tmp_path / "panel.json"
        path.write_text('{"sampling_per_hour": 1.0, "delta": 1, "appliances": []}')
        with pytest.raises(FileFormatError):
            read_panel(path)

    def test_rejects_invalid_json(self, tmp_path):
        path = tmp_path / "panel.json"
        path.write_text("{nope")
        with pytest.raises(FileFormatError):
            read_panel(path)

    def test_rejects_inverted_range(self, tmp_path):
        path = tmp_path / "panel.json"
        path.write_text(
            '{"sampling_per_hour": 1.0, "delta": 1, "appliances":'
            ' [{"name": "A1", "lower_w": 5.0, "upper_w": 1.0}]}'
        )
        with pytest.raises(FileFormatError):
            read_panel(path)


class TestSeriesRoundTrip:
    def test_round_trip_exact(self, tmp_path):
        rng = np.random.default_rng(3)
        data = LoadSeries(tuple(float(v) for v in rng.uniform(0.0, 5.0, 100)))
        path = tmp_path / "series.csv"
        write_series(data, path)
        assert read_series(path) == data

    def test_zero_based_index_column(self, tmp_path):
        path = tmp_path / "series.csv"
        write_series(series(1.5, 2.5), path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == ",".join(SERIES_HEADER)
        assert lines[1].startswith("0,")
        assert lines[2].startswith("1,")

    def test_rejects_bad_header(self, tmp_path):
        path = tmp_path / "series.csv"
        path.write_text("slot,wh\n0,1.0\n")
        with pytest.raises(FileFormatError):
            read_series(path)

    def test_rejects_out_of_order_index(self, tmp_path):
        path = tmp_path / "series.csv"
        path.write_text("index,watt_hours\n0,1.0\n2,2.0\n")
        with pytest.raises(FileFormatError):
            read_series(path)

    def test_rejects_non_numeric_value(self, tmp_path):
        path = tmp_path / "series.csv"
        path.write_text("index,watt_hours\n0,abc\n")
        with pytest.raises(FileFormatError):
            read_series(path)


class TestReportRoundTrip:
    def report(self):
        panel = make_panel(
            [(2.0, 4.0), (10.0, 12.0), (30.0, 32.0)], switch_budget=2
        )
        config = SolverConfig(initial_state=StateVector.zeros(3))
        return detect(series(0.0, 3.0, 7.0, 11.0), panel, config)

    def test_round_trip(self, tmp_path):
        report = self.report()
        path = tmp_path / "report.json"
        write_report(report, path)
        assert read_report(path) == report

    def test_schema(self, tmp_path):
        path = tmp_path / "report.json"
        write_report(self.report(), path)
        data = json.loads(path.read_text())
        assert set(data) == {
            "n",
            "epsilon_w",
            "corrupted",
            "virtual_power_w",
            "states",
            "bounds_w",
        }
        assert data["n"] == 4
        assert data["corrupted"] == [3]
        assert data["states"] == ["000", "100", "100", "010"]
        assert all(len(b) == 2 for b in data["bounds_w"])

    def test_rejects_length_mismatch(self, tmp_path):
        path = tmp_path / "report.json"
        write_report(self.report(), path)
        data = json.loads(path.read_text())
        data["virtual_power_w"] = data["virtual_power_w"][:-1]
        path.write_text(json.dumps(data))
        with pytest.raises(FileFormatError):
            read_report(path)

    def test_baseline_report_shape(self, tmp_path):
        path = tmp_path / "baseline.json"
        write_baseline_report(10, (2, 7), path)
        data = json.loads(path.read_text())
        assert data == {"n": 10, "method": "rolling_mad", "corrupted": [2, 7]}


class TestTruthAndStates:
    def test_truth_round_trip(self, tmp_path):
        truth = GroundTruth((2, 9), (1.5, 0.25))
        path = tmp_path / "truth.json"
        write_truth(truth, path)
        got = read_truth(path)
        assert got.corrupted_indices == truth.corrupted_indices
        assert got.original_values_wh == truth.original_values_wh

    def test_truth_schema(self, tmp_path):
        path = tmp_path / "truth.json"
        write_truth(GroundTruth((1,), (2.0,)), path)
        assert json.loads(path.read_text()) == {
            "corrupted": [1],
            "originals_wh": [2.0],
        }

    def test_truth_rejects_missing_key(self, tmp_path):
        path = tmp_path / "truth.json"
        path.write_text('{"corrupted": [1]}')
        with pytest.raises(FileFormatError):
            read_truth(path)

    def test_states_round_trip(self, tmp_path):
        states = (
            StateVector.from_bitstring("0101"),
            StateVector.from_bitstring("1100"),
        )
        path = tmp_path / "states.json"
        write_states(states, path)
        assert read_states(path) == states

    def test_states_rejects_bad_bitstring(self, tmp_path):
        path = tmp_path / "states.json"
        path.write_text('{"states": ["01x"]}')
        with pytest.raises(FileFormatError):
            read_states(path)


class TestMetricsCsv:
    def rows(self):
        return [
            MetricsRow(
                scenario="s1",
                seed=1,
                method="sloa",
                delta=4,
                w=1,
                tp=3,
                fp=1,
                tn=90,
                fn=6,
                precision=0.75,
                recall=1 / 3,
                f_measure=0.4615384615384615,
                runtime_ms=12.5,
            ),
            MetricsRow(
                scenario="s1",
                seed=1,
                method="rolling_mad",
                delta=None,
                w=None,
                tp=0,
                fp=0,
                tn=100,
                fn=0,
                precision=None,
                recall=None,
                f_measure=None,
                runtime_ms=None,
            ),
        ]

    def test_header_and_undefined_cells(self, tmp_path):
        path = tmp_path / "metrics.csv"
        write_metrics(self.rows(), path)
        lines = path.read_text().strip().splitlines()
        assert lines[0] == ",".join(METRICS_HEADER)
        assert lines[1].split(",")[:5] == ["s1", "1", "sloa", "4", "1"]
        cells = lines[2].split(",")
        assert cells[9] == UNDEFINED
        assert cells[10] == UNDEFINED
        assert cells[11] == UNDEFINED

    def test_float_cells_round_trip_exactly(self, tmp_path):
        path = tmp_path / "metrics.csv"
        write_metrics(self.rows(), path)
        cells = path.read_text().strip().splitlines()[1].split(",")
        assert float(cells[10]) == 1 / 3
        assert float(cells[11]) == 0.4615384615384615


class TestManifest:
    def test_manifest_contents(self, tmp_path):
        path = tmp_path / "run.manifest.json"
        write_manifest(
            path,
            command="detect",
            params={"w": 1},
            inputs=["panel.json"],
            outputs=["report.json"],
            seed=7,
        )
        data = json.loads(path.read_text())
        assert data["command"] == "detect"
        assert data["seed"] == 7
        assert data["params"] == {"w": 1}
        assert data["inputs"] == ["panel.json"]
        assert data["outputs"] == ["report.json"]
        assert "created_utc" in data and "version" in data

    def test_manifest_path_next_to_file(self, tmp_path):
        assert manifest_path_for(tmp_path / "report.json") == (
            tmp_path / "report.manifest.json"
        )

    def test_manifest_path_inside_directory(self, tmp_path):
        assert manifest_path_for(tmp_path) == tmp_path / "manifest.json"


class TestByteDeterminism:
    def test_rewriting_same_artifacts_is_byte_identical(self, tmp_path):
        panel = make_panel(
            [(2.0, 4.0), (10.0, 12.0), (30.0, 32.0)],
            sampling_per_hour=600.0,
            switch_budget=2,
        )
        rng = np.random.default_rng(11)
        data = LoadSeries(tuple(float(v) for v in rng.uniform(0.0, 0.1, 50)))
        report = detect(data, panel, SolverConfig(initial_state=StateVector.zeros(3)))

        first = tmp_path / "a"
        second = tmp_path / "b"
        first.mkdir()
        second.mkdir()
        for out in (first, second):
            write_panel(panel, out / "panel.json")
            write_series(data, out / "series.csv")
            write_report(report, out / "report.json")
        for name in ("panel.json", "series.csv", "report.json"):
            assert (first / name).read_bytes() == (second / name).read_bytes()
