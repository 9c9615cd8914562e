"""Tests for CSV/JSON emission and the verification summary."""

from __future__ import annotations

import csv
import json

import pytest

from devstone.errors import EmitError
from devstone.models import (
    AnalyticPrediction,
    BenchmarkSpec,
    Family,
    OutputFormat,
    RunResult,
    RunStatus,
    TransitionCounters,
    VerificationCell,
    VerificationReport,
)
from devstone.report import (
    CSV_COLUMNS,
    ResultWriter,
    emit,
    format_verification,
    sig6,
    sort_results,
)


def make_result(family: Family = Family.LI, width: int = 4, depth: int = 3, **kwargs) -> RunResult:
    spec = BenchmarkSpec(family=family, width=width, depth=depth)
    fields = {
        "trials": 10,
        "wall_times": [0.00123456789] * 10,
        "peak_memories": [20_000_000] * 10,
        "mean_wall_time": 0.00123456789,
        "mean_peak_memory": 20_000_000.0,
        "observed": TransitionCounters(num_delt_ints=7, num_delt_exts=7, num_of_events=7),
        "predicted": AnalyticPrediction(n_atomics=7, n_delta_int=7, n_delta_ext=7, n_events=7),
    }
    fields.update(kwargs)
    return RunResult(spec=spec, **fields)


class TestCsv:
    def test_row_layout(self, tmp_path):
        out = tmp_path / "r.csv"
        emit([make_result()], OutputFormat.CSV, out)
        header, row = out.read_text().splitlines()
        assert header.split(",") == CSV_COLUMNS
        assert row == "LI,4,3,1,10,0.00123457,2e+07,7,7,7,7,7,7,ok"

    def test_counters_round_trip(self, tmp_path):
        out = tmp_path / "r.csv"
        result = make_result(
            Family.HOMEM,
            3,
            3,
            observed=TransitionCounters(num_delt_ints=9, num_delt_exts=9, num_of_events=31),
        )
        emit([result], OutputFormat.CSV, out)
        (row,) = csv.DictReader(out.open())
        assert (int(row["n_delta_int"]), int(row["n_delta_ext"]), int(row["n_event_count"])) == (
            result.observed.as_tuple()
        )

    def test_truncated_cell(self, tmp_path):
        out = tmp_path / "r.csv"
        result = make_result(
            status=RunStatus.TIME_EXCEEDED, mean_wall_time=1200.0, wall_times=[1200.0]
        )
        emit([result], OutputFormat.CSV, out)
        (row,) = csv.DictReader(out.open())
        assert row["status"] == "time_exceeded"
        assert row["mean_wall_time_s"] == "1200"

    def test_missing_prediction_leaves_blanks(self, tmp_path):
        out = tmp_path / "r.csv"
        emit([make_result(predicted=None)], OutputFormat.CSV, out)
        (row,) = csv.DictReader(out.open())
        assert row["pred_delta_int"] == row["pred_event_count"] == ""

    def test_rows_are_sorted(self):
        results = [
            make_result(Family.HOMEM, 2, 1),
            make_result(Family.LI, 3, 1),
            make_result(Family.LI, 2, 5),
            make_result(Family.HI, 2, 1),
        ]
        ordered = [(r.spec.family, r.spec.width, r.spec.depth) for r in sort_results(results)]
        assert ordered == [
            (Family.LI, 2, 5),
            (Family.LI, 3, 1),
            (Family.HI, 2, 1),
            (Family.HOMEM, 2, 1),
        ]

    def test_sig6(self):
        assert sig6(123456789.0) == "1.23457e+08"
        assert sig6(0.5) == "0.5"


class TestJson:
    def test_mirrors_csv_fields_plus_trials(self, tmp_path):
        out = tmp_path / "r.json"
        emit([make_result()], OutputFormat.JSON, out)
        (record,) = json.loads(out.read_text())
        assert set(CSV_COLUMNS) <= set(record)
        assert record["mean_wall_time_s"] == 0.00123457
        assert record["wall_times_s"] == [0.00123457] * 10
        assert record["peak_mem_bytes"] == [20_000_000] * 10
        assert record["pred_event_count"] == 7


class TestEmitErrors:
    def test_empty(self, tmp_path):
        with pytest.raises(EmitError):
            emit([], OutputFormat.CSV, tmp_path / "r.csv")

    def test_unwritable(self, tmp_path):
        with pytest.raises(EmitError):
            emit([make_result()], OutputFormat.CSV, tmp_path / "missing" / "r.csv")

    def test_stdout(self, capsys):
        emit([make_result()], OutputFormat.CSV, "-")
        assert capsys.readouterr().out.startswith("family,width,depth")


class TestResultWriter:
    def test_csv_appends(self, tmp_path):
        out = tmp_path / "r.csv"
        writer = ResultWriter(out, OutputFormat.CSV)
        assert out.read_text().splitlines() == [",".join(CSV_COLUMNS)]
        writer.append(make_result(width=5))
        writer.append(make_result(width=4))
        widths = [row["width"] for row in csv.DictReader(out.open())]
        assert widths == ["5", "4"]

    def test_json_rewrites(self, tmp_path):
        out = tmp_path / "r.json"
        writer = ResultWriter(out, OutputFormat.JSON)
        writer.append(make_result())
        writer.append(make_result(depth=4))
        assert len(json.loads(out.read_text())) == 2


class TestFormatVerification:
    def test_pass(self):
        cell = VerificationCell(
            spec=BenchmarkSpec(family=Family.LI, width=2, depth=1),
            observed=TransitionCounters(num_delt_ints=1, num_delt_exts=1, num_of_events=1),
            predicted=AnalyticPrediction(n_atomics=1, n_delta_int=1, n_delta_ext=1, n_events=1),
            n_atomics=1,
        )
        text = format_verification(VerificationReport(cells=[cell]))
        assert "LI" in text
        assert text.rstrip().endswith("PASS: 1 cell(s), 0 mismatch(es)")

    def test_mismatch_lists_terms(self):
        cell = VerificationCell(
            spec=BenchmarkSpec(family=Family.HOMOD, width=2, depth=2),
            observed=TransitionCounters(),
            predicted=None,
            mismatches=["n_events: observed 0, predicted 4"],
            decomposition=["l=1 c=1 term=2", "l=1 c=2 term=1"],
        )
        text = format_verification(VerificationReport(cells=[cell]))
        assert "MISMATCH HOmod(2,2)" in text
        assert "n_events: observed 0, predicted 4" in text
        assert "l=1 c=2 term=1" in text
        assert "FAIL" in text
