"""CSV/JSON result files and the plain-text verification report."""

from __future__ import annotations

import csv
import io
import json
import logging
import sys
from collections.abc import Iterable
from pathlib import Path

from devstone.errors import EmitError
from devstone.models import OutputFormat, RunResult, VerificationReport

log = logging.getLogger(__name__)

CSV_COLUMNS = [
    "family",
    "width",
    "depth",
    "n_events",
    "trials",
    "mean_wall_time_s",
    "mean_peak_mem_bytes",
    "n_delta_int",
    "n_delta_ext",
    "n_event_count",
    "pred_delta_int",
    "pred_delta_ext",
    "pred_event_count",
    "status",
]

STDOUT = "-"


def sig6(value: float) -> str:
    return f"{value:.6g}"


def sort_results(results: Iterable[RunResult]) -> list[RunResult]:
    return sorted(results, key=lambda r: (r.spec.family.order, r.spec.width, r.spec.depth))


def result_row(result: RunResult) -> dict[str, str | int]:
    pred = result.predicted
    return {
        "family": result.spec.family.value,
        "width": result.spec.width,
        "depth": result.spec.depth,
        "n_events": result.spec.n_events,
        "trials": result.trials,
        "mean_wall_time_s": sig6(result.mean_wall_time),
        "mean_peak_mem_bytes": sig6(result.mean_peak_memory),
        "n_delta_int": result.observed.num_delt_ints,
        "n_delta_ext": result.observed.num_delt_exts,
        "n_event_count": result.observed.num_of_events,
        "pred_delta_int": pred.n_delta_int if pred else "",
        "pred_delta_ext": pred.n_delta_ext if pred else "",
        "pred_event_count": pred.n_events if pred else "",
        "status": result.status.value,
    }


def result_record(result: RunResult) -> dict:
    """JSON object for one cell: the CSV fields plus the per-trial series."""
    record: dict = dict(result_row(result))
    record["mean_wall_time_s"] = float(record["mean_wall_time_s"])
    record["mean_peak_mem_bytes"] = float(record["mean_peak_mem_bytes"])
    for key in ("pred_delta_int", "pred_delta_ext", "pred_event_count"):
        if record[key] == "":
            record[key] = None
    record["wall_times_s"] = [float(sig6(t)) for t in result.wall_times]
    record["peak_mem_bytes"] = result.peak_memories
    record["memory_reliable"] = result.memory_reliable
    record["detail"] = result.detail
    return record


def render(results: list[RunResult], fmt: OutputFormat) -> str:
    if fmt is OutputFormat.JSON:
        return json.dumps([result_record(r) for r in results], indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n")
    writer.writeheader()
    for r in results:
        writer.writerow(result_row(r))
    return buf.getvalue()


def emit(results: Iterable[RunResult], fmt: OutputFormat, path: Path | str) -> None:
    """Write ``results`` sorted by family, width and depth; ``"-"`` means stdout."""
    ordered = sort_results(results)
    if not ordered:
        raise EmitError("no results to emit")
    text = render(ordered, fmt)
    if str(path) == STDOUT:
        sys.stdout.write(text)
        return
    try:
        Path(path).write_text(text)
    except OSError as exc:
        raise EmitError(f"cannot write {path}: {exc}") from exc
    log.info("Wrote %d row(s) to %s", len(ordered), path)


class ResultWriter:
    """Appends finished cells as they arrive so an interrupted sweep keeps its rows.

    CSV rows are appended in completion order; JSON is rewritten whole each time.
    """

    def __init__(self, path: Path, fmt: OutputFormat) -> None:
        self.path = Path(path)
        self.fmt = fmt
        self._results: list[RunResult] = []
        if fmt is OutputFormat.CSV:
            self._write(",".join(CSV_COLUMNS) + "\n", mode="w")

    def append(self, result: RunResult) -> None:
        self._results.append(result)
        if self.fmt is OutputFormat.JSON:
            self._write(render(self._results, self.fmt), mode="w")
            return
        buf = io.StringIO()
        csv.DictWriter(buf, fieldnames=CSV_COLUMNS, lineterminator="\n").writerow(
            result_row(result)
        )
        self._write(buf.getvalue(), mode="a")

    def _write(self, text: str, *, mode: str) -> None:
        try:
            with self.path.open(mode) as fh:
                fh.write(text)
        except OSError as exc:
            raise EmitError(f"cannot write {self.path}: {exc}") from exc


def format_verification(report: VerificationReport) -> str:
    """Human-readable summary: one line per family, then every mismatching cell."""
    lines = ["DEVStone analytic verification", ""]
    families: dict[str, list[int]] = {}
    for cell in report.cells:
        counts = families.setdefault(cell.spec.family.value, [0, 0])
        counts[0] += 1
        counts[1] += bool(cell.mismatches)
    for family, (total, bad) in families.items():
        mark = "ok" if not bad else f"{bad} mismatch(es)"
        lines.append(f"  {family:<6} {total:>4} cell(s)  {mark}")

    for cell in report.mismatched:
        lines.append("")
        lines.append(f"MISMATCH {cell.spec.label} events={cell.spec.n_events}")
        for m in cell.mismatches:
            lines.append(f"  - {m}")
        if cell.decomposition:
            lines.append("  terms:")
            lines.extend(f"    {d}" for d in cell.decomposition)

    lines.append("")
    verdict = "PASS" if report.ok else "FAIL"
    lines.append(f"{verdict}: {len(report.cells)} cell(s), {len(report.mismatched)} mismatch(es)")
    return "\n".join(lines) + "\n"
