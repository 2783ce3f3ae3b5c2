"""Verification records and their text/JSON rendering."""

from __future__ import annotations

import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, TextIO

PASS = "pass"
FAIL = "fail"
SKIPPED = "skipped"

FIELDS = ("check_id", "suite", "samples", "max_residual", "tolerance", "verdict", "note")


@dataclass(frozen=True)
class Record:
    check_id: str
    suite: str
    samples: int
    max_residual: float
    tolerance: float
    verdict: str
    note: str = ""


def measured(check_id: str, suite: str, samples: int, residual: float, tolerance: float,
             note: str = "") -> Record:
    """Record whose verdict follows from ``residual <= tolerance``."""
    residual = float(residual)
    ok = math.isfinite(residual) and residual <= tolerance
    return Record(check_id, suite, samples, residual, float(tolerance), PASS if ok else FAIL, note)


def failed(check_id: str, suite: str, note: str, residual: float = math.nan,
           tolerance: float = 0.0, samples: int = 0) -> Record:
    return Record(check_id, suite, samples, float(residual), float(tolerance), FAIL, note)


def skipped(check_id: str, suite: str, note: str, tolerance: float = 0.0) -> Record:
    if not note:
        raise ValueError("skipped records need a note")
    return Record(check_id, suite, 0, math.nan, float(tolerance), SKIPPED, note)


class Report:
    """Records kept in lexicographic check-id order."""

    def __init__(self, records: Iterable[Record] = ()):
        self.records = sorted(records, key=lambda r: (r.check_id, r.suite))

    def __iter__(self):
        return iter(self.records)

    def __len__(self):
        return len(self.records)

    def extend(self, records: Iterable[Record]) -> None:
        self.records = sorted([*self.records, *records], key=lambda r: (r.check_id, r.suite))

    def counts(self) -> dict[str, int]:
        out = {PASS: 0, FAIL: 0, SKIPPED: 0}
        for r in self.records:
            out[r.verdict] += 1
        return out

    @property
    def ok(self) -> bool:
        return all(r.verdict != FAIL for r in self.records)

    def exit_code(self) -> int:
        return 0 if self.ok else 1


def _real(x: float) -> str:
    if not math.isfinite(x):
        return "null"
    return "%.17g" % x


def to_json(report: Report) -> str:
    if not len(report):
        return "[]\n"
    lines = []
    for r in report:
        parts = [
            f'"check_id": {json.dumps(r.check_id)}',
            f'"suite": {json.dumps(r.suite)}',
            f'"samples": {int(r.samples)}',
            f'"max_residual": {_real(r.max_residual)}',
            f'"tolerance": {_real(r.tolerance)}',
            f'"verdict": {json.dumps(r.verdict)}',
            f'"note": {json.dumps(r.note)}',
        ]
        lines.append("  {" + ", ".join(parts) + "}")
    return "[\n" + ",\n".join(lines) + "\n]\n"


def _fmt(x: float) -> str:
    return "-" if not math.isfinite(x) else f"{x:.3e}"


def to_text(report: Report) -> str:
    rows = [("CHECK", "SAMPLES", "MAX_RESIDUAL", "TOL", "VERDICT", "NOTE")]
    for r in report:
        rows.append((r.check_id, str(r.samples), _fmt(r.max_residual), _fmt(r.tolerance),
                     r.verdict.upper(), r.note))
    widths = [max(len(row[i]) for row in rows) for i in range(5)]
    out = []
    for row in rows:
        cells = [row[0].ljust(widths[0]), row[1].rjust(widths[1]), row[2].rjust(widths[2]),
                 row[3].rjust(widths[3]), row[4].ljust(widths[4])]
        out.append("  ".join(cells + [row[5]]).rstrip())
    c = report.counts()
    out.append(f"{len(report)} checks: {c[PASS]} passed, {c[FAIL]} failed, {c[SKIPPED]} skipped")
    if not len(report):
        out = [out[-1]]
    return "\n".join(out) + "\n"


def emit_report(report: Report, fmt: str = "text", path: str | Path | None = None,
                stream: TextIO | None = None) -> int:
    """Write the report and return the exit status it implies (0 or 1)."""
    if fmt == "json":
        text = to_json(report)
    elif fmt == "text":
        text = to_text(report)
    else:
        raise ValueError(f"unknown report format {fmt!r}")
    if path is not None:
        Path(path).write_text(text, encoding="utf-8")
    else:
        (stream or sys.stdout).write(text)
    return report.exit_code()


def from_json(text: str) -> list[dict]:
    return json.loads(text)
