"""Check records and report emission.

A verification run produces one ``CheckRecord`` per enabled check.  The
structured format is JSON lines: an environment record first (versions,
seed, configuration), then one check record per line with sorted keys,
so identical runs produce byte-identical output below the environment
line.  The text format is a human-readable table with a tally footer.
"""

from __future__ import annotations

import json
import platform
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__

VERDICTS = ("pass", "fail", "reported-residual", "skipped")

_FIELDS = ("check_id", "law", "samples", "max_abs_err", "max_rel_err",
           "tol", "verdict", "notes")


class ReportError(Exception):
    pass


@dataclass
class CheckRecord:
    """Outcome of one check across its sample set.

    ``law`` names the relation being tested (a short slug, e.g.
    ``angular-metric-kills-y``); ``notes`` carries anything a reader
    needs to interpret a non-pass verdict.
    """

    check_id: str
    law: str
    samples: int
    max_abs_err: float
    max_rel_err: float
    tol: float
    verdict: str
    notes: str = ""

    def __post_init__(self):
        if self.verdict not in VERDICTS:
            raise ReportError(f"unknown verdict {self.verdict!r}")
        self.max_abs_err = float(self.max_abs_err)
        self.max_rel_err = float(self.max_rel_err)
        self.tol = float(self.tol)


@dataclass
class Report:
    environment: dict
    records: list = field(default_factory=list)

    def counts(self):
        out = {v: 0 for v in VERDICTS}
        for r in self.records:
            out[r.verdict] += 1
        return out

    def hard_failures(self):
        return [r for r in self.records if r.verdict == "fail"]


def errors_between(got, want):
    """(max abs, max rel) difference of two arrays/scalars.

    The relative error is normalized by max(1, |got|, |want|) so
    identities whose exact value is zero are judged absolutely.
    """
    a = np.asarray(got, dtype=float)
    b = np.asarray(want, dtype=float)
    abs_err = float(np.max(np.abs(a - b))) if a.size else 0.0
    den = max(1.0,
              float(np.max(np.abs(a))) if a.size else 0.0,
              float(np.max(np.abs(b))) if b.size else 0.0)
    return abs_err, abs_err / den


def record_from_errors(check_id, law, samples, abs_err, rel_err, tol,
                       residual=False, notes=""):
    """Build a record, deciding the verdict from the relative error.

    ``residual=True`` marks checks that report a known discrepancy: the
    verdict is ``reported-residual`` regardless of the tolerance, and
    the measured size stays in the record.
    """
    if residual:
        verdict = "reported-residual"
    else:
        verdict = "pass" if rel_err <= tol else "fail"
    return CheckRecord(check_id, law, samples, abs_err, rel_err, tol,
                       verdict, notes)


def environment_block(seed, extra=None):
    env = {
        "record": "environment",
        "tool": "finslerchange",
        "version": __version__,
        "python": platform.python_version(),
        "numpy": np.__version__,
        "seed": seed,
    }
    if extra:
        env.update(extra)
    return env


def emit_json_lines(report):
    lines = [json.dumps(report.environment, sort_keys=True)]
    for rec in report.records:
        row = {"record": "check", **asdict(rec)}
        lines.append(json.dumps(row, sort_keys=True))
    return "\n".join(lines) + "\n"


def parse_json_lines(text):
    env = None
    records = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        try:
            row = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ReportError(f"line {lineno}: not valid JSON: {exc}")
        kind = row.get("record")
        if kind == "environment":
            env = row
        elif kind == "check":
            try:
                records.append(CheckRecord(**{k: row[k] for k in _FIELDS}))
            except KeyError as exc:
                raise ReportError(f"line {lineno}: missing field {exc}")
        else:
            raise ReportError(f"line {lineno}: unknown record kind {kind!r}")
    if env is None:
        raise ReportError("no environment record found")
    return Report(env, records)


def emit_text(report):
    env = report.environment
    head = [f"finslerchange {env.get('version', '?')}  "
            f"(python {env.get('python', '?')}, numpy {env.get('numpy', '?')})",
            f"seed = {env.get('seed')}"]
    for key in sorted(env):
        if key in ("record", "tool", "version", "python", "numpy", "seed"):
            continue
        head.append(f"{key} = {env[key]}")

    rows = [("check", "law", "n", "max abs", "max rel", "tol", "verdict")]
    for r in report.records:
        rows.append((r.check_id, r.law, str(r.samples),
                     f"{r.max_abs_err:.3e}", f"{r.max_rel_err:.3e}",
                     f"{r.tol:.1e}", r.verdict))
    widths = [max(len(row[i]) for row in rows) for i in range(len(rows[0]))]
    lines = list(head)
    lines.append("")
    for k, row in enumerate(rows):
        lines.append("  ".join(cell.ljust(w) for cell, w in zip(row, widths))
                     .rstrip())
        if k == 0:
            lines.append("-" * (sum(widths) + 2 * (len(widths) - 1)))
        elif report.records[k - 1].notes:
            lines.append(f"    note: {report.records[k - 1].notes}")
    counts = report.counts()
    lines.append("")
    lines.append(f"{len(report.records)} checks: "
                 + ", ".join(f"{counts[v]} {v}" for v in VERDICTS))
    return "\n".join(lines) + "\n"
