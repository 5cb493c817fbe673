"""CSV ingestion and JSON/CSV report emission."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import TYPE_CHECKING, Any

import numpy as np

from jumpreg.core import Dataset, StepFit
from jumpreg.errors import EmptyFile, InputError, ParseError

if TYPE_CHECKING:
    from jumpreg.selection import CriterionScore

MODEL_COLUMNS = (
    "model_label",
    "family",
    "d_or_degree",
    "loglik_max",
    "bias_or_penalty",
    "score",
    "sigma0_hat",
    "winner",
)


def _parse_float(text: str, line: int) -> float:
    try:
        v = float(text)
    except ValueError:
        raise ParseError(f"not a number: {text.strip()!r}", line) from None
    if not math.isfinite(v):
        raise ParseError(f"non-finite value {text.strip()!r}", line)
    return v


def ingest_csv(path: str | Path, header: bool = True) -> Dataset:
    """Read two comma-separated numeric columns ``x,y`` into a sorted :class:`Dataset`.

    With ``header`` the first line names the columns.  Blank lines are
    skipped; CRLF line endings are accepted.
    """
    try:
        raw = Path(path).read_bytes()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        text = raw.decode("utf-8-sig")
    except UnicodeDecodeError as exc:
        raise ParseError(f"not valid UTF-8 ({exc.reason})") from None
    xs, ys = [], []
    seen_header = not header
    for lineno, row in enumerate(csv.reader(io.StringIO(text, newline="")), start=1):
        if not row or all(not f.strip() for f in row):
            continue
        if len(row) != 2:
            raise ParseError(f"expected 2 fields, found {len(row)}", lineno)
        if not seen_header:
            seen_header = True
            try:
                float(row[0]), float(row[1])
            except ValueError:
                continue
            raise ParseError("expected a header row such as 'x,y'", lineno)
        xs.append(_parse_float(row[0], lineno))
        ys.append(_parse_float(row[1], lineno))
    if not xs:
        raise EmptyFile(f"{path} contains no data rows")
    return Dataset.from_arrays(xs, ys)


def step_trace(fit: StepFit) -> list[tuple[float, float]]:
    """Plot-ready corners of a fitted step function: window start and end per level."""
    lo, hi = fit.x_range
    edges = [lo, *map(float, fit.breakpoints), hi]
    out = []
    for j, level in enumerate(fit.levels):
        out.append((edges[j], float(level)))
        out.append((edges[j + 1], float(level)))
    return out


def fit_record(fit: StepFit, cis: list[tuple[float, float]] | None = None) -> dict:
    rec = {
        "d": fit.d,
        "breakpoints": [float(b) for b in fit.breakpoints],
        "levels": [float(a) for a in fit.levels],
        "sigma0": fit.sigma0_hat,
        "rss": fit.rss,
        "loglik_max": fit.loglik_max,
        "rss_floored": fit.rss_floored,
    }
    if cis is not None:
        rec["ci"] = [[float(a), float(b)] for a, b in cis]
    return rec


def score_record(s: CriterionScore) -> dict:
    return asdict(s)


@dataclass
class Report:
    """Everything a command emits.

    ``meta["timestamp"]`` is the only field allowed to differ between runs
    with the same configuration and seed.
    """

    meta: dict
    models: list[dict] = field(default_factory=list)
    fits: list[dict] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    summary: dict | None = None
    traces: list[list[tuple[float, float]]] = field(default_factory=list)

    def to_dict(self) -> dict:
        out: dict[str, Any] = {
            "meta": self.meta,
            "models": self.models,
            "fits": self.fits,
            "diagnostics": {"warnings": self.warnings},
        }
        if self.summary is not None:
            out["summary"] = self.summary
        return out


def _jsonable(obj: Any) -> Any:
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return obj


def report_json(report: Report) -> str:
    return json.dumps(_jsonable(report.to_dict()), indent=2, sort_keys=True) + "\n"


def report_csv(report: Report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if report.models or not report.fits:
        w.writerow(MODEL_COLUMNS)
        for m in report.models:
            w.writerow(
                [
                    m["model_label"],
                    m["family"],
                    m["d_or_degree"],
                    repr(float(m["loglik_max"])),
                    repr(float(m["bias_or_penalty"])),
                    repr(float(m["score"])),
                    repr(float(m["extras"].get("sigma0_hat", math.nan))),
                    int(m["winner"]),
                ]
            )
    else:
        w.writerow(("fit", "window", "start", "end", "level", "ci_lo", "ci_hi"))
        for i, (f, trace) in enumerate(zip(report.fits, report.traces)):
            cis = f.get("ci", [])
            for j, level in enumerate(f["levels"]):
                ci = cis[j] if j < len(cis) else ("", "")
                w.writerow((i, j + 1, repr(trace[2 * j][0]), repr(trace[2 * j + 1][0]), repr(level), *ci))
    return buf.getvalue()


def trace_csv(trace: list[tuple[float, float]]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(("x", "fitted"))
    for x, v in trace:
        w.writerow((repr(x), repr(v)))
    return buf.getvalue()


def emit_report(report: Report, fmt: str = "json", path: str | Path | None = None,
                trace_path: str | Path | None = None) -> str:
    """Serialise ``report``; write it to ``path`` when given and return the text.

    ``trace_path`` receives the two-column step trace of the first fit.
    """
    if fmt == "json":
        text = report_json(report)
    elif fmt == "csv":
        text = report_csv(report)
    else:
        raise InputError(f"unknown output format {fmt!r}")
    try:
        if path is not None:
            Path(path).write_text(text, encoding="utf-8", newline="")
        if trace_path is not None and report.traces:
            Path(trace_path).write_text(trace_csv(report.traces[0]), encoding="utf-8", newline="")
    except OSError as exc:
        raise OSError(f"cannot write report: {exc.strerror}") from exc
    return text
