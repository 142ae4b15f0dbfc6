"""Readers and validation for the solver's CSV/JSON artifacts.

The renderers consume files only: JSON reports for the three log-log
figure kinds (the slope overlay is read from the report, never refit) and
per-path trajectory CSVs for the panel figure. Validation failures raise
PlotInputError naming the offending column or field.
"""
from __future__ import annotations

import csv
import glob
import json
import math
from dataclasses import dataclass
from pathlib import Path


class PlotInputError(Exception):
    """Input artifact missing, malformed, or unusable for the figure."""


TRAJECTORY_COLUMNS = ("tau", "x_pre", "a", "x_post", "gain_cum")

# kind -> (report kind, y column, slope field, x label, y label, invert x)
REPORT_KINDS = {
    "value_error": ("convergence", "value_error", "value_slope",
                    "epsilon", "sup error", False),
    "policy_error": ("convergence", "policy_gap", "gap_slope",
                     "epsilon", "policy gap", False),
    "cost": ("bench", "jump_seconds", "time_slope",
             "1/epsilon", "jump solve seconds", True),
}


@dataclass(frozen=True)
class SeriesData:
    """Points plus the report's fitted slope for one log-log figure."""

    x: tuple[float, ...]
    y: tuple[float, ...]
    slope: float
    x_label: str
    y_label: str


@dataclass(frozen=True)
class TrajectoryData:
    label: str
    taus: tuple[float, ...]
    x_pre: tuple[float, ...]
    x_post: tuple[float, ...]


def expand_inputs(pattern: str) -> list[Path]:
    paths = sorted(glob.glob(pattern, recursive=True))
    if not paths:
        raise PlotInputError(f"no files match {pattern!r}")
    return [Path(p) for p in paths]


def _positive_float(value, column: str, path) -> float | None:
    """None passes through (a failed run's null); anything else must be a
    strictly positive finite number."""
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise PlotInputError(f"{path}: column {column!r} is not a number: {value!r}")
    value = float(value)
    if not (math.isfinite(value) and value > 0):
        return None
    return value


def load_series(kind: str, path: Path) -> SeriesData:
    report_kind, y_col, slope_field, x_label, y_label, invert = REPORT_KINDS[kind]
    try:
        doc = json.loads(Path(path).read_text())
    except OSError as exc:
        raise PlotInputError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise PlotInputError(f"{path}: not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise PlotInputError(f"{path}: report must be a JSON object")
    if "kind" not in doc:
        raise PlotInputError(f"{path}: missing field 'kind'")
    if doc["kind"] != report_kind:
        raise PlotInputError(
            f"{path}: field 'kind' is {doc['kind']!r}, need {report_kind!r}"
        )
    rows = doc.get("rows")
    if not isinstance(rows, list):
        raise PlotInputError(f"{path}: missing field 'rows'")

    xs, ys = [], []
    for row in rows:
        if not isinstance(row, dict):
            raise PlotInputError(f"{path}: rows must be JSON objects")
        for column in ("epsilon", y_col):
            if column not in row:
                raise PlotInputError(f"{path}: row missing column {column!r}")
        if row.get("failure") is not None:
            continue
        eps = _positive_float(row["epsilon"], "epsilon", path)
        y = _positive_float(row[y_col], y_col, path)
        if eps is None or y is None:
            continue
        xs.append(1.0 / eps if invert else eps)
        ys.append(y)
    if not xs:
        raise PlotInputError(f"{path}: no usable rows for column {y_col!r}")

    if slope_field not in doc:
        raise PlotInputError(f"{path}: missing field {slope_field!r}")
    slope = doc[slope_field]
    if not isinstance(slope, (int, float)) or isinstance(slope, bool):
        raise PlotInputError(
            f"{path}: field {slope_field!r} is {slope!r}; the report has no "
            "fitted slope to overlay"
        )

    order = sorted(range(len(xs)), key=xs.__getitem__)
    return SeriesData(
        x=tuple(xs[i] for i in order),
        y=tuple(ys[i] for i in order),
        slope=float(slope),
        x_label=x_label,
        y_label=y_label,
    )


def load_trajectory(path: Path) -> TrajectoryData:
    path = Path(path)
    try:
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            body = list(reader)
    except OSError as exc:
        raise PlotInputError(f"cannot read {path}: {exc}") from exc
    if header is None:
        raise PlotInputError(f"{path}: empty file")
    for column in TRAJECTORY_COLUMNS:
        if column not in header:
            raise PlotInputError(f"{path}: missing column {column!r}")
    if not body:
        raise PlotInputError(f"{path}: no jump rows")

    idx = {column: header.index(column) for column in TRAJECTORY_COLUMNS}

    def pull(column: str) -> tuple[float, ...]:
        out = []
        for row in body:
            cell = row[idx[column]] if idx[column] < len(row) else ""
            try:
                out.append(float(cell))
            except ValueError:
                raise PlotInputError(
                    f"{path}: column {column!r} has non-numeric cell {cell!r}"
                ) from None
        return tuple(out)

    return TrajectoryData(
        label=path.stem,
        taus=pull("tau"),
        x_pre=pull("x_pre"),
        x_post=pull("x_post"),
    )
