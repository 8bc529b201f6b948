"""Trajectory CSV files, key=value summaries and JSON reports.

Floats are written with ``repr`` so files round-trip exactly.  Unreached
stopping times are written as ``not-reached``; NaN becomes ``nan`` in text
files and ``null`` in JSON; infinities are spelled out as strings.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict
from pathlib import Path

import numpy as np

from .harness import COLUMNS, EnsembleReport, OrderReport, TrajectoryRecord

NOT_REACHED = "not-reached"


def format_value(x) -> str:
    if x is None:
        return NOT_REACHED
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_trajectory_csv(record: TrajectoryRecord, path) -> Path:
    """One row per recorded step, columns in the fixed monitor order."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(COLUMNS)
        for row in record.rows():
            w.writerow([format_value(float(x)) for x in row])
    return path


def read_trajectory_csv(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    data = np.array([[float(x) for x in r] for r in body]).reshape(len(body), len(header))
    return {name: data[:, k] for k, name in enumerate(header)}


def write_key_values(values: dict, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text("".join(f"{k}={format_value(v)}\n" for k, v in values.items()))
    return path


def read_key_values(path) -> dict[str, str]:
    out = {}
    for line in Path(path).read_text().splitlines():
        if line.strip():
            key, _, value = line.partition("=")
            out[key] = value
    return out


def _json_safe(x):
    if isinstance(x, dict):
        return {str(k): _json_safe(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_json_safe(v) for v in x]
    if isinstance(x, np.ndarray):
        return [_json_safe(v) for v in x.tolist()]
    if isinstance(x, (np.floating, float)):
        x = float(x)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, np.bool_):
        return bool(x)
    return x


def report_document(report: EnsembleReport) -> dict:
    trajectories = []
    for s in report.trajectories:
        d = asdict(s)
        d["stop_time"] = NOT_REACHED if s.stop_time is None else s.stop_time
        trajectories.append(d)
    agg = dict(report.aggregates)
    if agg.get("barrier_K") is None:
        agg["barrier_K"] = "inf"
    return {"aggregates": agg, "trajectories": trajectories}


def write_report_json(report: EnsembleReport, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(_json_safe(report_document(report)), sort_keys=True, indent=1,
                      allow_nan=False)
    path.write_text(text + "\n")
    return path


def write_ensemble_outputs(report: EnsembleReport, directory) -> tuple[Path, Path]:
    """``summary.txt`` (flat key=value) and ``report.json`` in ``directory``."""
    directory = Path(directory)
    agg = dict(report.aggregates)
    if agg.get("barrier_K") is None:
        agg["barrier_K"] = "inf"
    return (write_key_values(agg, directory / "summary.txt"),
            write_report_json(report, directory / "report.json"))


def order_values(report: OrderReport) -> dict:
    out = {"scheme": report.scheme, "reference": report.reference, "n_paths": report.n_paths,
           "slope": report.slope}
    for k, (dt, err) in enumerate(zip(report.dts, report.errors)):
        out[f"dt_{k}"] = float(dt)
        out[f"error_{k}"] = float(err)
    return out
