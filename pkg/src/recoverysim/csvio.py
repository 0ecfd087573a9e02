"""CSV readers and writers for every artifact the tool exchanges.

Floats are written with 17 significant digits, enough for any double to
survive a write/read cycle unchanged. Missing values are empty fields.
"""
from __future__ import annotations

import csv
import math
from pathlib import Path
from typing import Iterable, Optional, Sequence

import numpy as np

from .calibration import CalibrationResult
from .portfolio import ScenarioSet
from .recovery import RecoveryModel, model_from_row

SCENARIO_HEADER = ["scenario_id", "x_m", "n_defaults", "p_d", "mean_recovery", "mean_loss"]
MODEL_HEADER = ["variant", "param1", "param2"]
CALIBRATION_HEADER = ["model", "window_lower", "window_upper", "param1", "param2", "n_records", "n_bins", "sse"]
RISK_HEADER = ["model", "lower_threshold", "alpha", "var", "etl", "var_ratio", "etl_ratio", "status"]


class CsvFormatError(ValueError):
    pass


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)) and not isinstance(x, bool):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return ""
    return f"{x:.17g}"


def _opt_float(s: str) -> Optional[float]:
    return None if s.strip() == "" else float(s)


def _write(path, header: Sequence[str], rows: Iterable[Sequence]):
    path = Path(path)
    if path.parent and not path.parent.exists():
        path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _read(path, header: Sequence[str]) -> list[list[str]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            got = next(reader)
        except StopIteration:
            raise CsvFormatError(f"{path}: empty file") from None
        if got != list(header):
            raise CsvFormatError(f"{path}: expected header {','.join(header)}, got {','.join(got)}")
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise CsvFormatError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
            rows.append(row)
    return rows


def write_scenarios(path, scenarios: ScenarioSet) -> None:
    rec = scenarios.mean_recovery
    rows = (
        (int(scenarios.scenario_id[i]), scenarios.x_m[i], int(scenarios.n_defaults[i]), scenarios.p_d[i],
         None if np.isnan(rec[i]) else rec[i], scenarios.mean_loss[i])
        for i in range(len(scenarios))
    )
    _write(path, SCENARIO_HEADER, rows)


def read_scenarios(path, params=None) -> ScenarioSet:
    rows = _read(path, SCENARIO_HEADER)
    if not rows:
        raise CsvFormatError(f"{path}: no scenario rows")
    try:
        cols = list(zip(*rows))
        out = ScenarioSet(
            params,
            np.array(cols[0], dtype=np.int64),
            np.array(cols[1], dtype=float),
            np.array(cols[2], dtype=np.int64),
            np.array(cols[3], dtype=float),
            np.array([np.nan if v.strip() == "" else float(v) for v in cols[4]], dtype=float),
            np.array(cols[5], dtype=float),
        )
    except ValueError as exc:
        raise CsvFormatError(f"{path}: {exc}") from None
    return out


def write_models(path, models: Iterable[RecoveryModel]) -> None:
    _write(path, MODEL_HEADER, ((m.name, *m.params) for m in models))


def read_models(path) -> list[RecoveryModel]:
    try:
        return [model_from_row(v, p1, _opt_float(p2)) for v, p1, p2 in _read(path, MODEL_HEADER)]
    except (TypeError, ValueError) as exc:
        raise CsvFormatError(f"{path}: {exc}") from None


def calibration_row(res: CalibrationResult):
    p1, p2 = res.model.params
    return (res.model.name, res.window.lower, res.window.upper, p1, p2, res.n_records, res.n_bins, res.sse)


def write_calibration(path, results: Iterable[CalibrationResult]) -> None:
    _write(path, CALIBRATION_HEADER, (calibration_row(r) for r in results))


def read_calibration(path) -> list[dict]:
    out = []
    for row in _read(path, CALIBRATION_HEADER):
        out.append({
            "model": row[0],
            "window_lower": float(row[1]),
            "window_upper": float(row[2]),
            "param1": float(row[3]),
            "param2": _opt_float(row[4]),
            "n_records": int(row[5]),
            "n_bins": None if row[6] == "" else int(row[6]),
            "sse": float(row[7]),
        })
    return out


def write_risk(path, rows) -> None:
    _write(path, RISK_HEADER, (
        (r.model, r.lower_threshold, r.alpha, r.var, r.etl, r.var_ratio, r.etl_ratio, r.status) for r in rows
    ))


def read_risk(path) -> list[dict]:
    out = []
    for row in _read(path, RISK_HEADER):
        out.append({
            "model": row[0],
            "lower_threshold": _opt_float(row[1]),
            "alpha": float(row[2]),
            "var": _opt_float(row[3]),
            "etl": _opt_float(row[4]),
            "var_ratio": _opt_float(row[5]),
            "etl_ratio": _opt_float(row[6]),
            "status": row[7],
        })
    return out


def write_table(path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    _write(path, header, rows)
