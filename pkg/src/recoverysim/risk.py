"""Value at Risk and Expected Tail Loss on per-scenario loss samples.

VaR at level ``alpha`` is the ``ceil(alpha*M)``-th smallest loss, and ETL the
mean of the ``ceil((1-alpha)*M)`` largest. For losses that are monotone in
the market return (or in the default fraction) these are exactly the
quantile-of-the-risk-factor recipes, and they stay well defined when the raw
data is not monotone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .calibration import (
    CalibrationError,
    CalibrationWindow,
    FitMode,
    bin_scenarios,
    filter_scenarios,
    fit_constant,
    fit_probit,
    fit_structural,
)
from .portfolio import ScenarioSet
from .recovery import RecoveryModel, recovery_from_arrays

MODEL_NAMES = ("constant", "probit", "structural")


@dataclass(frozen=True)
class RiskReport:
    alpha: float
    var: float
    etl: float
    var_ratio: Optional[float] = None
    etl_ratio: Optional[float] = None


@dataclass(frozen=True)
class SweepRow:
    model: str
    lower_threshold: Optional[float]
    alpha: float
    var: Optional[float]
    etl: Optional[float]
    var_ratio: Optional[float]
    etl_ratio: Optional[float]
    status: str
    fitted: Optional[RecoveryModel] = None


def _counts(m: int, alpha: float):
    if not 0.0 < alpha < 1.0:
        raise ValueError(f"alpha must lie in (0, 1), got {alpha}")
    # round away float noise such as 0.99 * 1000 = 989.9999999999999
    k = math.ceil(round(alpha * m, 9))
    tail = math.ceil(round((1.0 - alpha) * m, 9))
    if m < 1 or round((1.0 - alpha) * m, 9) < 1.0:
        raise ValueError(f"{m} samples are too few for alpha={alpha}")
    return k, tail


def value_at_risk(losses, alpha: float) -> float:
    """``ceil(alpha * M)``-th smallest loss. Needs ``M >= 1 / (1 - alpha)``.

    >>> value_at_risk([0.001 * i for i in range(1, 1001)], 0.99)
    0.99
    """
    x = np.asarray(losses, dtype=float)
    k, _ = _counts(x.size, alpha)
    return float(np.partition(x, k - 1)[k - 1])


def expected_tail_loss(losses, alpha: float) -> float:
    """Mean of the ``ceil((1 - alpha) * M)`` largest losses."""
    x = np.sort(np.asarray(losses, dtype=float))
    k, tail = _counts(x.size, alpha)
    # every tail point sits at or above the VaR order statistic; averaging the
    # excesses keeps ETL >= VaR in floating point too
    var = x[k - 1]
    return float(var + np.mean(x[x.size - tail:] - var))


def risk_report(losses, alpha: float, baseline: Optional[RiskReport] = None) -> RiskReport:
    var = value_at_risk(losses, alpha)
    etl = expected_tail_loss(losses, alpha)
    if baseline is None:
        return RiskReport(alpha, var, etl)
    return RiskReport(alpha, var, etl, var / baseline.var, etl / baseline.etl)


def model_losses(scenarios: ScenarioSet, model: RecoveryModel) -> np.ndarray:
    """Per-scenario loss ``p_d * (1 - R)`` with ``p_d`` taken from the simulation."""
    rec = recovery_from_arrays(model, scenarios.x_m, scenarios.p_d)
    return scenarios.p_d * (1.0 - rec)


def empirical_report(scenarios: ScenarioSet, alpha: float) -> RiskReport:
    return risk_report(scenarios.mean_loss, alpha)


def fit_model(
    scenarios: ScenarioSet, name: str, window: CalibrationWindow, mode: FitMode = FitMode.LOSS_SPACE
) -> RecoveryModel:
    filtered = filter_scenarios(scenarios, window)
    if len(filtered) == 0:
        raise CalibrationError("empty calibration window")
    if name == "constant":
        return fit_constant(filtered)
    if name == "probit":
        return fit_probit(bin_scenarios(filtered, window))
    if name == "structural":
        return fit_structural(filtered, mode)
    raise ValueError(f"unknown model {name!r}")


def risk_sweep(
    scenarios: ScenarioSet,
    lower_thresholds: Sequence[float],
    alpha: float,
    window_defaults: CalibrationWindow = CalibrationWindow(),
    models: Sequence[str] = MODEL_NAMES,
    mode: FitMode = FitMode.LOSS_SPACE,
) -> list[SweepRow]:
    """VaR/ETL of each model calibrated on ``[lower, upper)``, normalised to
    the empirical measures of the whole scenario set.

    The first row is the empirical baseline. A threshold whose calibration
    fails yields a row with status ``calibration_error`` and no numbers;
    the rest of the sweep carries on.
    """
    thresholds = list(lower_thresholds)
    if thresholds != sorted(thresholds):
        raise ValueError("lower thresholds must be sorted ascending")
    if any(t >= window_defaults.upper for t in thresholds):
        raise ValueError("every lower threshold must be below the window's upper edge")
    base = empirical_report(scenarios, alpha)
    rows = [SweepRow("empirical", None, alpha, base.var, base.etl, None, None, "ok")]
    for name in models:
        for lower in thresholds:
            window = CalibrationWindow(lower, window_defaults.upper, window_defaults.bin_width,
                                       window_defaults.min_bin_count)
            try:
                model = fit_model(scenarios, name, window, mode)
            except CalibrationError:
                rows.append(SweepRow(name, lower, alpha, None, None, None, None, "calibration_error"))
                continue
            rep = risk_report(model_losses(scenarios, model), alpha, base)
            rows.append(SweepRow(name, lower, alpha, rep.var, rep.etl, rep.var_ratio, rep.etl_ratio, "ok", model))
    return rows
