"""Fit recovery models to a window of simulated scenarios.

The probit model is fitted on binned data: scenarios are grouped in
``bin_width`` intervals of the market return, each bin's mean recovery is
mapped through the normal quantile, and a straight line is fitted to those
points with equal weight per bin. Transforming per scenario instead would
blow up on the many scenarios with recovery exactly 1.

The structural parameter ``B`` is a one-dimensional least-squares problem,
solved by a log-spaced grid scan followed by golden-section refinement.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .gaussmath import std_normal_cdf, std_normal_quantile
from .portfolio import ScenarioSet
from .recovery import Constant, Probit, RecoveryModel, Structural, clamp_pd

B_MIN = 1e-4
B_MAX = 5.0
B_TOL = 1e-8
_GRID_POINTS = 161
_INVPHI = (math.sqrt(5.0) - 1.0) / 2.0


class CalibrationError(ValueError):
    pass


class FitMode(str, enum.Enum):
    RECOVERY_SPACE = "recovery_space"
    LOSS_SPACE = "loss_space"


@dataclass(frozen=True)
class CalibrationWindow:
    lower: float = -1.0
    upper: float = 0.0
    bin_width: float = 0.01
    min_bin_count: int = 5

    def __post_init__(self):
        if not self.lower < self.upper:
            raise ValueError(f"window lower ({self.lower}) must be below upper ({self.upper})")
        if not self.bin_width > 0:
            raise ValueError("bin_width must be positive")
        if self.min_bin_count < 1:
            raise ValueError("min_bin_count must be at least 1")


@dataclass(frozen=True)
class BinPoint:
    x_center: float
    mean_recovery: float
    mean_p_d: float
    mean_loss: float
    b_value: float
    count: int


@dataclass(frozen=True)
class CalibrationResult:
    model: RecoveryModel
    window: CalibrationWindow
    n_records: int
    n_bins: Optional[int]
    sse: float


def filter_scenarios(scenarios: ScenarioSet, window: CalibrationWindow) -> ScenarioSet:
    """Scenarios with ``lower <= x_m < upper`` and at least one default, in order."""
    x = scenarios.x_m
    mask = (x >= window.lower) & (x < window.upper) & (scenarios.n_defaults > 0)
    return scenarios.subset(mask)


def _bin_index(x, window: CalibrationWindow):
    # bins are anchored at the upper edge so windows sharing it share bins
    n_bins = max(1, math.ceil((window.upper - window.lower) / window.bin_width - 1e-9))
    idx = np.floor((window.upper - x) / window.bin_width).astype(np.int64)
    return np.clip(idx, 0, n_bins - 1), n_bins


def bin_scenarios(filtered: ScenarioSet, window: CalibrationWindow) -> list[BinPoint]:
    """Average defaulted scenarios over market-return bins.

    Bins with fewer than ``min_bin_count`` scenarios, or with mean recovery
    not strictly inside (0, 1), are dropped.

    Raises
    ------
    CalibrationError
        If no bin survives.
    """
    if len(filtered) == 0:
        raise CalibrationError("empty calibration window")
    idx, n_bins = _bin_index(filtered.x_m, window)
    counts = np.bincount(idx, minlength=n_bins)
    with np.errstate(invalid="ignore", divide="ignore"):
        rec = np.bincount(idx, weights=filtered.mean_recovery, minlength=n_bins) / counts
        pd = np.bincount(idx, weights=filtered.p_d, minlength=n_bins) / counts
        loss = np.bincount(idx, weights=filtered.mean_loss, minlength=n_bins) / counts
    points = []
    for i in range(n_bins - 1, -1, -1):
        if counts[i] < window.min_bin_count or not 0.0 < rec[i] < 1.0:
            continue
        hi = window.upper - i * window.bin_width
        lo = max(hi - window.bin_width, window.lower)
        points.append(
            BinPoint(
                x_center=0.5 * (lo + hi),
                mean_recovery=float(rec[i]),
                mean_p_d=float(pd[i]),
                mean_loss=float(loss[i]),
                b_value=std_normal_quantile(float(rec[i])),
                count=int(counts[i]),
            )
        )
    if not points:
        raise CalibrationError("no usable bins in calibration window")
    return points


def _ols(x, y):
    xm = x.mean()
    ym = y.mean()
    sxx = np.sum((x - xm) ** 2)
    slope = np.sum((x - xm) * (y - ym)) / sxx
    return slope, ym - slope * xm


def fit_probit(bins: Sequence[BinPoint]) -> Probit:
    """Least-squares line through the bins' ``(x_center, b_value)`` points.

    Raises
    ------
    CalibrationError
        With fewer than two distinct bin centres.
    """
    x = np.array([b.x_center for b in bins], dtype=float)
    y = np.array([b.b_value for b in bins], dtype=float)
    if len(np.unique(x)) < 2:
        raise CalibrationError("probit fit needs at least two distinct bins")
    slope, intercept = _ols(x, y)
    return Probit(gamma=float(-slope), delta=float(-intercept))


def probit_sse(model: Probit, bins: Sequence[BinPoint]) -> float:
    x = np.array([b.x_center for b in bins])
    y = np.array([b.b_value for b in bins])
    return float(np.sum((y + model.gamma * x + model.delta) ** 2))


def fit_constant(filtered: ScenarioSet) -> Constant:
    """Unweighted mean of the scenarios' mean recovery."""
    if len(filtered) == 0:
        raise CalibrationError("empty calibration window")
    rec = filtered.mean_recovery
    if np.isnan(rec).any():
        raise CalibrationError("constant fit needs scenarios with defaults only")
    return Constant(float(min(max(rec.mean(), 0.0), 1.0)))


class _StructuralObjective:
    """Sum of squared residuals in ``B``, with the quantiles cached."""

    def __init__(self, p_d, target, mode: FitMode):
        p = clamp_pd(p_d)
        self.p = p
        self.z = std_normal_quantile(p)
        self.target = np.asarray(target, dtype=float)
        self.mode = FitMode(mode)

    def __call__(self, B: float) -> float:
        mass = np.exp(-B * self.z + 0.5 * B * B) * std_normal_cdf(self.z - B)
        if self.mode is FitMode.RECOVERY_SPACE:
            fitted = mass / self.p
        else:
            fitted = self.p - mass
        r = self.target - fitted
        return float(np.dot(r, r))


def golden_section(f, a: float, b: float, tol: float = B_TOL, max_iter: int = 200):
    """Minimise a unimodal ``f`` on ``[a, b]`` until the bracket is narrower than ``tol``."""
    c = b - _INVPHI * (b - a)
    d = a + _INVPHI * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(max_iter):
        if b - a <= tol:
            break
        if fc < fd:
            b, d, fd = d, c, fc
            c = b - _INVPHI * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + _INVPHI * (b - a)
            fd = f(d)
    else:
        raise CalibrationError("golden-section search did not converge")
    x = 0.5 * (a + b)
    return x, f(x)


def fit_structural_arrays(p_d, target, mode: FitMode = FitMode.LOSS_SPACE) -> tuple[float, float]:
    """Fit ``B`` to default fractions and observed recoveries (or losses).

    Returns ``(B, sse)``.
    """
    p_d = np.asarray(p_d, dtype=float)
    if p_d.size == 0:
        raise CalibrationError("empty calibration window")
    objective = _StructuralObjective(p_d, target, mode)
    grid = np.geomspace(B_MIN, B_MAX, _GRID_POINTS)
    values = np.array([objective(b) for b in grid])
    i = int(np.argmin(values))
    if i == 0 or i == len(grid) - 1:
        raise CalibrationError(f"no interior minimum for B in [{B_MIN}, {B_MAX}]")
    return golden_section(objective, grid[i - 1], grid[i + 1])


def fit_structural(filtered: ScenarioSet, mode: FitMode = FitMode.LOSS_SPACE) -> Structural:
    B, _ = _fit_structural_sse(filtered, mode)
    return Structural(B)


def _fit_structural_sse(filtered: ScenarioSet, mode):
    if len(filtered) == 0:
        raise CalibrationError("empty calibration window")
    mode = FitMode(mode)
    target = filtered.mean_recovery if mode is FitMode.RECOVERY_SPACE else filtered.mean_loss
    return fit_structural_arrays(filtered.p_d, target, mode)


def calibrate(
    scenarios: ScenarioSet,
    model_name: str,
    window: CalibrationWindow,
    mode: FitMode = FitMode.LOSS_SPACE,
) -> CalibrationResult:
    """Filter, fit one model by name, and report fit diagnostics."""
    filtered = filter_scenarios(scenarios, window)
    if len(filtered) == 0:
        raise CalibrationError("empty calibration window")
    name = model_name.strip().lower()
    if name == "constant":
        model = fit_constant(filtered)
        resid = filtered.mean_recovery - model.r_bar
        return CalibrationResult(model, window, len(filtered), None, float(np.dot(resid, resid)))
    if name == "probit":
        bins = bin_scenarios(filtered, window)
        model = fit_probit(bins)
        return CalibrationResult(model, window, len(filtered), len(bins), probit_sse(model, bins))
    if name == "structural":
        B, sse = _fit_structural_sse(filtered, mode)
        return CalibrationResult(Structural(B), window, len(filtered), None, sse)
    raise ValueError(f"unknown model {model_name!r}")
