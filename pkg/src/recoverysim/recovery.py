"""Recovery-rate models: constant, probit in the market return, and the
one-parameter structural relation between recovery and default probability.

The structural functions are vectorised over ``p_d``. At ``p_d`` in {0, 1}
the quantile diverges, so :func:`model_recovery` and the loss helpers clamp
``p_d`` into ``[PD_CLAMP, 1 - PD_CLAMP]`` first.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np

from .gaussmath import std_normal_cdf, std_normal_quantile

PD_CLAMP = 1e-12


@dataclass(frozen=True)
class Constant:
    r_bar: float

    def __post_init__(self):
        if not 0.0 <= self.r_bar <= 1.0:
            raise ValueError(f"constant recovery must lie in [0, 1], got {self.r_bar}")

    name = "constant"

    @property
    def params(self):
        return (self.r_bar, None)


@dataclass(frozen=True)
class Probit:
    gamma: float
    delta: float

    name = "probit"

    @property
    def params(self):
        return (self.gamma, self.delta)


@dataclass(frozen=True)
class Structural:
    B: float

    def __post_init__(self):
        if not self.B > 0:
            raise ValueError(f"structural B must be positive, got {self.B}")

    name = "structural"

    @property
    def params(self):
        return (self.B, None)


RecoveryModel = Union[Constant, Probit, Structural]


def probit_recovery(x_m, gamma: float, delta: float):
    """Expected recovery ``Phi(-gamma * x_m - delta)``."""
    return std_normal_cdf(-gamma * np.asarray(x_m, dtype=float) - delta)


def _check_structural(p_d, B):
    p = np.asarray(p_d, dtype=float)
    if not B > 0:
        raise ValueError(f"B must be positive, got {B}")
    if not np.all((p > 0.0) & (p < 1.0)):
        raise ValueError("default probability must lie strictly inside (0, 1)")
    return p


def _recovered_mass(p, B):
    # p * R(p) = exp(-B*z + B^2/2) * Phi(z - B), z = Phi^-1(p)
    z = std_normal_quantile(p)
    return np.exp(-B * z + 0.5 * B * B) * std_normal_cdf(z - B)


def structural_recovery(p_d, B: float):
    """Structural expected recovery at default probability ``p_d``.

    Decreasing in both ``p_d`` and ``B``; tends to 1 as ``p_d -> 0``.

    Raises
    ------
    ValueError
        For ``p_d`` outside (0, 1) or ``B <= 0``.
    """
    p = _check_structural(p_d, B)
    out = _recovered_mass(p, B) / p
    return float(out) if np.ndim(out) == 0 else out


def structural_expected_loss(p_d, B: float):
    """Expected portfolio loss ``p_d * (1 - R(p_d))`` under the structural relation."""
    p = _check_structural(p_d, B)
    out = p - _recovered_mass(p, B)
    return float(out) if np.ndim(out) == 0 else out


def structural_b_closed_form(c: float, sigma: float, maturity: float) -> float:
    """``B`` of the correlated diffusion: ``sqrt((1 - c) * sigma^2 * T)``."""
    return math.sqrt((1.0 - c) * sigma * sigma * maturity)


def clamp_pd(p_d):
    return np.clip(np.asarray(p_d, dtype=float), PD_CLAMP, 1.0 - PD_CLAMP)


def recovery_from_arrays(model: RecoveryModel, x_m, p_d) -> np.ndarray:
    """Model recovery for arrays of market returns and default fractions.

    Scenarios without defaults get recovery 1 under the structural model
    (its ``p_d -> 0`` limit); other models ignore ``p_d`` here.
    """
    x_m = np.asarray(x_m, dtype=float)
    p_d = np.asarray(p_d, dtype=float)
    if isinstance(model, Constant):
        return np.full(np.shape(x_m), model.r_bar)
    if isinstance(model, Probit):
        return np.asarray(probit_recovery(x_m, model.gamma, model.delta), dtype=float)
    if isinstance(model, Structural):
        r = np.asarray(structural_recovery(clamp_pd(p_d), model.B), dtype=float)
        return np.where(p_d <= 0.0, 1.0, r)
    raise TypeError(f"unknown recovery model {model!r}")


def model_recovery(model: RecoveryModel, record) -> float:
    """Recovery the model assigns to one :class:`~recoverysim.portfolio.ScenarioRecord`."""
    return float(recovery_from_arrays(model, record.x_m, record.p_d))


def model_from_row(variant: str, param1, param2=None) -> RecoveryModel:
    variant = variant.strip().lower()
    if variant == "constant":
        return Constant(float(param1))
    if variant == "probit":
        return Probit(float(param1), float(param2))
    if variant == "structural":
        return Structural(float(param1))
    raise ValueError(f"unknown recovery model variant {variant!r}")
