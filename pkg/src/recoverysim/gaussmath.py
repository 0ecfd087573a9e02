"""Gaussian and shifted-lognormal helpers.

``std_normal_cdf`` and ``std_normal_quantile`` accept scalars or arrays and
return the same shape. Both are thin wrappers over the Cephes routines in
``scipy.special``; the quantile gets one Newton refinement on the cdf, carried
out in whichever tail is closer so that probabilities near 1 are not
degraded by cancellation.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import special

_INV_SQRT_2PI = 1.0 / math.sqrt(2.0 * math.pi)


def std_normal_cdf(x):
    """Standard normal distribution function."""
    out = special.ndtr(x)
    return float(out) if np.ndim(out) == 0 else out


def std_normal_pdf(x):
    out = _INV_SQRT_2PI * np.exp(-0.5 * np.square(x))
    return float(out) if np.ndim(out) == 0 else out


def _lower_quantile(q):
    # q <= 0.5; Newton step on the lower tail where ndtr keeps relative accuracy
    x = special.ndtri(q)
    dens = _INV_SQRT_2PI * np.exp(-0.5 * x * x)
    with np.errstate(divide="ignore", invalid="ignore"):
        step = (special.ndtr(x) - q) / dens
    step = np.where(np.isfinite(step), step, 0.0)
    return x - step


def std_normal_quantile(p):
    """Inverse of :func:`std_normal_cdf` on the open interval (0, 1).

    Raises
    ------
    ValueError
        If any probability lies outside (0, 1) or is NaN.
    """
    arr = np.asarray(p, dtype=float)
    if not np.all((arr > 0.0) & (arr < 1.0)):
        raise ValueError("std_normal_quantile requires 0 < p < 1")
    upper = arr > 0.5
    q = np.where(upper, 1.0 - arr, arr)
    x = _lower_quantile(q)
    x = np.where(upper, -x, x)
    return float(x) if x.ndim == 0 else x


@dataclass(frozen=True)
class JumpSizeParams:
    """Jump size distribution, with ``Λ + 1`` lognormal.

    ``mean_shifted`` and ``sd_shifted`` are the mean and standard deviation
    of ``Λ + 1``; ``mu_log`` and ``sigma_log`` the matching log-space
    location and scale.
    """

    mean_shifted: float
    sd_shifted: float
    mu_log: float
    sigma_log: float

    @classmethod
    def from_log(cls, mu_log: float, sigma_log: float) -> "JumpSizeParams":
        if sigma_log < 0:
            raise ValueError("sigma_log must be nonnegative")
        s2 = sigma_log * sigma_log
        mean = math.exp(mu_log + 0.5 * s2)
        sd = math.sqrt(math.expm1(s2)) * mean
        return cls(mean, sd, mu_log, sigma_log)


def shifted_lognormal_params(mean_shifted: float, sd_shifted: float) -> JumpSizeParams:
    """Invert the lognormal moment formulas for ``Λ + 1``.

    >>> p = shifted_lognormal_params(1.0, 0.0)
    >>> (p.mu_log, p.sigma_log)
    (0.0, 0.0)
    """
    if not mean_shifted > 0:
        raise ValueError(f"jump mean must be positive, got {mean_shifted}")
    if not sd_shifted >= 0:
        raise ValueError(f"jump sd must be nonnegative, got {sd_shifted}")
    ratio = sd_shifted / mean_shifted
    s2 = math.log1p(ratio * ratio)
    return JumpSizeParams(
        mean_shifted=float(mean_shifted),
        sd_shifted=float(sd_shifted),
        mu_log=math.log(mean_shifted) - 0.5 * s2,
        sigma_log=math.sqrt(s2),
    )
