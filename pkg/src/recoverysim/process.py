"""Correlated jump-diffusion for firm asset values, discretised by an Euler product.

Each step multiplies the asset value by::

    1 + mu*dt + sqrt(c)*sigma*sqrt(dt)*eta + dJ_market
      + sqrt(1-c)*sigma*sqrt(dt)*eps + dJ_firm

floored at zero; a firm that hits zero stays there.

Jump arrivals are drawn once per horizon rather than once per step: the count
over ``[0, T]`` is Poisson(lambda*T) and each arrival lands on a uniformly
chosen step. For a Poisson process this gives exactly the same joint law of
per-step counts as independent Poisson(lambda*dt) draws, at one uniform per
firm instead of ``steps`` of them.

Stream layout per scenario: substream 0 is the market, substream ``k + 1`` is
firm ``k``. Within a substream the jump draws come first (skipped entirely
when the jump intensity is zero), then one normal per step.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numba as nb
import numpy as np

from .gaussmath import JumpSizeParams, shifted_lognormal_params
from .streams import Stream, draw_normal, draw_uniform


class ProcessKind(str, enum.Enum):
    DIFFUSION = "diffusion"
    JUMP_DIFFUSION = "jump_diffusion"


class JumpParameterization(str, enum.Enum):
    """How the configured jump mean/sd pair is read.

    ``log``: location and scale of ``ln(Λ+1)`` (the usual ``LN(mu, sigma)``
    notation). ``moments``: mean and standard deviation of ``Λ+1`` itself.
    """

    LOG = "log"
    MOMENTS = "moments"


def jump_params(mean: float, sd: float, parameterization="log") -> JumpSizeParams:
    if JumpParameterization(parameterization) is JumpParameterization.MOMENTS:
        return shifted_lognormal_params(mean, sd)
    return JumpSizeParams.from_log(mean, sd)


def _default_jump():
    return jump_params(0.4, 0.3)


@dataclass(frozen=True)
class ModelParams:
    """Process and portfolio constants.

    Defaults are the reference parameter set: c=0.5, mu=0.05, sigma=0.15,
    lambda=0.005, ``ln(Λ+1) ~ N(0.4, 0.3²)``, V0=100, F=75, T=1, 250 steps,
    500 firms.
    """

    mu: float = 0.05
    sigma: float = 0.15
    c: float = 0.5
    lam: float = 0.005
    jump: JumpSizeParams = field(default_factory=_default_jump)
    v0: float = 100.0
    face: float = 75.0
    maturity: float = 1.0
    steps: int = 250
    firms: int = 500
    scenarios: int = 100_000
    seed: int = 42
    process_kind: ProcessKind = ProcessKind.DIFFUSION

    def __post_init__(self):
        object.__setattr__(self, "process_kind", ProcessKind(self.process_kind))
        checks = {
            "mu": math.isfinite(self.mu),
            "sigma": self.sigma >= 0,
            "c": 0.0 <= self.c <= 1.0,
            "lambda": self.lam >= 0,
            "v0": self.v0 > 0,
            "face": self.face > 0,
            "maturity": self.maturity > 0,
            "steps": self.steps >= 1,
            "firms": self.firms >= 1,
            "scenarios": self.scenarios >= 1,
            "seed": 0 <= self.seed < 2**64,
        }
        for name, ok in checks.items():
            if not ok:
                raise ValueError(f"invalid {name}: {getattr(self, 'lam' if name == 'lambda' else name)!r}")

    @property
    def dt(self) -> float:
        return self.maturity / self.steps

    @property
    def effective_lambda(self) -> float:
        """Jump intensity actually used: zero for the pure diffusion."""
        if self.process_kind is ProcessKind.DIFFUSION:
            return 0.0
        return self.lam

    def kernel_args(self):
        """Scalars consumed by the numba kernels, in kernel argument order."""
        dt = self.dt
        return (
            1.0 + self.mu * dt,
            math.sqrt(self.c) * self.sigma * math.sqrt(dt),
            math.sqrt(1.0 - self.c) * self.sigma * math.sqrt(dt),
            self.effective_lambda * self.maturity,
            self.jump.mu_log,
            self.jump.sigma_log,
            self.steps,
        )


@dataclass(frozen=True)
class MarketPath:
    """Per-step market shocks and compound market jump increments."""

    market_shocks: np.ndarray
    market_jumps: np.ndarray

    def __post_init__(self):
        if len(self.market_shocks) != len(self.market_jumps):
            raise ValueError("market shocks and jumps must have equal length")

    def __len__(self):
        return len(self.market_shocks)

    @classmethod
    def zero(cls, steps: int) -> "MarketPath":
        return cls(np.zeros(steps), np.zeros(steps))

    def step_base(self, params: ModelParams) -> np.ndarray:
        """Market part of each step factor, ``1 + mu*dt + a*eta + dJ_m``."""
        drift, a, *_ = params.kernel_args()
        return (drift + a * np.asarray(self.market_shocks, dtype=float)) + np.asarray(
            self.market_jumps, dtype=float
        )


# --- numba kernels -------------------------------------------------------


@nb.njit(cache=True)
def poisson_count(mean, s0, s1, s2, s3):
    """Inverse-transform Poisson draw from one uniform."""
    u, s0, s1, s2, s3 = draw_uniform(s0, s1, s2, s3)
    k = 0
    p = math.exp(-mean)
    cum = p
    while u >= cum:
        k += 1
        p *= mean / k
        if p == 0.0 and k > mean:
            break
        cum += p
    return k, s0, s1, s2, s3


@nb.njit(cache=True)
def jump_size(mu_log, sigma_log, s0, s1, s2, s3):
    z, s0, s1, s2, s3 = draw_normal(s0, s1, s2, s3)
    return math.exp(mu_log + sigma_log * z) - 1.0, s0, s1, s2, s3


@nb.njit(cache=True)
def jump_sum(count, mu_log, sigma_log, s0, s1, s2, s3):
    total = 0.0
    for _ in range(count):
        size, s0, s1, s2, s3 = jump_size(mu_log, sigma_log, s0, s1, s2, s3)
        total += size
    return total, s0, s1, s2, s3


@nb.njit(cache=True)
def _scatter_jumps(dj, lam_t, mu_log, sigma_log, s0, s1, s2, s3):
    """Add horizon jumps into ``dj``; returns the number of jumps."""
    if lam_t <= 0.0:
        return 0, s0, s1, s2, s3
    n = dj.shape[0]
    count, s0, s1, s2, s3 = poisson_count(lam_t, s0, s1, s2, s3)
    for _ in range(count):
        u, s0, s1, s2, s3 = draw_uniform(s0, s1, s2, s3)
        t = min(np.int64(u * n), n - 1)
        size, s0, s1, s2, s3 = jump_size(mu_log, sigma_log, s0, s1, s2, s3)
        dj[t] += size
    return count, s0, s1, s2, s3


@nb.njit(cache=True)
def market_path_kernel(shocks, jumps, lam_t, mu_log, sigma_log, s0, s1, s2, s3):
    jumps[:] = 0.0
    _, s0, s1, s2, s3 = _scatter_jumps(jumps, lam_t, mu_log, sigma_log, s0, s1, s2, s3)
    for t in range(shocks.shape[0]):
        shocks[t], s0, s1, s2, s3 = draw_normal(s0, s1, s2, s3)
    return s0, s1, s2, s3


@nb.njit(cache=True)
def firm_terminal_kernel(base, dj, v0, b, lam_t, mu_log, sigma_log, s0, s1, s2, s3):
    """Terminal value of one firm; ``dj`` is zero scratch of length steps, left zeroed."""
    count, s0, s1, s2, s3 = _scatter_jumps(dj, lam_t, mu_log, sigma_log, s0, s1, s2, s3)
    v = v0
    n = base.shape[0]
    if count == 0:
        for t in range(n):
            eps, s0, s1, s2, s3 = draw_normal(s0, s1, s2, s3)
            f = base[t] + b * eps
            if f <= 0.0:
                v = 0.0
                break
            v *= f
    else:
        for t in range(n):
            eps, s0, s1, s2, s3 = draw_normal(s0, s1, s2, s3)
            f = (base[t] + b * eps) + dj[t]
            if f <= 0.0:
                v = 0.0
                break
            v *= f
        dj[:] = 0.0
    return v, s0, s1, s2, s3


# --- Python surface ------------------------------------------------------


def _words(stream: Stream):
    st = stream.state
    return st[0], st[1], st[2], st[3]


def _store(stream: Stream, words):
    stream.state[:] = words


def sample_jump_count(lam: float, dt: float, stream: Stream) -> int:
    """Number of jumps in an interval of length ``dt``: Poisson(lam*dt)."""
    if lam < 0 or not dt > 0:
        raise ValueError("need lam >= 0 and dt > 0")
    if lam == 0.0:
        return 0
    k, *words = poisson_count(lam * dt, *_words(stream))
    _store(stream, words)
    return int(k)


def sample_jump_increment(jump: JumpSizeParams, count: int, stream: Stream) -> float:
    """Sum of ``count`` independent jump sizes ``Λ``, each at least -1."""
    if count < 0:
        raise ValueError("count must be nonnegative")
    total, *words = jump_sum(int(count), jump.mu_log, jump.sigma_log, *_words(stream))
    _store(stream, words)
    return float(total)


def draw_market_path(params: ModelParams, stream: Stream) -> MarketPath:
    _, _, _, lam_t, mu_log, sigma_log, steps = params.kernel_args()
    shocks = np.empty(steps)
    jumps = np.empty(steps)
    words = market_path_kernel(shocks, jumps, lam_t, mu_log, sigma_log, *_words(stream))
    _store(stream, words)
    return MarketPath(shocks, jumps)


def simulate_firm_terminal(params: ModelParams, market: MarketPath, stream: Stream) -> float:
    """Terminal asset value ``V_k(T)`` of one firm on a given market path.

    Idiosyncratic shocks and jumps are drawn from ``stream``. The result is
    never negative: a step factor at or below zero wipes the firm out.
    """
    if len(market) != params.steps:
        raise ValueError(f"market path has {len(market)} steps, expected {params.steps}")
    _, _, b, lam_t, mu_log, sigma_log, steps = params.kernel_args()
    base = market.step_base(params)
    dj = np.zeros(steps)
    v, *words = firm_terminal_kernel(base, dj, params.v0, b, lam_t, mu_log, sigma_log, *_words(stream))
    _store(stream, words)
    return float(v)
