import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recoverysim.gaussmath import JumpSizeParams, shifted_lognormal_params
from recoverysim.portfolio import run_simulation
from recoverysim.process import (
    JumpParameterization,
    MarketPath,
    ModelParams,
    ProcessKind,
    draw_market_path,
    jump_params,
    sample_jump_count,
    sample_jump_increment,
    simulate_firm_terminal,
)
from recoverysim.streams import Stream

# Poisson(0.005) point masses, from mpmath
P0 = 0.99501247919268232
P1 = 0.0049750623959634117


def test_jump_count_zero_intensity():
    s = Stream(1)
    assert all(sample_jump_count(0.0, 0.3, s) == 0 for _ in range(100))


def test_jump_count_frequencies():
    s = Stream(2024, 0, 9)
    n = 1_000_000
    counts = np.bincount([sample_jump_count(0.005, 1.0, s) for _ in range(n)], minlength=3)
    for k, p in ((0, P0), (1, P1)):
        se = math.sqrt(p * (1 - p) / n)
        assert abs(counts[k] / n - p) < 4 * se
    p2 = 1 - P0 - P1
    assert abs(counts[2:].sum() / n - p2) < 4 * math.sqrt(p2 / n) + 1e-6


def test_jump_count_large_mean():
    s = Stream(8)
    draws = np.array([sample_jump_count(40.0, 0.5, s) for _ in range(20_000)])
    assert abs(draws.mean() - 20.0) < 4 * math.sqrt(20.0 / draws.size)
    assert abs(draws.var() - 20.0) < 1.0


@pytest.mark.parametrize("lam,dt", [(-1.0, 1.0), (1.0, 0.0)])
def test_jump_count_domain(lam, dt):
    with pytest.raises(ValueError):
        sample_jump_count(lam, dt, Stream(0))


def test_jump_increment_degenerate():
    assert sample_jump_increment(shifted_lognormal_params(0.4, 0.3), 0, Stream(0)) == 0.0
    j = JumpSizeParams.from_log(math.log(0.4), 0.0)
    assert sample_jump_increment(j, 1, Stream(0)) == pytest.approx(-0.6, abs=1e-15)
    assert sample_jump_increment(j, 3, Stream(0)) == pytest.approx(-1.8, abs=1e-14)


def test_jump_increment_mean_moments_reading():
    j = shifted_lognormal_params(0.4, 0.3)
    n = 1_000_000
    mean = sample_jump_increment(j, n, Stream(77, 3, 4)) / n
    assert abs(mean - (-0.6)) < 4 * 0.3 / math.sqrt(n)


def test_jump_sizes_bounded_below():
    j = jump_params(0.4, 0.3)
    s = Stream(5)
    sizes = [sample_jump_increment(j, 1, s) for _ in range(5000)]
    assert min(sizes) >= -1.0


def test_jump_params_readings():
    log = jump_params(0.4, 0.3, "log")
    assert (log.mu_log, log.sigma_log) == (0.4, 0.3)
    mom = jump_params(0.4, 0.3, JumpParameterization.MOMENTS)
    assert mom.mean_shifted == pytest.approx(0.4, rel=1e-12)
    assert ModelParams().jump == log


def _deterministic(mu, steps):
    return ModelParams(mu=mu, sigma=0.0, lam=0.0, steps=steps, v0=100.0)


def test_deterministic_one_step():
    p = _deterministic(0.05, 1)
    assert simulate_firm_terminal(p, MarketPath.zero(1), Stream(0)) == 105.0


def test_deterministic_two_steps():
    p = _deterministic(0.05, 2)
    assert simulate_firm_terminal(p, MarketPath.zero(2), Stream(0)) == pytest.approx(105.0625, abs=1e-12)


@given(st.floats(-0.5, 0.5), st.integers(1, 400))
def test_zero_shock_path_is_compound_drift(mu, steps):
    p = _deterministic(mu, steps)
    got = simulate_firm_terminal(p, MarketPath.zero(steps), Stream(3))
    assert got == pytest.approx(100.0 * (1 + mu / steps) ** steps, rel=1e-12)


def test_factor_floor_is_absorbing():
    p = ModelParams(mu=-300.0, sigma=0.0, lam=0.0, steps=2)
    # first factor 1 - 150 < 0 wipes the firm; second would be negative again
    assert simulate_firm_terminal(p, MarketPath.zero(2), Stream(0)) == 0.0
    p = replace(p, mu=0.0)
    jumps = MarketPath(np.zeros(2), np.array([-1.0, 5.0]))
    assert simulate_firm_terminal(p, jumps, Stream(0)) == 0.0


def test_full_correlation_gives_identical_firms():
    p = ModelParams(c=1.0, steps=50)
    market = draw_market_path(p, Stream(p.seed, 0, 0))
    vals = {simulate_firm_terminal(p, market, Stream(p.seed, 0, k + 1)) for k in range(20)}
    assert len(vals) == 1


def test_market_path_deterministic():
    p = ModelParams(process_kind="jump_diffusion", lam=3.0, steps=60)
    a = draw_market_path(p, Stream(9, 4, 0))
    b = draw_market_path(p, Stream(9, 4, 0))
    assert np.array_equal(a.market_shocks, b.market_shocks)
    assert np.array_equal(a.market_jumps, b.market_jumps)
    assert len(a) == 60


def test_market_path_length_checked():
    p = ModelParams(steps=10)
    with pytest.raises(ValueError):
        simulate_firm_terminal(p, MarketPath.zero(9), Stream(0))
    with pytest.raises(ValueError):
        MarketPath(np.zeros(3), np.zeros(4))


def test_diffusion_ignores_lambda():
    assert ModelParams(lam=0.7).effective_lambda == 0.0
    assert ModelParams(lam=0.7, process_kind=ProcessKind.JUMP_DIFFUSION).effective_lambda == 0.7


def test_zero_intensity_jump_diffusion_is_bit_identical():
    base = ModelParams(scenarios=40, firms=30, steps=30, seed=5)
    diff = run_simulation(base, workers=1)
    jd = run_simulation(replace(base, lam=0.0, process_kind=ProcessKind.JUMP_DIFFUSION), workers=1)
    for col in ("x_m", "n_defaults", "p_d", "mean_loss"):
        assert np.array_equal(getattr(diff, col), getattr(jd, col))
    assert np.array_equal(diff.mean_recovery, jd.mean_recovery, equal_nan=True)


def test_terminal_values_nonnegative():
    p = ModelParams(process_kind="jump_diffusion", lam=5.0, sigma=0.6, steps=50,
                    jump=JumpSizeParams.from_log(-1.0, 1.0))
    market = draw_market_path(p, Stream(1, 0, 0))
    vals = [simulate_firm_terminal(p, market, Stream(1, 0, k)) for k in range(1, 300)]
    assert min(vals) >= 0.0


@pytest.mark.parametrize("field,value,name", [
    ("c", 1.5, "c"), ("sigma", -0.1, "sigma"), ("lam", -1.0, "lambda"),
    ("steps", 0, "steps"), ("firms", 0, "firms"), ("scenarios", 0, "scenarios"),
    ("v0", 0.0, "v0"), ("seed", -1, "seed"),
])
def test_model_params_validation(field, value, name):
    with pytest.raises(ValueError, match=f"invalid {name}"):
        ModelParams(**{field: value})
