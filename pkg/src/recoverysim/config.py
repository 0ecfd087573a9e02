"""Line-oriented ``key = value`` run configuration.

Example::

    # jump-diffusion at desk scale
    process = jump_diffusion
    scenarios = 100000
    lower_thresholds = -0.35, -0.25, -0.15

Unknown keys are rejected; missing keys take the reference defaults.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .calibration import CalibrationWindow, FitMode
from .process import JumpParameterization, ModelParams, ProcessKind, jump_params

DEFAULT_THRESHOLDS = (-0.35, -0.30, -0.25, -0.20, -0.15, -0.10, -0.05)


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    params: ModelParams = field(default_factory=ModelParams)
    alpha: float = 0.99
    window: CalibrationWindow = field(default_factory=lambda: CalibrationWindow(-0.35, 0.0))
    lower_thresholds: tuple = DEFAULT_THRESHOLDS
    output_dir: Path = Path(".")
    mode: FitMode = FitMode.LOSS_SPACE
    workers: int = 0


def _float_list(text: str) -> tuple:
    items = [t for t in text.replace(",", " ").split()]
    if not items:
        raise ValueError("empty list")
    return tuple(float(t) for t in items)


def _seed(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise ValueError("seed must fit in 64 unsigned bits")
    return value


_PARSERS: dict[str, Callable[[str], object]] = {
    "mu": float,
    "sigma": float,
    "c": float,
    "lambda": float,
    "jump_mean": float,
    "jump_sd": float,
    "jump_parameterization": JumpParameterization,
    "v0": float,
    "face": float,
    "maturity": float,
    "steps": int,
    "firms": int,
    "scenarios": int,
    "seed": _seed,
    "process": ProcessKind,
    "alpha": float,
    "lower": float,
    "upper": float,
    "bin_width": float,
    "min_bin_count": int,
    "lower_thresholds": _float_list,
    "output_dir": Path,
    "mode": FitMode,
    "workers": int,
}

_DEFAULTS = {
    "mu": 0.05,
    "sigma": 0.15,
    "c": 0.5,
    "lambda": 0.005,
    "jump_mean": 0.4,
    "jump_sd": 0.3,
    "jump_parameterization": JumpParameterization.LOG,
    "v0": 100.0,
    "face": 75.0,
    "maturity": 1.0,
    "steps": 250,
    "firms": 500,
    "scenarios": 100_000,
    "seed": 42,
    "process": ProcessKind.DIFFUSION,
    "alpha": 0.99,
    "lower": -0.35,
    "upper": 0.0,
    "bin_width": 0.01,
    "min_bin_count": 5,
    "lower_thresholds": DEFAULT_THRESHOLDS,
    "output_dir": Path("."),
    "mode": FitMode.LOSS_SPACE,
    "workers": 0,
}

# key -> predicate on the parsed value
_CONSTRAINTS = {
    "sigma": lambda v: v >= 0,
    "c": lambda v: 0 <= v <= 1,
    "lambda": lambda v: v >= 0,
    "jump_sd": lambda v: v >= 0,
    "v0": lambda v: v > 0,
    "face": lambda v: v > 0,
    "maturity": lambda v: v > 0,
    "steps": lambda v: v >= 1,
    "firms": lambda v: v >= 1,
    "scenarios": lambda v: v >= 1,
    "alpha": lambda v: 0 < v < 1,
    "bin_width": lambda v: v > 0,
    "min_bin_count": lambda v: v >= 1,
    "workers": lambda v: v >= 0,
}


def parse_config(text: str) -> RunConfig:
    """Parse a configuration document.

    Raises
    ------
    ConfigError
        On malformed lines (with the line number), unknown or repeated keys,
        and values violating a constraint (naming the key).
    """
    values = dict(_DEFAULTS)
    seen = set()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        if key not in _PARSERS:
            raise ConfigError(f"line {lineno}: unknown key '{key}'")
        if key in seen:
            raise ConfigError(f"line {lineno}: duplicate key '{key}'")
        seen.add(key)
        try:
            values[key] = _PARSERS[key](value)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for '{key}': {exc}") from None

    for key, ok in _CONSTRAINTS.items():
        if not ok(values[key]):
            raise ConfigError(f"constraint violated for '{key}': {values[key]!r}")
    if not values["lower"] < values["upper"]:
        raise ConfigError(f"constraint violated for 'lower': must be below upper ({values['upper']})")
    thresholds = values["lower_thresholds"]
    if list(thresholds) != sorted(thresholds) or any(t >= values["upper"] for t in thresholds):
        raise ConfigError("constraint violated for 'lower_thresholds': must ascend and stay below upper")
    try:
        jump = jump_params(values["jump_mean"], values["jump_sd"], values["jump_parameterization"])
    except ValueError as exc:
        raise ConfigError(f"constraint violated for 'jump_mean': {exc}") from None

    params = ModelParams(
        mu=values["mu"],
        sigma=values["sigma"],
        c=values["c"],
        lam=values["lambda"],
        jump=jump,
        v0=values["v0"],
        face=values["face"],
        maturity=values["maturity"],
        steps=values["steps"],
        firms=values["firms"],
        scenarios=values["scenarios"],
        seed=values["seed"],
        process_kind=values["process"],
    )
    window = CalibrationWindow(values["lower"], values["upper"], values["bin_width"], values["min_bin_count"])
    return RunConfig(
        params=params,
        alpha=values["alpha"],
        window=window,
        lower_thresholds=tuple(thresholds),
        output_dir=values["output_dir"],
        mode=values["mode"],
        workers=values["workers"],
    )


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())
