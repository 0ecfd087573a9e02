"""Monte Carlo credit-portfolio engine for recovery-rate model risk.

Simulates a homogeneous portfolio of firms driven by a correlated
(jump-)diffusion, calibrates constant, probit and structural recovery models
to the simulated scenarios, and measures how far each model's VaR and ETL
drift from the empirical values as the calibration window shrinks.
"""
from .calibration import CalibrationError, CalibrationWindow, FitMode, calibrate
from .portfolio import ScenarioRecord, ScenarioSet, run_scenario, run_simulation
from .process import JumpParameterization, ModelParams, ProcessKind, jump_params
from .recovery import Constant, Probit, Structural
from .risk import expected_tail_loss, risk_sweep, value_at_risk

__version__ = "0.1.0"

__all__ = [
    "CalibrationError",
    "CalibrationWindow",
    "Constant",
    "FitMode",
    "JumpParameterization",
    "ModelParams",
    "Probit",
    "ProcessKind",
    "ScenarioRecord",
    "ScenarioSet",
    "Structural",
    "calibrate",
    "expected_tail_loss",
    "jump_params",
    "risk_sweep",
    "run_scenario",
    "run_simulation",
    "value_at_risk",
]
