import numpy as np
import pytest

from recoverysim.portfolio import ScenarioSet
from recoverysim.process import ModelParams


def make_set(x_m, p_d, mean_recovery, firms=100, params=None):
    """ScenarioSet from hand-picked columns; losses follow the default identity."""
    x_m = np.asarray(x_m, dtype=float)
    p_d = np.asarray(p_d, dtype=float)
    rec = np.asarray(mean_recovery, dtype=float)
    n_def = np.rint(p_d * firms).astype(np.int64)
    loss = np.where(n_def > 0, p_d * (1.0 - np.nan_to_num(rec)), 0.0)
    rec = np.where(n_def > 0, rec, np.nan)
    return ScenarioSet(params or ModelParams(firms=firms), np.arange(len(x_m), dtype=np.int64),
                       x_m, n_def, p_d, rec, loss)


@pytest.fixture
def small_params():
    return ModelParams(scenarios=300, firms=60, steps=40, seed=2024)


# criterion number -> (passed, detail); filled by test_acceptance.py
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
