"""Inner/outer Monte Carlo loops over a homogeneous portfolio.

One scenario draws a market path and ``K`` firms on it, then reduces the
terminal values to the market return, default count, default fraction,
mean loss and (when anything defaulted) mean recovery.
"""
from __future__ import annotations

import logging
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace
from typing import Iterator, Optional

import numba as nb
import numpy as np

from .process import ModelParams, firm_terminal_kernel, market_path_kernel
from .streams import seed_words

log = logging.getLogger(__name__)

#: default ceiling on scenarios * firms * steps for one run
DEFAULT_WORK_BUDGET = 10**12


class SimulationBudgetError(RuntimeError):
    pass


@dataclass(frozen=True)
class ScenarioRecord:
    scenario_id: int
    x_m: float
    n_defaults: int
    p_d: float
    mean_recovery: Optional[float]
    mean_loss: float


def firm_loss(v_terminal: float, face: float) -> float:
    """Loss of one firm as a fraction of face value; zero unless ``v < face``."""
    shortfall = 1.0 - v_terminal / face
    return shortfall if shortfall > 0.0 else 0.0


@nb.njit(cache=True)
def summarize_kernel(v, v0, face):
    k = v.shape[0]
    ret_sum = 0.0
    loss_sum = 0.0
    n_def = 0
    for i in range(k):
        ret_sum += v[i] / v0 - 1.0
        if v[i] < face:
            n_def += 1
            loss_sum += 1.0 - v[i] / face
    mean_loss = loss_sum / k
    p_d = n_def / k
    rec = 1.0 - mean_loss / p_d if n_def > 0 else np.nan
    return ret_sum / k, n_def, p_d, rec, mean_loss


def summarize_terminal_values(
    v_terminal, v0: float, face: float, scenario_id: int = 0
) -> ScenarioRecord:
    """Reduce firm terminal values of one scenario to a :class:`ScenarioRecord`."""
    v = np.ascontiguousarray(v_terminal, dtype=float)
    x_m, n_def, p_d, rec, mean_loss = summarize_kernel(v, float(v0), float(face))
    return ScenarioRecord(
        scenario_id=int(scenario_id),
        x_m=float(x_m),
        n_defaults=int(n_def),
        p_d=float(p_d),
        mean_recovery=None if n_def == 0 else float(rec),
        mean_loss=float(mean_loss),
    )


@nb.njit(cache=True)
def _run_block(seed, first_id, count, firms, v0, face, drift, a, b, lam_t, mu_log, sigma_log, steps,
               x_m, n_def, p_d, rec, loss):
    shocks = np.empty(steps)
    mjumps = np.empty(steps)
    base = np.empty(steps)
    dj = np.zeros(steps)
    v = np.empty(firms)
    for j in range(count):
        sid = first_id + j
        s0, s1, s2, s3 = seed_words(seed, np.uint64(sid), np.uint64(0))
        market_path_kernel(shocks, mjumps, lam_t, mu_log, sigma_log, s0, s1, s2, s3)
        for t in range(steps):
            base[t] = (drift + a * shocks[t]) + mjumps[t]
        for k in range(firms):
            s0, s1, s2, s3 = seed_words(seed, np.uint64(sid), np.uint64(k + 1))
            v[k], s0, s1, s2, s3 = firm_terminal_kernel(base, dj, v0, b, lam_t, mu_log, sigma_log,
                                                        s0, s1, s2, s3)
        x_m[j], n_def[j], p_d[j], rec[j], loss[j] = summarize_kernel(v, v0, face)


def _simulate_range(params: ModelParams, first_id: int, count: int):
    cols = (np.empty(count), np.empty(count, dtype=np.int64), np.empty(count), np.empty(count), np.empty(count))
    _run_block(np.uint64(params.seed), first_id, count, params.firms, params.v0, params.face,
               *params.kernel_args(), *cols)
    return first_id, cols


@dataclass
class ScenarioSet:
    """Simulation output, stored column-wise.

    ``mean_recovery`` holds NaN where a scenario had no defaults; iteration
    and indexing yield :class:`ScenarioRecord` with ``None`` there instead.
    """

    params: ModelParams
    scenario_id: np.ndarray
    x_m: np.ndarray
    n_defaults: np.ndarray
    p_d: np.ndarray
    mean_recovery: np.ndarray
    mean_loss: np.ndarray

    def __len__(self):
        return len(self.scenario_id)

    def __getitem__(self, i: int) -> ScenarioRecord:
        rec = self.mean_recovery[i]
        return ScenarioRecord(
            int(self.scenario_id[i]),
            float(self.x_m[i]),
            int(self.n_defaults[i]),
            float(self.p_d[i]),
            None if np.isnan(rec) else float(rec),
            float(self.mean_loss[i]),
        )

    def __iter__(self) -> Iterator[ScenarioRecord]:
        return (self[i] for i in range(len(self)))

    def subset(self, mask) -> "ScenarioSet":
        """Rows selected by a boolean mask or index array, order preserved."""
        return ScenarioSet(
            self.params,
            self.scenario_id[mask],
            self.x_m[mask],
            self.n_defaults[mask],
            self.p_d[mask],
            self.mean_recovery[mask],
            self.mean_loss[mask],
        )

    @property
    def records(self) -> list[ScenarioRecord]:
        return list(self)

    @classmethod
    def from_records(cls, params: ModelParams, records) -> "ScenarioSet":
        records = list(records)
        return cls(
            params,
            np.array([r.scenario_id for r in records], dtype=np.int64),
            np.array([r.x_m for r in records], dtype=float),
            np.array([r.n_defaults for r in records], dtype=np.int64),
            np.array([r.p_d for r in records], dtype=float),
            np.array([np.nan if r.mean_recovery is None else r.mean_recovery for r in records], dtype=float),
            np.array([r.mean_loss for r in records], dtype=float),
        )


def run_scenario(params: ModelParams, scenario_id: int, master_seed: Optional[int] = None) -> ScenarioRecord:
    seed = params.seed if master_seed is None else master_seed
    if seed != params.seed:
        params = replace(params, seed=seed)
    _, (x_m, n_def, p_d, rec, loss) = _simulate_range(params, scenario_id, 1)
    return ScenarioRecord(
        int(scenario_id),
        float(x_m[0]),
        int(n_def[0]),
        float(p_d[0]),
        None if n_def[0] == 0 else float(rec[0]),
        float(loss[0]),
    )


def _chunks(total: int, size: int):
    for start in range(0, total, size):
        yield start, min(size, total - start)


def run_simulation(
    params: ModelParams,
    workers: Optional[int] = None,
    chunk_size: int = 500,
    work_budget: int = DEFAULT_WORK_BUDGET,
) -> ScenarioSet:
    """Simulate ``params.scenarios`` independent scenarios.

    The output is bit-identical for any ``workers``/``chunk_size``: every
    scenario seeds its own streams from ``(seed, scenario_id)``.

    Raises
    ------
    SimulationBudgetError
        If ``scenarios * firms * steps`` exceeds ``work_budget``.
    """
    work = params.scenarios * params.firms * params.steps
    if work > work_budget:
        raise SimulationBudgetError(
            f"scenarios*firms*steps = {work:.3g} exceeds the work budget {work_budget:.3g}"
        )
    m = params.scenarios
    x_m = np.empty(m)
    n_def = np.empty(m, dtype=np.int64)
    p_d = np.empty(m)
    rec = np.empty(m)
    loss = np.empty(m)

    def place(first, cols):
        sl = slice(first, first + len(cols[0]))
        x_m[sl], n_def[sl], p_d[sl], rec[sl], loss[sl] = cols

    workers = workers or os.cpu_count() or 1
    started = time.perf_counter()
    if workers == 1:
        for first, count in _chunks(m, chunk_size):
            place(*_simulate_range(params, first, count))
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            futures = [pool.submit(_simulate_range, params, first, count) for first, count in _chunks(m, chunk_size)]
            for fut in futures:
                place(*fut.result())
    log.info("simulated %d scenarios in %.1fs", m, time.perf_counter() - started)
    return ScenarioSet(params, np.arange(m, dtype=np.int64), x_m, n_def, p_d, rec, loss)
