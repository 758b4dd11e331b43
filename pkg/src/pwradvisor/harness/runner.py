"""Closed-loop runner: plant and advisory engine in lockstep.

At every control-interval boundary inside the engine-enabled window the
scheduler re-solves and the first block of the returned plan is applied to
the plant until the next boundary; outside the window the flow command is
zero and the turbine follows the profile's own rates.  Deterministic for a
fixed scenario.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .. import plant
from ..engine.plan import Recommendation
from ..engine.replan import ReplanScheduler
from ..state import ControlInput
from .scenario import ScenarioConfig

COLUMNS = ("t_s", "p_turb", "n", "T_dev_C", "AO_pct", "AO_dev_pct",
           "C_B_ppm", "z_steps", "q_kgps", "m_eff_kg",
           "i_t", "i_b", "x_t", "x_b", "dI_ax", "dX_ax")

CONVERGENCE_EPS = 0.01  # normalized imbalance units


class TimelineMismatchError(ValueError):
    """Two run results do not share a common timeline."""


@dataclass
class RunResult:
    """Recorded series, replan snapshots and derived metrics of one run."""

    scenario: ScenarioConfig
    data: np.ndarray                        # (N, len(COLUMNS))
    recommendations: list[tuple[float, Recommendation]] = field(
        default_factory=list)
    metrics: dict = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return self.data[:, COLUMNS.index(name)]


def _state_row(state, ao_ref: float, q_applied: float) -> list[float]:
    return [state.t, state.p_turb, state.n, state.T_dev, state.AO,
            state.AO - ao_ref, state.C_B, state.z, q_applied, state.m_eff,
            state.i_t, state.i_b, state.x_t, state.x_b,
            state.i_t - state.i_b, state.x_t - state.x_b]


def imbalance_targets(cfg: ScenarioConfig) -> tuple[float, float]:
    """Equilibrium axial imbalances at the profile's final power and the
    strategy's reference AO; the convergence-metric target."""
    p_final = cfg.profile.final_target() / 100.0
    return plant.axial_equilibrium_imbalances(p_final, cfg.strategy.ao_ref,
                                              cfg.params)


def convergence_time(t: np.ndarray, dI: np.ndarray, dX: np.ndarray,
                     dI_eq: float, dX_eq: float,
                     eps: float = CONVERGENCE_EPS) -> float:
    """First time both imbalances enter the eps-band and stay; inf if never."""
    outside = (np.abs(dI - dI_eq) >= eps) | (np.abs(dX - dX_eq) >= eps)
    if not outside.any():
        return float(t[0])
    last_out = int(np.nonzero(outside)[0][-1])
    if last_out == len(t) - 1:
        return math.inf
    return float(t[last_out + 1])


def compute_metrics(cfg: ScenarioConfig, data: np.ndarray,
                    solver_walls: list[float] | None = None) -> dict:
    """Metrics derived from a recorded series (recomputable from CSV)."""
    col = {name: data[:, i] for i, name in enumerate(COLUMNS)}
    dI_eq, dX_eq = imbalance_targets(cfg)
    metrics = {
        "max_abs_ao_dev_pct": float(np.max(np.abs(col["AO_dev_pct"]))),
        "total_effluent_kg": float(col["m_eff_kg"][-1] - col["m_eff_kg"][0]),
        "convergence_time_s": convergence_time(col["t_s"], col["dI_ax"],
                                               col["dX_ax"], dI_eq, dX_eq),
    }
    if solver_walls:
        metrics["solver_wall_mean_s"] = float(np.mean(solver_walls))
        metrics["solver_wall_max_s"] = float(np.max(solver_walls))
        metrics["n_solves"] = len(solver_walls)
    else:
        metrics["solver_wall_mean_s"] = 0.0
        metrics["solver_wall_max_s"] = 0.0
        metrics["n_solves"] = 0
    return metrics


def run_closed_loop(cfg: ScenarioConfig,
                    keep_recommendations: bool = True) -> RunResult:
    """Run the scenario; returns the recorded series and metrics."""
    params = cfg.params
    state = cfg.equilibrium_state()
    scheduler = ReplanScheduler(cfg.strategy, cfg.profile, params,
                                config=cfg.engine)
    h = cfg.plant_step
    n_steps = int(round(cfg.duration / h))
    ao_ref = cfg.strategy.ao_ref
    win_lo, win_hi = cfg.engine_window
    dt_ctrl = cfg.engine.dt_ctrl

    rows = []
    recs: list[tuple[float, Recommendation]] = []
    walls: list[float] = []
    q_applied = 0.0
    r_applied: float | None = None

    for k in range(n_steps + 1):
        t = k * h
        scheduler.observe(state)
        on_boundary = math.isclose(t % dt_ctrl, 0.0, abs_tol=1e-6) \
            or math.isclose(t % dt_ctrl, dt_ctrl, abs_tol=1e-6)
        if on_boundary and win_lo <= t < win_hi:
            try:
                rec = scheduler.replan(t, budget=cfg.engine_budget)
            except plant.PlantModelError as exc:
                raise RuntimeError(f"solver failed at t={t:.0f} s: {exc}") from exc
            q_applied, r_applied = rec.plan.first_input()
            walls.append(rec.diagnostics.wall_time)
            if keep_recommendations:
                recs.append((t, rec))
        elif not win_lo <= t < win_hi:
            q_applied, r_applied = 0.0, None

        rows.append(_state_row(state, ao_ref, q_applied))
        if k == n_steps:
            break
        try:
            state = plant.step(state, ControlInput(q=q_applied, r_turb=r_applied),
                               h, params, profile=cfg.profile)
        except plant.PlantModelError as exc:
            raise RuntimeError(f"plant failed at t={t:.0f} s: {exc}") from exc

    data = np.array(rows)
    metrics = compute_metrics(cfg, data, walls)
    return RunResult(scenario=cfg, data=data, recommendations=recs,
                     metrics=metrics)


@dataclass(frozen=True)
class ComparisonReport:
    """Metric deltas of run ``b`` relative to run ``a`` (same timeline)."""

    effluent_a_kg: float
    effluent_b_kg: float
    effluent_delta_pct: float
    convergence_a_s: float
    convergence_b_s: float
    convergence_delta_pct: float
    max_ao_dev_a_pct: float
    max_ao_dev_b_pct: float
    max_ao_dev_delta_pct: float


def _pct_delta(a: float, b: float) -> float:
    if a == 0.0:
        return 0.0 if b == 0.0 else math.inf
    if math.isinf(a) or math.isinf(b):
        return 0.0 if a == b else math.inf
    return 100.0 * (b - a) / a


def compare(a: RunResult | tuple[np.ndarray, dict],
            b: RunResult | tuple[np.ndarray, dict]) -> ComparisonReport:
    """Compare two runs aligned on the same scenario timeline."""
    data_a, metrics_a = (a.data, a.metrics) if isinstance(a, RunResult) else a
    data_b, metrics_b = (b.data, b.metrics) if isinstance(b, RunResult) else b
    if data_a.shape[0] != data_b.shape[0] or \
            not np.array_equal(data_a[:, 0], data_b[:, 0]):
        raise TimelineMismatchError("runs do not share a common timeline")
    eff_a = metrics_a["total_effluent_kg"]
    eff_b = metrics_b["total_effluent_kg"]
    conv_a = metrics_a["convergence_time_s"]
    conv_b = metrics_b["convergence_time_s"]
    ao_a = metrics_a["max_abs_ao_dev_pct"]
    ao_b = metrics_b["max_abs_ao_dev_pct"]
    return ComparisonReport(
        effluent_a_kg=eff_a, effluent_b_kg=eff_b,
        effluent_delta_pct=_pct_delta(eff_a, eff_b),
        convergence_a_s=conv_a, convergence_b_s=conv_b,
        convergence_delta_pct=_pct_delta(conv_a, conv_b),
        max_ao_dev_a_pct=ao_a, max_ao_dev_b_pct=ao_b,
        max_ao_dev_delta_pct=ao_b - ao_a,
    )
