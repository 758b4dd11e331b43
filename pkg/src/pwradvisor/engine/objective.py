"""Strategy objective and constraint residuals over predicted trajectories.

Cost terms are accumulated per control interval (values taken at interval-end
samples), which matches the 10-minute cadence at which the operator acts:

    cost = sum_k [ w_AO*(AO_dev_k)^2 + w_u*q_k^2 + w_eff*|q_k|*dt
                   + w_track*(p_k - p_target_k)^2 ]
           + w_T*[(dI_H - dI_eq)^2 + (dX_H - dX_eq)^2]

Violations are hinge residuals of the power-dependent AO envelope plus box
residuals of the decision variables.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .. import plant
from ..params import PlantParams
from ..state import PowerProfile
from ..strategies import StrategySpec
from .plan import ControlPlan, Trajectory


@dataclass(frozen=True)
class ObjectiveTargets:
    """Precomputed reference data shared by all candidate plans of a solve."""

    ao_ref: float
    dI_eq: float
    dX_eq: float
    p_target_int: np.ndarray    # (K,) normalized tracking target per interval


def make_targets(strategy: StrategySpec, profile: PowerProfile,
                 params: PlantParams, t0: float, dt_ctrl: float,
                 n_int: int) -> ObjectiveTargets:
    """Terminal equilibrium imbalances at the profile's final power and the
    per-interval tracking targets."""
    p_final = profile.final_target() / 100.0
    dI_eq, dX_eq = plant.axial_equilibrium_imbalances(p_final, strategy.ao_ref,
                                                      params)
    t_int = t0 + dt_ctrl * np.arange(1, n_int + 1)
    p_target = np.array([profile.target_at(t) / 100.0 for t in t_int])
    return ObjectiveTargets(ao_ref=strategy.ao_ref, dI_eq=dI_eq, dX_eq=dX_eq,
                            p_target_int=p_target)


T_DEV_BOUND = 2.4  # degC; coolant-temperature program envelope (LCO)


def batch_objective(ao_int: np.ndarray, n_int: np.ndarray, p_int: np.ndarray,
                    q_int: np.ndarray, T_int: np.ndarray,
                    dI_H: np.ndarray, dX_H: np.ndarray,
                    strategy: StrategySpec, targets: ObjectiveTargets,
                    dt_ctrl: float) -> tuple[np.ndarray, np.ndarray]:
    """Cost and hinge residuals for a batch of candidate plans.

    All inputs are (B, K) arrays except the terminal imbalances (B,).
    Returns ``cost`` (B,) and the stacked hinge residuals (B, 2K): the
    power-dependent AO envelope followed by the temperature-program envelope
    (without which the optimizer could park the core subcritical).
    """
    ao_dev = ao_int - targets.ao_ref
    cost = np.zeros(ao_int.shape[0])
    if strategy.w_AO:
        cost += strategy.w_AO * np.sum(ao_dev ** 2, axis=1)
    if strategy.w_u:
        cost += strategy.w_u * np.sum(q_int ** 2, axis=1)
    if strategy.w_eff:
        cost += strategy.w_eff * dt_ctrl * np.sum(np.abs(q_int), axis=1)
    if strategy.w_track:
        cost += strategy.w_track * np.sum((p_int - targets.p_target_int) ** 2,
                                          axis=1)
    if strategy.w_T:
        cost += strategy.w_T * ((dI_H - targets.dI_eq) ** 2
                                + (dX_H - targets.dX_eq) ** 2)
    bound = strategy.envelope.bound(np.clip(n_int, 0.15, 1.0))
    hinge_ao = np.maximum(0.0, np.abs(ao_dev) - bound)
    hinge_T = np.maximum(0.0, np.abs(T_int) - T_DEV_BOUND)
    return cost, np.concatenate([hinge_ao, hinge_T], axis=1)


def _interval_end_indices(n_steps: int, steps_per_int: int) -> np.ndarray:
    return np.arange(steps_per_int, n_steps + 1, steps_per_int)


def objective_eval(traj: Trajectory, plan: ControlPlan, strategy: StrategySpec,
                   params: PlantParams,
                   profile: PowerProfile) -> tuple[float, np.ndarray]:
    """Cost and per-constraint residuals of one predicted trajectory.

    Residuals are the per-interval AO hinge values followed by the
    per-interval flow-box residuals (and rate-box residuals when the plan
    is rate-driven); all are zero for a feasible plan.
    """
    n_steps = len(traj) - 1
    if n_steps == 0:
        return 0.0, np.zeros(0)
    h = float(traj.times[1] - traj.times[0])
    steps_per_int = int(round(plan.dt_ctrl / h))
    idx = _interval_end_indices(n_steps, steps_per_int)
    n_int_count = min(plan.n_intervals, len(idx))
    idx = idx[:n_int_count]

    q_int = plan.q_per_interval()[:n_int_count]
    targets = make_targets(strategy, profile, params, plan.t0, plan.dt_ctrl,
                           n_int_count)
    cost, hinge = batch_objective(
        traj.AO[None, idx], traj.n[None, idx], traj.p_turb[None, idx],
        q_int[None, :], traj.Y[None, idx, 6],
        traj.dI_ax[None, -1], traj.dX_ax[None, -1],
        strategy, targets, plan.dt_ctrl)

    lo, hi = params.flow_bounds
    flow_box = np.maximum(0.0, np.maximum(q_int - hi, lo - q_int))
    residuals = [hinge[0], flow_box]
    r_int = plan.r_per_interval()
    if r_int is not None:
        rlo, rhi = strategy.rate_bounds
        r_int = r_int[:n_int_count]
        residuals.append(np.maximum(0.0, np.maximum(r_int - rhi, rlo - r_int)))
    return float(cost[0]), np.concatenate(residuals)
