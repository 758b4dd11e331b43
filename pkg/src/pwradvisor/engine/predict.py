"""Trajectory prediction under a control plan.

Prediction reuses the plant's RK4 kernel, so a prediction at the plant's own
step size reproduces the plant trajectory bitwise.  The solver evaluates many
candidate plans at once: all schedule construction here is batch-capable, with
shape (B, ...) arrays where row 0..B-1 are independent plans.
"""

from __future__ import annotations

import math

import numpy as np

from ..params import PlantParams
from ..state import CoreState, PowerProfile
from .. import _kernel, plant
from .plan import ControlPlan, Trajectory


def _command_times(plan_t0: float, n_int: int, dt_ctrl: float,
                   queue: tuple[tuple[float, float], ...]) -> np.ndarray:
    times = [tq[0] for tq in queue] + [plan_t0 + j * dt_ctrl for j in range(n_int)]
    return np.array(times)


def effective_flow_steps(q_int: np.ndarray, plan_t0: float, dt_ctrl: float,
                         queue: tuple[tuple[float, float], ...],
                         tau_d: float, h: float, n_steps: int) -> np.ndarray:
    """Per-step delayed flow for a batch of interval schedules.

    ``q_int`` has shape (B, n_int).  Returns (B, n_steps): the command acting
    during step k is the latest one entered at or before ``t_k - tau_d``,
    starting from the pending entries of the initial CVCS queue.
    """
    q_int = np.atleast_2d(q_int)
    B, n_int = q_int.shape
    cmd_times = _command_times(plan_t0, n_int, dt_ctrl, queue)
    queue_vals = np.array([tq[1] for tq in queue])
    vals = np.concatenate([np.zeros((B, 1)),
                           np.broadcast_to(queue_vals, (B, len(queue_vals))),
                           q_int], axis=1)
    step_times = plan_t0 + h * np.arange(n_steps)
    idx = np.searchsorted(cmd_times + tau_d, step_times, side="right")
    return vals[:, idx]


def profile_half_grid(profile: PowerProfile, t0: float, h: float,
                      n_steps: int) -> np.ndarray:
    """Turbine demand (normalized) on the RK4 half-step grid, profile-driven."""
    out = np.empty(2 * n_steps + 1)
    for j in range(2 * n_steps + 1):
        out[j] = plant.turbine_profile_eval(profile, t0 + j * (0.5 * h)) / 100.0
    return out


def rate_driven_half_grid(r_int: np.ndarray, p0: float, profile: PowerProfile,
                          t0: float, dt_ctrl: float, h: float,
                          n_steps: int) -> np.ndarray:
    """Turbine demand half grid when block rates steer toward profile targets.

    Mirrors the plant's per-step rate evaluation exactly: both half points of a
    step are computed from the step-start power.
    """
    r_int = np.atleast_2d(r_int)
    B = r_int.shape[0]
    steps_per_int = int(round(dt_ctrl / h))
    grid = np.empty((B, 2 * n_steps + 1))
    grid[:, 0] = p0
    for k in range(n_steps):
        t = t0 + k * h
        target = profile.target_at(t) / 100.0
        r_norm = r_int[:, min(k // steps_per_int, r_int.shape[1] - 1)] / 100.0 / 60.0
        p_cur = grid[:, 2 * k]
        gap = target - p_cur
        for off, dt in ((1, 0.5 * h), (2, h)):
            move = r_norm * dt
            grid[:, 2 * k + off] = np.where(np.abs(gap) <= move, target,
                                            p_cur + np.copysign(move, gap))
    return grid


def integrate_batch(y0: np.ndarray, q_eff: np.ndarray, p_half: np.ndarray,
                    h: float, params: PlantParams,
                    dwell0: float = 0.0) -> np.ndarray:
    """RK4-integrate a batch of schedules; returns (B, n_steps+1, 8)."""
    y0 = np.atleast_2d(np.asarray(y0, dtype=float))
    q_eff = np.atleast_2d(np.asarray(q_eff, dtype=float))
    p_half = np.atleast_2d(np.asarray(p_half, dtype=float))
    B = q_eff.shape[0]
    y0 = np.ascontiguousarray(np.broadcast_to(y0, (B, plant.N_VARS)))
    p_half = np.ascontiguousarray(np.broadcast_to(p_half,
                                                  (B, p_half.shape[1])))
    dwell = np.full(B, dwell0)
    return _kernel.integrate(y0, np.ascontiguousarray(q_eff), p_half, h,
                             plant.kernel_constants(params), dwell)


def _commanded_per_sample(q_int: np.ndarray, dt_ctrl: float, h: float,
                          n_steps: int) -> np.ndarray:
    steps_per_int = int(round(dt_ctrl / h))
    idx = np.minimum(np.arange(n_steps) // steps_per_int, q_int.shape[-1] - 1)
    per_step = q_int[..., idx]
    first = per_step[..., :1] if n_steps else np.zeros_like(q_int[..., :1])
    return np.concatenate([first, per_step], axis=-1)


def predict(init: CoreState, plan: ControlPlan, params: PlantParams,
            profile: PowerProfile, h: float = 60.0,
            horizon: float | None = None) -> Trajectory:
    """Simulate the plan from ``init``; deterministic, same model as the plant.

    ``horizon`` may extend the run past the plan's coverage (the last command
    is held), e.g. for a longer preview.
    """
    if not init.finite():
        raise ValueError("initial state contains nonfinite values")
    plan.validate_flows(params)
    if horizon is None:
        horizon = plan.horizon
    n_steps = int(round(horizon / h))
    if abs(n_steps * h - horizon) > 1e-9:
        raise ValueError("prediction step must divide the horizon")
    times = plan.t0 + h * np.arange(n_steps + 1)
    y0 = plant.state_to_vector(init)
    if init.t != plan.t0:
        raise ValueError("plan must start at the initial state's time")

    if n_steps == 0:
        q_cmd = np.array([plan.first_input()[0]])
        return Trajectory(times=times, Y=y0[None, :], n=np.array([init.n]),
                          AO=np.array([init.AO]), p_turb=np.array([init.p_turb]),
                          q_cmd=q_cmd, initial=init)

    if int(round(plan.dt_ctrl / h)) * h != plan.dt_ctrl:
        raise ValueError("prediction step must divide the control interval")

    q_int = plan.q_per_interval()[None, :]
    q_eff = effective_flow_steps(q_int, plan.t0, plan.dt_ctrl, init.cvcs_queue,
                                 params.tau_d, h, n_steps)
    r_int = plan.r_per_interval()
    if r_int is not None:
        p_half = rate_driven_half_grid(r_int[None, :], init.p_turb, profile,
                                       plan.t0, plan.dt_ctrl, h, n_steps)
    else:
        p_half = profile_half_grid(profile, plan.t0, h, n_steps)[None, :]

    Y = integrate_batch(y0, q_eff, p_half, h, params,
                        dwell0=init.dwell_level)[0]
    if not np.all(np.isfinite(Y[-1])):
        bad = int(np.argmax(~np.isfinite(Y[-1])))
        raise plant.NonFiniteStateError(plant._COMPONENT_NAMES[bad],
                                        float(times[-1]))

    n = plant.criticality_closure(0.5 * (Y[:, 2] + Y[:, 3]), Y[:, 4], Y[:, 5],
                                  Y[:, 6], params)
    AO = plant.axial_shape(Y[:, 5], Y[:, 2], Y[:, 3], params)
    q_cmd = _commanded_per_sample(q_int[0], plan.dt_ctrl, h, n_steps)
    return Trajectory(times=times, Y=Y, n=n, AO=AO, p_turb=p_half[0, ::2],
                      q_cmd=q_cmd, initial=init)
