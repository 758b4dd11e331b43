"""Two-node PWR core model: xenon/iodine axial dynamics, boron, rods, turbine.

The model is a deterministic quasi-static ODE system advanced with a fixed-step
classical RK4 scheme.  Normalized core power ``n`` and axial offset ``AO`` are
algebraic closures of the state (no prompt kinetics), which keeps the system
non-stiff at a 10 s plant step and a 60 s prediction step:

* criticality: ``n = 1 + [rho_rod + rho_boron + rho_xenon + alpha_M*T_dev] / gamma_D``
* shape:       ``AO = AO_nat + [-w_ax*(z_max - z) + W_Xax*(x_b - x_t)] / gamma_AO``

Node fluxes ``p_t = n*(1 + AO/100)`` and ``p_b = n*(1 - AO/100)`` drive the
iodine/xenon pair per node; a bang-bang rod bank with deadband regulates the
coolant temperature deviation; the CVCS applies dilution/boration commands
after a pure transport delay carried as a command queue in the state.

All stepping funnels through one batch-capable RK4 kernel, so a single-state
plant step and a batched prediction sweep produce bitwise-identical numbers
for identical inputs.
"""

from __future__ import annotations

import math
from dataclasses import replace
from functools import lru_cache

import numpy as np

from . import _kernel
from .params import PlantParams
from .state import ControlInput, CoreState, PowerProfile

N_VARS = _kernel.N_VARS  # i_t, i_b, x_t, x_b, C_B, z, T_dev, m_eff


@lru_cache(maxsize=16)
def kernel_constants(params: PlantParams) -> np.ndarray:
    return _kernel.pack_constants(params)


class PlantModelError(Exception):
    """Base class for plant-model failures."""


class NoCriticalBoronError(PlantModelError):
    """Criticality closure requires a negative boron concentration."""


class AxialShapeError(PlantModelError):
    """The equilibrium axial-offset fixed point did not converge."""


class NonFiniteStateError(PlantModelError):
    """Integration produced a nonfinite value; names the failing component."""

    def __init__(self, component: str, t: float):
        super().__init__(f"nonfinite value in component {component!r} at t={t:.1f} s")
        self.component = component
        self.t = t


# ---------------------------------------------------------------------------
# Algebraic closures
# ---------------------------------------------------------------------------

def criticality_closure(x_mean, C_B, z, T_dev, params: PlantParams):
    """Normalized power from the reactivity balance, clamped to [0, 1.2].

    Accepts scalars or arrays (broadcasting); the reference point
    (full power, critical boron, rods at ``z_ref``, equilibrium xenon,
    zero temperature deviation) maps to ``n = 1``.
    """
    rho = (params.w_rod * (z - params.z_ref)
           - params.W_B * (C_B - params.C_B_crit_fp)
           - params.W_X * (x_mean - 1.0)
           + params.alpha_M * T_dev)
    return np.clip(1.0 + rho / params.gamma_D, 0.0, 1.2)


def axial_shape(z, x_t, x_b, params: PlantParams):
    """Axial offset (%) from rod insertion depth and xenon imbalance."""
    return params.AO_nat + (-params.w_ax * (params.z_max - z)
                            + params.W_Xax * (x_b - x_t)) / params.gamma_AO


def rod_controller(T_dev, z, params: PlantParams):
    """Bang-bang rod rate (steps/min): insert when hot, withdraw when cold.

    Zero inside the deadband and whenever the move would leave [0, z_max].
    """
    v = params.v_rod
    rate = np.where(T_dev > params.deadband, -v,
                    np.where(T_dev < -params.deadband, v, 0.0))
    rate = np.where((rate < 0.0) & (z <= 0.0), 0.0, rate)
    rate = np.where((rate > 0.0) & (z >= params.z_max), 0.0, rate)
    return rate


def xenon_equilibrium(p, params: PlantParams):
    """Steady normalized xenon at constant node flux ``p``."""
    f = params.lambda_X + params.sigma_bar
    return f * p / (params.lambda_X + params.sigma_bar * p)


# ---------------------------------------------------------------------------
# RK4 stepping (compiled kernel)
# ---------------------------------------------------------------------------

def rk4_step(y: np.ndarray, q_eff, p_stages, h: float, params: PlantParams,
             dwell: np.ndarray | None = None) -> np.ndarray:
    """One classical RK4 step; ``p_stages`` holds p_turb at (t, t+h/2, t+h).

    ``y`` is one state vector (8,) or a batch (B, 8); concentrations are
    clamped at zero and the rod position to its mechanical range afterwards.
    ``dwell`` (per-row sliding-boundary bookkeeping) is updated in place
    when given.
    """
    y2 = np.atleast_2d(np.asarray(y, dtype=float))
    B = y2.shape[0]
    q = np.broadcast_to(np.asarray(q_eff, dtype=float), (B,))
    p_half = np.empty((B, 3))
    p_half[:, 0] = p_stages[0]
    p_half[:, 1] = p_stages[1]
    p_half[:, 2] = p_stages[2]
    if dwell is None:
        dwell = np.zeros(B)
    Y = _kernel.integrate(np.ascontiguousarray(y2),
                          np.ascontiguousarray(q[:, None]), p_half, h,
                          kernel_constants(params), dwell)
    out = Y[:, 1]
    return out[0] if np.ndim(y) == 1 else out


_COMPONENT_NAMES = ("i_t", "i_b", "x_t", "x_b", "C_B", "z", "T_dev", "m_eff")


def state_to_vector(state: CoreState) -> np.ndarray:
    return np.array([state.i_t, state.i_b, state.x_t, state.x_b,
                     state.C_B, state.z, state.T_dev, state.m_eff])


def vector_to_state(y: np.ndarray, t: float, p_turb: float,
                    queue: tuple[tuple[float, float], ...],
                    params: PlantParams, dwell_level: float = 0.0) -> CoreState:
    n = float(criticality_closure(0.5 * (y[2] + y[3]), y[4], y[5], y[6], params))
    ao = float(axial_shape(y[5], y[2], y[3], params))
    return CoreState(t=t, i_t=float(y[0]), i_b=float(y[1]),
                     x_t=float(y[2]), x_b=float(y[3]), C_B=float(y[4]),
                     z=float(y[5]), T_dev=float(y[6]), n=n, AO=ao,
                     p_turb=p_turb, m_eff=float(y[7]), cvcs_queue=queue,
                     dwell_level=dwell_level)


# ---------------------------------------------------------------------------
# CVCS command queue
# ---------------------------------------------------------------------------

def queue_effective_flow(queue: tuple[tuple[float, float], ...], t: float,
                         tau_d: float) -> float:
    """Delayed flow acting at time ``t``: the latest command entered at or
    before ``t - tau_d`` (zero before any command has propagated)."""
    q_eff = 0.0
    for entry_t, q in queue:
        if entry_t + tau_d <= t:
            q_eff = q
        else:
            break
    return q_eff


def queue_push(queue: tuple[tuple[float, float], ...], t: float,
               q: float) -> tuple[tuple[float, float], ...]:
    """Append a command if it changes the commanded flow."""
    last = queue[-1][1] if queue else 0.0
    if q != last:
        return queue + ((t, q),)
    return queue


def queue_prune(queue: tuple[tuple[float, float], ...], t: float,
                tau_d: float) -> tuple[tuple[float, float], ...]:
    """Drop commands superseded by a newer already-active command."""
    last_active = -1
    for idx, (entry_t, _) in enumerate(queue):
        if entry_t + tau_d <= t:
            last_active = idx
        else:
            break
    if last_active <= 0:
        return queue
    return queue[last_active:]


# ---------------------------------------------------------------------------
# Turbine demand
# ---------------------------------------------------------------------------

def turbine_profile_eval(profile: PowerProfile, t: float,
                         p_prev: float | None = None) -> float:
    """Scheduled turbine power (%NP) at time ``t``.

    Ramps from the current power toward each segment's target at the
    segment's own rate, then holds; ``p_prev`` overrides the profile's
    initial power (used when a profile is swapped in mid-run).
    """
    if p_prev is not None and p_prev != profile.initial:
        profile = PowerProfile(initial=p_prev, segments=profile.segments)
    return profile.power_at(t)


def _rate_driven_stages(p0: float, target: float, rate_npm: float,
                        h: float) -> tuple[float, float, float]:
    """p_turb at (t, t+h/2, t+h) moving from ``p0`` toward ``target``
    (normalized units) at ``rate_npm`` %NP/min."""
    r = rate_npm / 100.0 / 60.0  # normalized per second
    gap = target - p0

    def at(dt: float) -> float:
        move = r * dt
        if abs(gap) <= move:
            return target
        return p0 + math.copysign(move, gap)

    return (p0, at(0.5 * h), at(h))


# ---------------------------------------------------------------------------
# Public transitions
# ---------------------------------------------------------------------------

def step(state: CoreState, inp: ControlInput, h: float, params: PlantParams,
         profile: PowerProfile | None = None) -> CoreState:
    """Advance the plant one RK4 step of ``h`` seconds.

    The flow command ``inp.q`` enters the CVCS queue at the current time and
    becomes effective ``tau_d`` later.  Turbine demand comes from ``profile``
    when given (evaluated exactly at the RK4 stage times), from a rate command
    toward the profile target when ``inp.r_turb`` is set, and is held constant
    otherwise.
    """
    if h <= 0.0:
        raise ValueError("step size must be positive")
    lo, hi = params.flow_bounds
    if not lo <= inp.q <= hi:
        raise ValueError(f"flow command {inp.q} kg/s outside [{lo}, {hi}]")

    t = state.t
    queue = queue_push(state.cvcs_queue, t, inp.q)
    q_eff = queue_effective_flow(queue, t, params.tau_d)

    if profile is not None and inp.r_turb is not None:
        target = profile.target_at(t) / 100.0
        p_stages = _rate_driven_stages(state.p_turb, target, inp.r_turb, h)
    elif profile is not None:
        p_stages = (turbine_profile_eval(profile, t) / 100.0,
                    turbine_profile_eval(profile, t + 0.5 * h) / 100.0,
                    turbine_profile_eval(profile, t + h) / 100.0)
    else:
        p_stages = (state.p_turb, state.p_turb, state.p_turb)

    y = state_to_vector(state)
    dwell = np.array([state.dwell_level])
    y_new = rk4_step(y, q_eff, p_stages, h, params, dwell=dwell)

    if not np.all(np.isfinite(y_new)):
        bad = int(np.argmax(~np.isfinite(y_new)))
        raise NonFiniteStateError(_COMPONENT_NAMES[bad], t + h)

    t_new = t + h
    queue = queue_prune(queue, t_new, params.tau_d)
    return vector_to_state(y_new, t_new, p_stages[2], queue, params,
                           dwell_level=float(dwell[0]))


def equilibrium(power_level: float, z_eq: float, params: PlantParams,
                t: float = 0.0) -> CoreState:
    """Steady state at the given normalized power and rod position.

    Iodine matches node flux, xenon its closed-form steady value, the boron
    concentration is solved from the criticality closure and the axial offset
    is the fixed point of the shape equation.  ``step()`` applied to the
    result with matched turbine demand and zero flow reproduces it up to
    integrator tolerance.
    """
    if not 0.15 <= power_level <= 1.0:
        raise ValueError("power_level must lie in [0.15, 1.0]")
    if not 0.0 <= z_eq <= params.z_max:
        raise ValueError("z_eq must lie in [0, z_max]")

    rod_term = -params.w_ax * (params.z_max - z_eq)

    def shape_residual(ao: float) -> float:
        p_t = power_level * (1.0 + ao / 100.0)
        p_b = power_level * (1.0 - ao / 100.0)
        dx = xenon_equilibrium(p_b, params) - xenon_equilibrium(p_t, params)
        return ao - (params.AO_nat + (rod_term + params.W_Xax * dx) / params.gamma_AO)

    lo, hi = -100.0, 100.0
    f_lo, f_hi = shape_residual(lo), shape_residual(hi)
    if not (f_lo < 0.0 < f_hi):
        raise AxialShapeError("axial-offset fixed point not bracketed in [-100, 100] %")
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        f_mid = shape_residual(mid)
        if f_mid == 0.0:
            lo = hi = mid
            break
        if f_mid < 0.0:
            lo = mid
        else:
            hi = mid
    ao = 0.5 * (lo + hi)
    if abs(shape_residual(ao)) > 1e-9:
        raise AxialShapeError("axial-offset fixed point did not converge")

    p_t = power_level * (1.0 + ao / 100.0)
    p_b = power_level * (1.0 - ao / 100.0)
    x_t = float(xenon_equilibrium(p_t, params))
    x_b = float(xenon_equilibrium(p_b, params))

    x_mean = 0.5 * (x_t + x_b)
    C_B = params.C_B_crit_fp + (params.w_rod * (z_eq - params.z_ref)
                                - params.W_X * (x_mean - 1.0)
                                + params.gamma_D * (1.0 - power_level)) / params.W_B
    if C_B < 0.0:
        raise NoCriticalBoronError(
            f"critical boron {C_B:.1f} ppm < 0 at power {power_level:.2f}, "
            f"burnup {params.burnup:.2f}")

    return CoreState(t=t, i_t=p_t, i_b=p_b, x_t=x_t, x_b=x_b, C_B=float(C_B),
                     z=float(z_eq), T_dev=0.0, n=power_level, AO=ao,
                     p_turb=power_level, m_eff=0.0, cvcs_queue=())


def axial_equilibrium_imbalances(power_level: float, ao: float,
                                 params: PlantParams) -> tuple[float, float]:
    """Steady iodine/xenon axial imbalances (i_t - i_b, x_t - x_b) at the
    given power and axial offset; used as convergence/terminal targets."""
    p_t = power_level * (1.0 + ao / 100.0)
    p_b = power_level * (1.0 - ao / 100.0)
    di = p_t - p_b
    dx = float(xenon_equilibrium(p_t, params) - xenon_equilibrium(p_b, params))
    return di, dx


def closure_residual_pcm(state: CoreState, params: PlantParams) -> float:
    """Reactivity residual (pcm) of the criticality closure at ``state.n``."""
    rho = (params.w_rod * (state.z - params.z_ref)
           - params.W_B * (state.C_B - params.C_B_crit_fp)
           - params.W_X * (state.x_mean - 1.0)
           + params.alpha_M * state.T_dev)
    return rho - (state.n - 1.0) * params.gamma_D


def run_profile(state: CoreState, profile: PowerProfile, q_schedule,
                h: float, n_steps: int, params: PlantParams) -> list[CoreState]:
    """Convenience driver: advance ``n_steps`` with per-step commanded flow.

    ``q_schedule`` is either a scalar or a callable ``t -> q``.
    Returns the full list of states including the initial one.
    """
    states = [state]
    q_of = q_schedule if callable(q_schedule) else (lambda _t: q_schedule)
    for _ in range(n_steps):
        states.append(step(states[-1], ControlInput(q=q_of(states[-1].t)),
                           h, params, profile=profile))
    return states
