"""Receding-horizon solve: direct single shooting over move-blocked inputs.

Box constraints are handled by projection, the power-dependent AO path
constraint by a quadratic hinge penalty with multiplier escalation
(augmented-Lagrangian style, up to three outer rounds).  The inner loop is
projected gradient descent with a backtracking step ladder; gradients come
from forward finite differences evaluated as one batched prediction sweep.
Everything is deterministic for fixed inputs and iteration budget.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, replace

import numpy as np

from .. import plant
from ..params import PlantParams
from ..state import CoreState, PowerProfile
from ..strategies import StrategyKind, StrategySpec
from .predict import (effective_flow_steps, integrate_batch, predict,
                      profile_half_grid, rate_driven_half_grid)
from .objective import batch_objective, make_targets, objective_eval
from .plan import (ControlPlan, PlanBlock, Recommendation, SolveDiagnostics,
                   Trajectory, blocking_pattern, build_rows,
                   from_interval_values)

_LADDER = (1.0, 0.5, 0.25, 0.125, 0.0625)


@dataclass(frozen=True)
class EngineConfig:
    """Solver and cadence settings; defaults sized so a cold solve stays
    well under the real-time budget on commodity hardware."""

    h_pred: float = 60.0            # prediction step, s
    dt_ctrl: float = 600.0          # control interval, s
    horizon: float = 86400.0        # optimization horizon, s
    preview_horizon: float = 86400.0
    horizon_osc_cancel: float = 21600.0  # shorter terminal date forces action
    n_single_blocks: int = 6
    outer_rounds: int = 3
    max_iters: int = 20             # inner iterations per round
    fd_step: float = 1e-5           # normalized decision units
    alpha0: float = 0.1             # initial max coordinate move
    alpha_max: float = 0.5
    mu0: float = 50.0               # initial hinge penalty weight
    mu_growth: float = 10.0
    feas_tol: float = 0.1           # %, AO hinge tolerance
    budget: float = 5.0             # wall-clock seconds


class _ShootingProblem:
    """Batched merit evaluation for normalized decision vectors."""

    def __init__(self, init: CoreState, strategy: StrategySpec,
                 profile: PowerProfile, params: PlantParams,
                 cfg: EngineConfig, horizon: float):
        self.init = init
        self.strategy = strategy
        self.profile = profile
        self.params = params
        self.cfg = cfg
        self.horizon = horizon
        self.h = cfg.h_pred
        self.dt_ctrl = cfg.dt_ctrl
        self.n_steps = int(round(horizon / self.h))
        self.steps_per_int = int(round(self.dt_ctrl / self.h))
        self.n_int = self.n_steps // self.steps_per_int
        self.pattern = blocking_pattern(horizon, self.dt_ctrl,
                                        cfg.n_single_blocks)
        self.n_blocks = len(self.pattern)
        self.rate_driven = strategy.optimize_turbine_rate
        self.dim = self.n_blocks * (2 if self.rate_driven else 1)
        self.q_lo, self.q_hi = params.flow_bounds
        self.r_lo, self.r_hi = strategy.rate_bounds
        self.t0 = init.t
        self.y0 = plant.state_to_vector(init)
        self.idx_int = np.arange(self.steps_per_int, self.n_steps + 1,
                                 self.steps_per_int)
        self._block_expand = np.repeat(np.arange(self.n_blocks), self.pattern)
        self._block_expand = self._block_expand[: self.n_int]
        self.targets = make_targets(strategy, profile, params, self.t0,
                                    self.dt_ctrl, self.n_int)
        if not self.rate_driven:
            self._p_half = profile_half_grid(
                profile, self.t0, self.h, self.n_steps)[None, :]
        self.evals = 0

    # -- decision vector codecs ------------------------------------------

    def decode(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray | None]:
        X = np.atleast_2d(X)
        q_blocks = self.q_lo + X[:, : self.n_blocks] * (self.q_hi - self.q_lo)
        q_int = q_blocks[:, self._block_expand]
        r_int = None
        if self.rate_driven:
            r_blocks = self.r_lo + X[:, self.n_blocks:] * (self.r_hi - self.r_lo)
            r_int = r_blocks[:, self._block_expand]
        return q_int, r_int

    def encode_plan(self, plan: ControlPlan) -> np.ndarray:
        q = plan.q_per_interval()
        starts = np.cumsum([0] + list(self.pattern))[:-1]
        starts = np.minimum(starts, len(q) - 1)
        x_q = (q[starts] - self.q_lo) / (self.q_hi - self.q_lo)
        parts = [x_q]
        if self.rate_driven:
            r = plan.r_per_interval()
            if r is None:
                r = np.full(self.n_int, self.r_lo)
            starts_r = np.minimum(starts, len(r) - 1)
            parts.append((r[starts_r] - self.r_lo) / (self.r_hi - self.r_lo))
        return np.clip(np.concatenate(parts), 0.0, 1.0)

    def make_plan(self, x: np.ndarray) -> ControlPlan:
        q_int, r_int = self.decode(x[None, :])
        return from_interval_values(self.t0, self.pattern, q_int[0],
                                    r_int[0] if r_int is not None else None,
                                    self.dt_ctrl, self.horizon)

    # -- evaluation -------------------------------------------------------

    def evaluate(self, X: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Cost and hinge residuals for a batch of normalized vectors."""
        X = np.atleast_2d(X)
        q_int, r_int = self.decode(X)
        q_eff = effective_flow_steps(
            q_int, self.t0, self.dt_ctrl, self.init.cvcs_queue,
            self.params.tau_d, self.h, self.n_steps)
        if self.rate_driven:
            p_half = rate_driven_half_grid(
                r_int, self.init.p_turb, self.profile, self.t0, self.dt_ctrl,
                self.h, self.n_steps)
        else:
            p_half = np.broadcast_to(self._p_half,
                                     (X.shape[0], self._p_half.shape[1]))
        Y = integrate_batch(self.y0, q_eff, p_half, self.h, self.params,
                            dwell0=self.init.dwell_level)
        self.evals += X.shape[0]
        Yi = Y[:, self.idx_int]
        ao = plant.axial_shape(Yi[..., 5], Yi[..., 2], Yi[..., 3], self.params)
        n = plant.criticality_closure(0.5 * (Yi[..., 2] + Yi[..., 3]),
                                      Yi[..., 4], Yi[..., 5], Yi[..., 6],
                                      self.params)
        p_int = p_half[:, ::2][:, self.idx_int]
        cost, hinge = batch_objective(ao, n, p_int, q_int, Yi[..., 6],
                                      Y[:, -1, 0] - Y[:, -1, 1],
                                      Y[:, -1, 2] - Y[:, -1, 3],
                                      self.strategy, self.targets, self.dt_ctrl)
        return cost, hinge

    def merit(self, X: np.ndarray, lam: np.ndarray,
              mu: float) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        cost, hinge = self.evaluate(X)
        m = cost + hinge @ lam + mu * np.sum(hinge ** 2, axis=1)
        return m, cost, hinge


def fd_gradient(problem: _ShootingProblem, x: np.ndarray, f_x: float,
                lam: np.ndarray, mu: float, eta: float) -> np.ndarray:
    """Forward finite-difference merit gradient (one batched sweep); flips to
    a backward difference at the upper box edge."""
    d = problem.dim
    signs = np.where(x + eta > 1.0, -1.0, 1.0)
    X = np.repeat(x[None, :], d, axis=0)
    X[np.arange(d), np.arange(d)] += signs * eta
    m, _, _ = problem.merit(X, lam, mu)
    return (m - f_x) / (signs * eta)


def _inner_descent(problem: _ShootingProblem, x: np.ndarray, lam: np.ndarray,
                   mu: float, cfg: EngineConfig, deadline: float,
                   accepted: list[float]) -> tuple[np.ndarray, int, bool]:
    """Projected gradient descent; returns (x, iterations, hit_budget)."""
    m_cur, _, _ = problem.merit(x[None, :], lam, mu)
    m_cur = float(m_cur[0])
    accepted.append(m_cur)
    alpha = cfg.alpha0
    it = 0
    grad = None
    while it < cfg.max_iters:
        if time.perf_counter() > deadline:
            return x, it, True
        if grad is None:
            grad = fd_gradient(problem, x, m_cur, lam, mu, cfg.fd_step)
        gmax = float(np.max(np.abs(grad)))
        if gmax <= 1e-14:
            break
        step_dir = grad / gmax
        cands = np.clip(x[None, :] - (alpha * np.array(_LADDER))[:, None]
                        * step_dir[None, :], 0.0, 1.0)
        m_c, _, _ = problem.merit(cands, lam, mu)
        it += 1
        better = np.nonzero(m_c < m_cur)[0]
        if len(better) == 0:
            # keep the gradient, retry from a much smaller trust step
            alpha *= 0.125
            if alpha < 1e-5:
                break
            continue
        pick = int(better[0])
        x = cands[pick]
        m_cur = float(m_c[pick])
        accepted.append(m_cur)
        grad = None
        alpha = min(alpha * (2.0 if pick == 0 else 1.0), cfg.alpha_max)
    return x, it, False


def solve(init: CoreState, strategy: StrategySpec, profile: PowerProfile,
          params: PlantParams, warm: ControlPlan | None = None,
          budget: float | None = None,
          config: EngineConfig = EngineConfig()) -> Recommendation:
    """Best plan found within the iteration and wall-clock budget.

    Infeasibility is reported through the diagnostics (``converged`` False,
    positive ``violation``), never raised.
    """
    if budget is None:
        budget = config.budget
    if budget <= 0.0:
        raise ValueError("budget must be positive")
    t_start = time.perf_counter()
    deadline = t_start + budget

    horizon = (config.horizon_osc_cancel
               if strategy.kind == StrategyKind.OSCILLATION_CANCEL
               else config.horizon)
    problem = _ShootingProblem(init, strategy, profile, params, config, horizon)

    if warm is not None and warm.rate_driven == problem.rate_driven:
        x = problem.encode_plan(warm)
        warm_started = True
    else:
        x_q = np.full(problem.n_blocks, (0.0 - problem.q_lo)
                      / (problem.q_hi - problem.q_lo))
        parts = [x_q]
        if problem.rate_driven:
            parts.append(np.zeros(problem.n_blocks))  # start at the low rate
        x = np.concatenate(parts)
        warm_started = False

    lam = np.zeros(2 * problem.n_int)  # AO hinge + temperature hinge
    mu = config.mu0
    rounds: list[tuple[float, ...]] = []
    total_iters = 0
    hit_budget = False
    for _ in range(config.outer_rounds):
        accepted: list[float] = []
        x, iters, hit_budget = _inner_descent(problem, x, lam, mu, config,
                                              deadline, accepted)
        rounds.append(tuple(accepted))
        total_iters += iters
        _, hinge = problem.evaluate(x[None, :])
        max_viol = float(np.max(hinge)) if hinge.size else 0.0
        if max_viol <= config.feas_tol or hit_budget:
            break
        lam = lam + 2.0 * mu * hinge[0]
        mu *= config.mu_growth

    plan = problem.make_plan(x)

    # independent recompute of objective and violation on the returned plan
    check_traj = predict(init, plan, params, profile,
                                      h=config.h_pred)
    true_cost, residuals = objective_eval(check_traj, plan, strategy, params,
                                          profile)
    violation = float(np.max(residuals)) if residuals.size else 0.0

    preview_horizon = max(plan.horizon, config.preview_horizon)
    if preview_horizon > plan.horizon:
        preview = predict(init, plan, params, profile,
                                       h=config.h_pred,
                                       horizon=preview_horizon)
    else:
        preview = check_traj

    wall = time.perf_counter() - t_start
    diag = SolveDiagnostics(objective=true_cost, violation=violation,
                            iterations=total_iters, wall_time=wall,
                            warm_started=warm_started,
                            converged=violation <= config.feas_tol,
                            budget_exhausted=hit_budget,
                            objective_rounds=tuple(rounds))
    cur, nxt = build_rows(plan, init.t)
    return Recommendation(issued_at=init.t, plan=plan, predicted=preview,
                          current_row=cur, next_row=nxt, diagnostics=diag,
                          ao_ref=strategy.ao_ref)
