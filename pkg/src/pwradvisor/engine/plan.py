"""Control plans, predicted trajectories and recommendation payloads."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..params import PlantParams
from ..state import RATE_MAX, RATE_MIN, CoreState
from .. import plant


@dataclass(frozen=True)
class PlanBlock:
    """One move-blocked decision: ``repeat`` control intervals sharing the
    same flow command ``q`` (kg/s) and optional turbine rate (%NP/min)."""

    repeat: int
    q: float
    r_turb: float | None = None


@dataclass(frozen=True)
class ControlPlan:
    """Piecewise-constant control schedule starting at ``t0``.

    Blocks must cover the horizon; every flow stays inside the pump box and
    every rate (when present) inside [RATE_MIN, RATE_MAX].
    """

    t0: float
    blocks: tuple[PlanBlock, ...]
    dt_ctrl: float = 600.0
    horizon: float = 86400.0

    def __post_init__(self) -> None:
        if self.dt_ctrl <= 0.0 or self.horizon < 0.0:
            raise ValueError("dt_ctrl must be positive and horizon nonnegative")
        covered = sum(b.repeat for b in self.blocks) * self.dt_ctrl
        if covered < self.horizon:
            raise ValueError(f"blocks cover {covered} s < horizon {self.horizon} s")
        for b in self.blocks:
            if b.repeat < 1:
                raise ValueError("block repeat must be >= 1")
            if b.r_turb is not None and not RATE_MIN <= b.r_turb <= RATE_MAX:
                raise ValueError(f"turbine rate {b.r_turb} outside "
                                 f"[{RATE_MIN}, {RATE_MAX}] %NP/min")

    def validate_flows(self, params: PlantParams) -> None:
        lo, hi = params.flow_bounds
        for b in self.blocks:
            if not lo <= b.q <= hi:
                raise ValueError(f"flow {b.q} kg/s outside [{lo}, {hi}]")

    @property
    def n_intervals(self) -> int:
        return int(math.ceil(self.horizon / self.dt_ctrl)) if self.horizon > 0 else 0

    @property
    def rate_driven(self) -> bool:
        return self.blocks[0].r_turb is not None if self.blocks else False

    def q_per_interval(self) -> np.ndarray:
        out = np.concatenate([np.full(b.repeat, b.q) for b in self.blocks]) \
            if self.blocks else np.zeros(0)
        return out[: self.n_intervals]

    def r_per_interval(self) -> np.ndarray | None:
        if not self.rate_driven:
            return None
        out = np.concatenate([np.full(b.repeat, b.r_turb) for b in self.blocks])
        return out[: self.n_intervals]

    def first_input(self) -> tuple[float, float | None]:
        if not self.blocks:
            return 0.0, None
        return self.blocks[0].q, self.blocks[0].r_turb

    def shifted(self, n_intervals: int = 1) -> "ControlPlan":
        """Warm-start shift: drop the leading intervals and pad the tail."""
        q = self.q_per_interval()
        r = self.r_per_interval()
        q = np.concatenate([q[n_intervals:], np.repeat(q[-1:], n_intervals)])
        if r is not None:
            r = np.concatenate([r[n_intervals:], np.repeat(r[-1:], n_intervals)])
        pattern = [b.repeat for b in self.blocks]
        return from_interval_values(self.t0 + n_intervals * self.dt_ctrl,
                                    pattern, q, r, self.dt_ctrl, self.horizon)


def blocking_pattern(horizon: float, dt_ctrl: float = 600.0,
                     n_single: int = 6) -> list[int]:
    """Move-blocking repeats: ``n_single`` singles, then doubling lengths."""
    total = int(math.ceil(horizon / dt_ctrl))
    pattern: list[int] = []
    remaining = total
    for _ in range(min(n_single, total)):
        pattern.append(1)
        remaining -= 1
        if remaining == 0:
            return pattern
    width = 2
    while remaining > 0:
        take = min(width, remaining)
        pattern.append(take)
        remaining -= take
        width *= 2
    return pattern


def from_interval_values(t0: float, pattern: list[int] | tuple[int, ...],
                         q: np.ndarray, r: np.ndarray | None,
                         dt_ctrl: float, horizon: float) -> ControlPlan:
    """Build a plan from per-interval value arrays re-blocked to ``pattern``
    (each block takes the value of its first interval)."""
    blocks = []
    idx = 0
    for rep in pattern:
        r_val = float(r[idx]) if r is not None else None
        blocks.append(PlanBlock(repeat=rep, q=float(q[idx]), r_turb=r_val))
        idx += rep
    return ControlPlan(t0=t0, blocks=tuple(blocks), dt_ctrl=dt_ctrl,
                       horizon=horizon)


@dataclass(frozen=True)
class Trajectory:
    """Predicted evolution sampled at the prediction step.

    The first sample equals the initial state; arrays all share length
    ``len(times)``.
    """

    times: np.ndarray            # (K+1,) s
    Y: np.ndarray                # (K+1, 8) integrated state vectors
    n: np.ndarray                # (K+1,) normalized power
    AO: np.ndarray               # (K+1,) %
    p_turb: np.ndarray           # (K+1,) normalized demand
    q_cmd: np.ndarray            # (K+1,) commanded flow active per sample, kg/s
    initial: CoreState

    def __len__(self) -> int:
        return len(self.times)

    @property
    def dI_ax(self) -> np.ndarray:
        return self.Y[:, 0] - self.Y[:, 1]

    @property
    def dX_ax(self) -> np.ndarray:
        return self.Y[:, 2] - self.Y[:, 3]

    @property
    def effluent(self) -> np.ndarray:
        return self.Y[:, 7]

    def ao_dev(self, ao_ref: float) -> np.ndarray:
        return self.AO - ao_ref

    def state_at(self, k: int, params: PlantParams) -> CoreState:
        return plant.vector_to_state(self.Y[k], float(self.times[k]),
                                     float(self.p_turb[k]), (), params)


@dataclass(frozen=True)
class SolveDiagnostics:
    """Solver health record attached to every recommendation."""

    objective: float
    violation: float             # true max hinge residual of the returned plan
    iterations: int
    wall_time: float
    warm_started: bool
    converged: bool
    budget_exhausted: bool = False
    # accepted-iterate merit sequence, one tuple per outer round
    objective_rounds: tuple[tuple[float, ...], ...] = ()


@dataclass(frozen=True)
class RecommendationRow:
    """One line of the operator table: split flows plus rate and apply time."""

    apply_at: float              # s
    dilution: float              # kg/s, >= 0
    boration: float              # kg/s, >= 0
    r_turb: float | None = None  # %NP/min

    @staticmethod
    def from_signed(apply_at: float, q: float,
                    r_turb: float | None = None) -> "RecommendationRow":
        return RecommendationRow(apply_at=apply_at,
                                 dilution=max(q, 0.0),
                                 boration=max(-q, 0.0),
                                 r_turb=r_turb)


@dataclass(frozen=True)
class Recommendation:
    """Advisory output: plan, predicted trajectory and the operator rows."""

    issued_at: float
    plan: ControlPlan
    predicted: Trajectory
    current_row: RecommendationRow
    next_row: RecommendationRow
    diagnostics: SolveDiagnostics
    ao_ref: float = 0.0

    def applied_input(self) -> tuple[float, float | None]:
        """Signed flow and rate the operator should currently apply."""
        q = self.current_row.dilution - self.current_row.boration
        return q, self.current_row.r_turb


def build_rows(plan: ControlPlan, issued_at: float) -> tuple[RecommendationRow,
                                                             RecommendationRow]:
    """Current and next recommendation rows from a plan aligned on ``t0``."""
    q = plan.q_per_interval()
    r = plan.r_per_interval()
    dt = plan.dt_ctrl
    next_at = math.floor(issued_at / dt) * dt + dt
    cur = RecommendationRow.from_signed(plan.t0, float(q[0]),
                                        float(r[0]) if r is not None else None)
    idx = min(int(round((next_at - plan.t0) / dt)), len(q) - 1)
    nxt = RecommendationRow.from_signed(next_at, float(q[idx]),
                                        float(r[idx]) if r is not None else None)
    return cur, nxt
