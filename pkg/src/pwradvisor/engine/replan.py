"""Replanning cadence: fire on control-interval boundaries, warm-started.

The scheduler owns the measurement-driven state estimator and the latest
recommendation.  It re-solves only when the simulated clock crosses a
``dt_ctrl`` boundary (or when a profile/strategy edit forces an immediate
out-of-cadence replan); calls in between return the cached recommendation.
"""

from __future__ import annotations

import math
from dataclasses import replace

from ..params import PlantParams
from ..state import CoreState, PowerProfile
from ..strategies import StrategySpec
from .estimator import StateEstimator
from .plan import ControlPlan, Recommendation
from .solver import EngineConfig, solve


class ReplanScheduler:
    """Drives solve() from live plant observations at the 10-minute cadence."""

    def __init__(self, strategy: StrategySpec, profile: PowerProfile,
                 params: PlantParams, config: EngineConfig = EngineConfig(),
                 use_estimator: bool = True):
        self.strategy = strategy
        self.profile = profile
        self.params = params
        self.config = config
        self.use_estimator = use_estimator
        self.estimator: StateEstimator | None = None
        self.latest: CoreState | None = None
        self.last_rec: Recommendation | None = None
        self._last_fired: float | None = None
        self._force = False

    # -- observation ------------------------------------------------------

    def observe(self, state: CoreState) -> None:
        """Feed one plant sample (called every plant step, engine on or off)."""
        if self.estimator is None:
            self.estimator = StateEstimator(self.params, state.t, state.n,
                                            state.AO)
        elif state.t > self.estimator.t:
            self.estimator.advance(state.t, state.n, state.AO)
        self.latest = state

    def _estimated_init(self, now: float) -> CoreState:
        state = self.latest
        if state is None:
            raise RuntimeError("no plant observations yet")
        if not self.use_estimator or self.estimator is None:
            return state.with_time(now)
        i_t, i_b, x_t, x_b = self.estimator.concentrations()
        return replace(state, t=now, i_t=i_t, i_b=i_b, x_t=x_t, x_b=x_b)

    # -- edits ------------------------------------------------------------

    def set_profile(self, profile: PowerProfile) -> bool:
        """Replace the scheduled profile; returns False for a no-op."""
        if profile == self.profile:
            return False
        self.profile = profile
        self._force = True
        return True

    def set_strategy(self, strategy: StrategySpec) -> bool:
        if strategy == self.strategy:
            return False
        self.strategy = strategy
        self._force = True
        return True

    # -- cadence ----------------------------------------------------------

    def due(self, now: float) -> bool:
        if self._force:
            return True
        dt = self.config.dt_ctrl
        if not math.isclose(now % dt, 0.0, abs_tol=1e-6) \
                and not math.isclose(now % dt, dt, abs_tol=1e-6):
            return False
        return self._last_fired is None or now > self._last_fired

    def replan(self, now: float, budget: float | None = None) -> Recommendation:
        """Solve if due, else return the cached recommendation."""
        if not self.due(now):
            if self.last_rec is None:
                raise RuntimeError("first replan must fall on a cadence boundary")
            return self.last_rec

        init = self._estimated_init(now)
        warm: ControlPlan | None = None
        if self.last_rec is not None:
            prev = self.last_rec.plan
            shift = (now - prev.t0) / prev.dt_ctrl
            k = int(round(shift))
            if math.isclose(shift, k, abs_tol=1e-9) and 0 < k < prev.n_intervals:
                warm = prev.shifted(k)
            elif k == 0:
                warm = prev
        rec = solve(init, self.strategy, self.profile, self.params,
                    warm=warm, budget=budget, config=self.config)
        self.last_rec = rec
        self._last_fired = now
        self._force = False
        return rec
