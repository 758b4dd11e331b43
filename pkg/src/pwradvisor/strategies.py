"""The four selectable advisory strategies, defined as data.

Each strategy is a set of objective weights, an axial-offset deviation
envelope (possibly power-dependent) and decision-variable flags consumed
by the predictive engine.  Exact weight magnitudes are free parameters,
tuned once against the closed-loop acceptance behavior and frozen here.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field, replace

import numpy as np

from .state import RATE_MAX, RATE_MIN

NOMINAL_BOUND = 5.0  # %, the displayed operating limit no strategy tightens


class StrategyKind(str, enum.Enum):
    AO_CONTROL = "AoControl"
    FASTEST_RATES = "FastestRates"
    OSCILLATION_CANCEL = "OscillationCancel"
    EFFLUENT_MIN = "EffluentMin"


@dataclass(frozen=True)
class EnvelopeSchedule:
    """AO-deviation bound (%) as a function of normalized power.

    ``constant``: ``base`` everywhere.  ``linear``: ``base`` at or above
    ``p_hi``, ``wide`` at or below ``p_lo``, linear in between.
    """

    base: float = NOMINAL_BOUND
    wide: float | None = None
    p_lo: float = 0.55
    p_hi: float = 0.85

    def __post_init__(self) -> None:
        if self.base < NOMINAL_BOUND:
            raise ValueError(f"envelope base {self.base} tightens below "
                             f"the nominal {NOMINAL_BOUND} % limit")
        if self.wide is not None:
            if self.wide < self.base:
                raise ValueError("wide bound must not be tighter than base")
            if not self.p_lo < self.p_hi:
                raise ValueError("p_lo must be below p_hi")

    def bound(self, power):
        if self.wide is None:
            return self.base * np.ones_like(np.asarray(power, dtype=float))
        frac = np.clip((self.p_hi - power) / (self.p_hi - self.p_lo), 0.0, 1.0)
        return self.base + (self.wide - self.base) * frac


@dataclass(frozen=True)
class StrategySpec:
    """Objective weights, constraint envelope and decision flags."""

    kind: StrategyKind
    ao_ref: float                      # %
    w_AO: float = 0.0                  # per %^2 per interval
    w_u: float = 0.0                   # per (kg/s)^2 per interval
    w_eff: float = 0.0                 # per kg of effluent
    w_track: float = 0.0               # per (normalized power)^2 per interval
    w_T: float = 0.0                   # terminal imbalance weight
    envelope: EnvelopeSchedule = field(default_factory=EnvelopeSchedule)
    optimize_turbine_rate: bool = False
    rate_bounds: tuple[float, float] = (RATE_MIN, RATE_MAX)
    target_power: float | None = None  # %NP, informational for FastestRates

    _ACTIVE = {
        StrategyKind.AO_CONTROL: ("w_AO", "w_u"),
        StrategyKind.FASTEST_RATES: ("w_track", "w_AO"),
        StrategyKind.OSCILLATION_CANCEL: ("w_T", "w_AO"),
        StrategyKind.EFFLUENT_MIN: ("w_eff", "w_AO"),
    }

    def __post_init__(self) -> None:
        weights = {"w_AO": self.w_AO, "w_u": self.w_u, "w_eff": self.w_eff,
                   "w_track": self.w_track, "w_T": self.w_T}
        for name, val in weights.items():
            if val < 0.0:
                raise ValueError(f"{name} must be nonnegative")
        active = self._ACTIVE[self.kind]
        for name in active:
            if weights[name] <= 0.0:
                raise ValueError(f"{self.kind.value} requires {name} > 0")
        for name, val in weights.items():
            if name not in active and val != 0.0:
                raise ValueError(f"{self.kind.value} must keep {name} = 0")
        lo, hi = self.rate_bounds
        if not (RATE_MIN <= lo <= hi <= RATE_MAX):
            raise ValueError(f"rate_bounds must lie inside [{RATE_MIN}, {RATE_MAX}]")

    def active_weights(self) -> dict[str, float]:
        return {name: getattr(self, name) for name in self._ACTIVE[self.kind]}

    def with_overrides(self, **kwargs) -> "StrategySpec":
        return replace(self, **kwargs)

    def to_dict(self) -> dict:
        return {
            "kind": self.kind.value,
            "ao_ref": self.ao_ref,
            "w_AO": self.w_AO, "w_u": self.w_u, "w_eff": self.w_eff,
            "w_track": self.w_track, "w_T": self.w_T,
            "envelope": {"base": self.envelope.base, "wide": self.envelope.wide,
                         "p_lo": self.envelope.p_lo, "p_hi": self.envelope.p_hi},
            "optimize_turbine_rate": self.optimize_turbine_rate,
            "rate_bounds": list(self.rate_bounds),
            "target_power": self.target_power,
        }


def _check_ao_ref(ao_ref: float) -> None:
    if abs(ao_ref) > 20.0:
        raise ValueError(f"AO reference {ao_ref} % outside [-20, 20]")


def make_ao_control(ao_ref: float) -> StrategySpec:
    """Standard strategy: hold the AO at its reference value."""
    _check_ao_ref(ao_ref)
    return StrategySpec(kind=StrategyKind.AO_CONTROL, ao_ref=ao_ref,
                        w_AO=1.0, w_u=0.02,
                        envelope=EnvelopeSchedule(base=NOMINAL_BOUND))


def make_fastest_rates(target: float,
                       rate_bounds: tuple[float, float] = (RATE_MIN, RATE_MAX),
                       ao_ref: float = 0.0) -> StrategySpec:
    """Find the fastest feasible turbine rates toward ``target`` %NP."""
    _check_ao_ref(ao_ref)
    if not 15.0 <= target <= 100.0:
        raise ValueError(f"target {target} %NP outside [15, 100]")
    return StrategySpec(kind=StrategyKind.FASTEST_RATES, ao_ref=ao_ref,
                        w_track=1.0, w_AO=0.05,
                        envelope=EnvelopeSchedule(base=NOMINAL_BOUND),
                        optimize_turbine_rate=True,
                        rate_bounds=tuple(rate_bounds), target_power=target)


def make_oscillation_cancel(ao_ref: float) -> StrategySpec:
    """Deliberately deviate the AO to steer the axial iodine imbalance to
    equilibrium faster than reference-holding does."""
    _check_ao_ref(ao_ref)
    return StrategySpec(kind=StrategyKind.OSCILLATION_CANCEL, ao_ref=ao_ref,
                        w_T=500000.0, w_AO=0.005,
                        envelope=EnvelopeSchedule(base=12.0))


def make_effluent_min(low_power_bound: float = 15.0,
                      ao_ref: float = 0.0) -> StrategySpec:
    """Trade AO tightness at low power for fewer injections."""
    _check_ao_ref(ao_ref)
    if low_power_bound < NOMINAL_BOUND:
        raise ValueError(f"low_power_bound must be >= {NOMINAL_BOUND} %")
    return StrategySpec(kind=StrategyKind.EFFLUENT_MIN, ao_ref=ao_ref,
                        w_eff=0.008, w_AO=0.08,
                        envelope=EnvelopeSchedule(base=NOMINAL_BOUND,
                                                  wide=low_power_bound))


_CONSTRUCTORS = {
    StrategyKind.AO_CONTROL: lambda ao_ref=0.0, **kw: make_ao_control(ao_ref),
    StrategyKind.FASTEST_RATES:
        lambda ao_ref=0.0, target=100.0, rate_bounds=(RATE_MIN, RATE_MAX), **kw:
        make_fastest_rates(target, rate_bounds, ao_ref),
    StrategyKind.OSCILLATION_CANCEL:
        lambda ao_ref=0.0, **kw: make_oscillation_cancel(ao_ref),
    StrategyKind.EFFLUENT_MIN:
        lambda ao_ref=0.0, low_power_bound=15.0, **kw:
        make_effluent_min(low_power_bound, ao_ref),
}

_WEIGHT_OVERRIDES = ("w_AO", "w_u", "w_eff", "w_track", "w_T")


def make_strategy(kind: str | StrategyKind, ao_ref: float = 0.0,
                  **overrides) -> StrategySpec:
    """Build a strategy by kind name with optional numeric overrides."""
    kind = StrategyKind(kind)
    ctor_kw = {k: overrides.pop(k) for k in ("target", "rate_bounds",
                                             "low_power_bound")
               if k in overrides}
    spec = _CONSTRUCTORS[kind](ao_ref=ao_ref, **ctor_kw)
    weight_kw = {k: overrides.pop(k) for k in _WEIGHT_OVERRIDES if k in overrides}
    if overrides:
        raise ValueError(f"unknown strategy overrides {sorted(overrides)}")
    return spec.with_overrides(**weight_kw) if weight_kw else spec


def constraint_envelope(spec: StrategySpec, power):
    """AO-deviation bound (%) at the given normalized power level."""
    p = np.asarray(power, dtype=float)
    if np.any(p < 0.15) or np.any(p > 1.0):
        raise ValueError("power must lie in [0.15, 1.0]")
    out = spec.envelope.bound(p)
    return float(out) if p.ndim == 0 else out
