"""Core state, control input and turbine power profile types.

All values are plain floats so states are cheap to copy and hand to a
prediction worker while the plant keeps stepping.  The CVCS transport
delay is carried inside the state as an ordered queue of
``(entry_time, flow)`` command pairs; a command entered at time ``t``
becomes effective at ``t + tau_d`` (quantized to the integration step).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

RATE_MIN = 0.1   # %NP/min, lowest selectable turbine rate
RATE_MAX = 5.0   # %NP/min


@dataclass(frozen=True)
class ControlInput:
    """Signed injection flow plus optional turbine rate command.

    ``q > 0`` dilutes at ``q`` kg/s, ``q < 0`` borates at ``|q|`` kg/s,
    so dilution and boration are mutually exclusive by construction.
    ``r_turb`` (%NP/min, magnitude) is only used when the turbine is
    rate-driven; ``None`` leaves the profile's own rate in charge.
    """

    q: float = 0.0
    r_turb: float | None = None


@dataclass(frozen=True)
class CoreState:
    """Full dynamic state of the simulated plant at time ``t`` (seconds).

    ``n`` and ``AO`` are algebraic outputs of the criticality and shape
    closures, stored for convenience; they are recomputed whenever the
    state is advanced.
    """

    t: float
    i_t: float           # top-node iodine, normalized to full-power equilibrium
    i_b: float           # bottom-node iodine
    x_t: float           # top-node xenon
    x_b: float           # bottom-node xenon
    C_B: float           # boron concentration, ppm
    z: float             # rod bank position, steps withdrawn
    T_dev: float         # coolant temperature deviation from program, degC
    n: float             # normalized core thermal power
    AO: float            # axial offset, %
    p_turb: float        # normalized turbine power demand
    m_eff: float = 0.0   # cumulative effluent mass, kg
    cvcs_queue: tuple[tuple[float, float], ...] = ()
    # integrator bookkeeping: deadband boundary the rod controller is
    # sliding on (0 when the controller is not pinned to a boundary)
    dwell_level: float = 0.0

    def finite(self) -> bool:
        vals = (self.i_t, self.i_b, self.x_t, self.x_b, self.C_B,
                self.z, self.T_dev, self.n, self.AO, self.p_turb, self.m_eff)
        return all(math.isfinite(v) for v in vals)

    @property
    def x_mean(self) -> float:
        return 0.5 * (self.x_t + self.x_b)

    @property
    def dI_ax(self) -> float:
        """Iodine axial imbalance i_t - i_b."""
        return self.i_t - self.i_b

    @property
    def dX_ax(self) -> float:
        """Xenon axial imbalance x_t - x_b."""
        return self.x_t - self.x_b

    def with_time(self, t: float) -> "CoreState":
        return replace(self, t=t)


@dataclass(frozen=True)
class ProfileSegment:
    """One scheduled power variation: ramp toward ``target`` at ``rate``."""

    start: float    # s
    target: float   # %NP in [15, 100]
    rate: float     # %NP/min, > 0

    def __post_init__(self) -> None:
        if not 15.0 <= self.target <= 100.0:
            raise ValueError(f"segment target {self.target} %NP outside [15, 100]")
        if self.rate <= 0.0:
            raise ValueError("segment rate must be > 0")
        if self.start < 0.0:
            raise ValueError("segment start must be >= 0")


@dataclass(frozen=True)
class PowerProfile:
    """Scheduled turbine power profile: initial power plus ordered segments."""

    initial: float                                  # %NP
    segments: tuple[ProfileSegment, ...] = field(default_factory=tuple)

    def __post_init__(self) -> None:
        if not 15.0 <= self.initial <= 100.0:
            raise ValueError(f"initial power {self.initial} %NP outside [15, 100]")
        starts = [s.start for s in self.segments]
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise ValueError("profile segments must be strictly increasing in start time")

    def piecewise_linear(self) -> tuple[tuple[float, float], ...]:
        """Knot list (t, %NP) of the scheduled piecewise-linear power."""
        knots = [(0.0, self.initial)]
        power = self.initial
        for seg in self.segments:
            t0 = seg.start
            if t0 > knots[-1][0]:
                knots.append((t0, power))
            ramp_s = abs(seg.target - power) / seg.rate * 60.0
            knots.append((t0 + ramp_s, seg.target))
            power = seg.target
        return tuple(knots)

    def power_at(self, t: float) -> float:
        """Scheduled %NP at time ``t`` (the profile's own rates)."""
        knots = self.piecewise_linear()
        if t <= knots[0][0]:
            return knots[0][1]
        for (t0, p0), (t1, p1) in zip(knots, knots[1:]):
            if t <= t1:
                if t1 == t0:
                    return p1
                return p0 + (p1 - p0) * (t - t0) / (t1 - t0)
        return knots[-1][1]

    def target_at(self, t: float) -> float:
        """Destination %NP of the segment active at ``t`` (initial power before
        the first segment starts)."""
        target = self.initial
        for seg in self.segments:
            if t >= seg.start:
                target = seg.target
        return target

    def final_target(self) -> float:
        return self.segments[-1].target if self.segments else self.initial
