"""Scenario files: declarative closed-loop experiment descriptions.

Scenarios are TOML files with a flat header, profile segments, an optional
strategy section and optional plant-parameter / solver overrides.  Unknown
keys anywhere are rejected.  The bundled suite reproduces the four appendix
studies (standard AO control, fastest rates, oscillation cancellation and
effluent minimization) plus same-scenario baselines for the comparisons.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .. import plant
from ..engine.solver import EngineConfig
from ..params import PRESET_NAMES, PlantParams, preset
from ..state import PowerProfile, ProfileSegment
from ..strategies import StrategySpec, make_ao_control, make_strategy


class ScenarioError(ValueError):
    """Scenario file failed to parse or validate; names the offending field."""


@dataclass(frozen=True)
class ScenarioConfig:
    """One closed-loop experiment."""

    name: str
    preset_name: str
    params: PlantParams
    initial_power: float            # %NP
    profile: PowerProfile
    strategy: StrategySpec
    duration: float                 # s
    plant_step: float = 10.0        # s
    engine_budget: float = 5.0      # s per solve
    engine_window: tuple[float, float] = (0.0, math.inf)
    output: str | None = None
    seed: int = 0
    engine: EngineConfig = field(default_factory=EngineConfig)

    def __post_init__(self) -> None:
        if self.duration < 0.0:
            raise ScenarioError("duration must be nonnegative")
        if self.plant_step <= 0.0:
            raise ScenarioError("plant_step must be positive")
        lo, hi = self.engine_window
        if lo < 0.0 or hi < lo:
            raise ScenarioError("engine_window must satisfy 0 <= start <= end")
        if not 15.0 <= self.initial_power <= 100.0:
            raise ScenarioError("initial_power must lie in [15, 100] %NP")

    def with_strategy(self, strategy: StrategySpec,
                      name: str | None = None) -> "ScenarioConfig":
        return replace(self, strategy=strategy, name=name or self.name)

    def equilibrium_state(self):
        return plant.equilibrium(self.initial_power / 100.0,
                                 self.params.z_ref, self.params)


_TOP_KEYS = {"name", "preset", "initial_power", "duration", "plant_step",
             "engine_budget", "engine_window", "output", "seed",
             "profile", "strategy", "params", "engine"}
_STRATEGY_KEYS = {"kind", "ao_ref", "target", "rate_bounds", "low_power_bound",
                  "w_AO", "w_u", "w_eff", "w_track", "w_T"}
_SEGMENT_KEYS = {"start", "target", "rate"}
_ENGINE_KEYS = {"h_pred", "dt_ctrl", "horizon", "preview_horizon",
                "horizon_osc_cancel", "n_single_blocks", "outer_rounds",
                "max_iters", "fd_step", "alpha0", "alpha_max", "mu0",
                "mu_growth", "feas_tol", "budget"}
# overridable plant parameters and their hard validation bounds
_PARAM_BOUNDS = {
    "w_dil_max": (0.0, 10.0),
    "w_bor_max": (0.0, 3.0),
    "tau_d": (300.0, 900.0),
    "C_B_crit_fp": (0.0, 3000.0),
    "burnup": (0.0, 1.0),
}


def _reject_unknown(mapping: dict, allowed: set, where: str) -> None:
    unknown = set(mapping) - allowed
    if unknown:
        raise ScenarioError(f"{where}: unknown key(s) {sorted(unknown)}")


def _build_profile(raw: dict, initial_power: float) -> PowerProfile:
    _reject_unknown(raw, {"segments"}, "profile")
    segments = []
    for i, seg in enumerate(raw.get("segments", [])):
        _reject_unknown(seg, _SEGMENT_KEYS, f"profile.segments[{i}]")
        try:
            segments.append(ProfileSegment(start=float(seg["start"]),
                                           target=float(seg["target"]),
                                           rate=float(seg["rate"])))
        except KeyError as exc:
            raise ScenarioError(f"profile.segments[{i}]: missing {exc}") from exc
        except ValueError as exc:
            raise ScenarioError(f"profile.segments[{i}]: {exc}") from exc
    try:
        return PowerProfile(initial=initial_power, segments=tuple(segments))
    except ValueError as exc:
        raise ScenarioError(f"profile: {exc}") from exc


def _build_params(preset_name: str, overrides: dict) -> PlantParams:
    params = preset(preset_name)
    if not overrides:
        return params
    for key, value in overrides.items():
        if key not in _PARAM_BOUNDS:
            raise ScenarioError(f"params.{key}: not an overridable parameter")
        lo, hi = _PARAM_BOUNDS[key]
        if not lo <= float(value) <= hi:
            raise ScenarioError(
                f"params.{key}: value {value} outside [{lo}, {hi}]")
    try:
        return params.with_overrides(**{k: float(v) for k, v in overrides.items()})
    except ValueError as exc:
        raise ScenarioError(f"params: {exc}") from exc


def _build_strategy(raw: dict | None, params: PlantParams,
                    initial_power: float) -> StrategySpec:
    eq_ao = plant.equilibrium(initial_power / 100.0, params.z_ref, params).AO
    if raw is None:
        return make_ao_control(eq_ao)
    _reject_unknown(raw, _STRATEGY_KEYS, "strategy")
    raw = dict(raw)
    kind = raw.pop("kind", "AoControl")
    ao_ref = raw.pop("ao_ref", "auto")
    ao_ref = eq_ao if ao_ref == "auto" else float(ao_ref)
    if "rate_bounds" in raw:
        raw["rate_bounds"] = tuple(float(v) for v in raw["rate_bounds"])
    try:
        return make_strategy(kind, ao_ref=ao_ref, **raw)
    except ValueError as exc:
        raise ScenarioError(f"strategy: {exc}") from exc


def scenario_from_mapping(raw: dict, name_default: str) -> ScenarioConfig:
    _reject_unknown(raw, _TOP_KEYS, "scenario")
    try:
        preset_name = str(raw.get("preset", "boc")).lower()
        if preset_name not in PRESET_NAMES:
            raise ScenarioError(f"preset: unknown preset {preset_name!r}")
        params = _build_params(preset_name, raw.get("params", {}))
        initial_power = float(raw.get("initial_power", 100.0))
        profile = _build_profile(raw.get("profile", {}), initial_power)
        strategy = _build_strategy(raw.get("strategy"), params, initial_power)
        engine_raw = dict(raw.get("engine", {}))
        _reject_unknown(engine_raw, _ENGINE_KEYS, "engine")
        engine = EngineConfig(**{k: (int(v) if k in ("n_single_blocks",
                                                     "outer_rounds",
                                                     "max_iters")
                                     else float(v))
                                 for k, v in engine_raw.items()})
        window = raw.get("engine_window", [0.0, math.inf])
        if not isinstance(window, (list, tuple)) or len(window) != 2:
            raise ScenarioError("engine_window: expected [start, end]")
        return ScenarioConfig(
            name=str(raw.get("name", name_default)),
            preset_name=preset_name,
            params=params,
            initial_power=initial_power,
            profile=profile,
            strategy=strategy,
            duration=float(raw.get("duration", 86400.0)),
            plant_step=float(raw.get("plant_step", 10.0)),
            engine_budget=float(raw.get("engine_budget", 5.0)),
            engine_window=(float(window[0]), float(window[1])),
            output=raw.get("output"),
            seed=int(raw.get("seed", 0)),
            engine=engine,
        )
    except ScenarioError:
        raise
    except (TypeError, ValueError, KeyError) as exc:
        raise ScenarioError(str(exc)) from exc


def load_scenario(path: str | Path) -> ScenarioConfig:
    """Parse and validate a scenario file."""
    path = Path(path)
    try:
        with path.open("rb") as fh:
            raw = tomllib.load(fh)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"{path}: parse error: {exc}") from exc
    return scenario_from_mapping(raw, path.stem)


def bundled_scenario_names() -> list[str]:
    root = resources.files("pwradvisor").joinpath("data/scenarios")
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".toml"))


def load_bundled(name: str) -> ScenarioConfig:
    ref = resources.files("pwradvisor").joinpath(f"data/scenarios/{name}.toml")
    if not ref.is_file():
        raise ScenarioError(f"no bundled scenario named {name!r} "
                            f"(available: {bundled_scenario_names()})")
    raw = tomllib.loads(ref.read_text(encoding="utf-8"))
    return scenario_from_mapping(raw, name)
