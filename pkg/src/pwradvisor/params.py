"""Plant parameter set and burnup presets.

Every physical coefficient of the two-node core model lives here, loaded
from versioned TOML preset files bundled with the package (``data/``).
The two bundled presets differ only in the full-power critical boron
concentration: ``boc`` (beginning of cycle, 1200 ppm) and ``eoc80``
(80 % through the cycle, 250 ppm), which is what collapses the achievable
dilution-driven ramp rate late in the cycle.
"""

from __future__ import annotations

import sys
from dataclasses import dataclass, fields, replace
from importlib import resources
from pathlib import Path

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

PRESET_NAMES = ("boc", "eoc80")


@dataclass(frozen=True)
class PlantParams:
    """Physical coefficients, limits and burnup data of the plant model.

    Units are noted per field; all worths are magnitudes with their sign
    applied in the reactivity closure.
    """

    lambda_I: float      # iodine decay constant, 1/s
    lambda_X: float      # xenon decay constant, 1/s
    gamma_I: float       # iodine fission yield, -
    gamma_X: float       # xenon fission yield, -
    sigma_bar: float     # xenon microscopic burnup rate at full power, 1/s
    W_B: float           # boron differential worth, pcm/ppm
    W_X: float           # full-scale mean-xenon worth, pcm per unit normalized xenon
    W_Xax: float         # axial xenon-imbalance worth, pcm per unit (x_b - x_t)
    alpha_M: float       # moderator temperature coefficient, pcm/degC (< 0)
    gamma_D: float       # power-Doppler stiffness, pcm per unit normalized power
    gamma_AO: float      # axial shape stiffness, pcm per %AO
    w_ax: float          # rod axial-imbalance worth, pcm per step of insertion
    w_rod: float         # rod mean differential worth, pcm/step
    z_max: float         # rod steps fully withdrawn, steps
    z_ref: float         # rod position with zero rod reactivity, steps withdrawn
    v_rod: float         # rod speed, steps/min
    deadband: float      # ACT deadband, degC
    M_p: float           # primary coolant mass, kg
    C_stock: float       # boration stock concentration, ppm
    tau_d: float         # CVCS transport delay, s
    C_th: float          # effective thermal capacity, MJ/degC
    K_sg: float          # steam-generator temperature stiffness, MW/degC
    P_nom: float         # nominal thermal power, MW
    w_dil_max: float     # max dilution flow, kg/s
    w_bor_max: float     # max boration flow, kg/s
    burnup: float        # cycle fraction, 0..1
    C_B_crit_fp: float   # critical boron at full power for this burnup, ppm
    AO_nat: float        # natural AO at reference conditions, %

    def __post_init__(self) -> None:
        positive = (
            "lambda_I", "lambda_X", "gamma_I", "gamma_X", "sigma_bar",
            "W_B", "W_X", "W_Xax", "gamma_D", "gamma_AO", "w_ax", "w_rod",
            "z_max", "v_rod", "deadband", "M_p", "C_stock", "tau_d",
            "C_th", "K_sg", "P_nom", "w_dil_max", "w_bor_max",
        )
        for name in positive:
            if getattr(self, name) <= 0.0:
                raise ValueError(f"PlantParams.{name} must be strictly positive")
        if self.alpha_M >= 0.0:
            raise ValueError("PlantParams.alpha_M must be negative")
        if not 0.0 <= self.burnup <= 1.0:
            raise ValueError("PlantParams.burnup must lie in [0, 1]")
        if not 0.0 <= self.z_ref <= self.z_max:
            raise ValueError("PlantParams.z_ref must lie in [0, z_max]")
        if not 300.0 <= self.tau_d <= 900.0:
            raise ValueError("PlantParams.tau_d must lie in [300, 900] s")
        if self.C_B_crit_fp < 0.0:
            raise ValueError("PlantParams.C_B_crit_fp must be nonnegative")

    @property
    def flow_bounds(self) -> tuple[float, float]:
        """Signed injection-flow box: (-w_bor_max, +w_dil_max) kg/s."""
        return (-self.w_bor_max, self.w_dil_max)

    def with_overrides(self, **kwargs: float) -> "PlantParams":
        return replace(self, **kwargs)


def _params_from_mapping(raw: dict, source: str) -> PlantParams:
    version = raw.pop("version", None)
    if version != 1:
        raise ValueError(f"{source}: unsupported or missing preset version {version!r}")
    raw.pop("preset", None)
    known = {f.name for f in fields(PlantParams)}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"{source}: unknown parameter keys {sorted(unknown)}")
    missing = known - set(raw)
    if missing:
        raise ValueError(f"{source}: missing parameter keys {sorted(missing)}")
    return PlantParams(**{k: float(v) for k, v in raw.items()})


def load_params(path: str | Path) -> PlantParams:
    """Load a parameter preset from a TOML file."""
    path = Path(path)
    with path.open("rb") as fh:
        raw = tomllib.load(fh)
    return _params_from_mapping(raw, str(path))


def preset(name: str) -> PlantParams:
    """Load a bundled burnup preset by name ("boc" or "eoc80")."""
    key = name.lower()
    if key not in PRESET_NAMES:
        raise ValueError(f"unknown preset {name!r}; expected one of {PRESET_NAMES}")
    ref = resources.files("pwradvisor").joinpath(f"data/params_{key}.toml")
    raw = tomllib.loads(ref.read_text(encoding="utf-8"))
    return _params_from_mapping(raw, f"preset:{key}")
