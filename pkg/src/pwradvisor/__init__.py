"""Desk-scale PWR load-following simulator with a predictive advisory engine."""

from .params import PlantParams, load_params, preset
from .state import ControlInput, CoreState, PowerProfile, ProfileSegment

__version__ = "0.1.0"

__all__ = [
    "PlantParams",
    "load_params",
    "preset",
    "ControlInput",
    "CoreState",
    "PowerProfile",
    "ProfileSegment",
    "__version__",
]
