"""Natural-unit conversions (hbar = c = 1, energies in eV).

Times and lengths are both inverse energies; seconds and metres are reached
through hbar and hbar*c.  CODATA 2018 values are frozen here.
"""

from __future__ import annotations

import math

from .errors import ConfigError

__all__ = ["HBAR_C_EV_M", "HBAR_EV_S", "UNITS", "convert_units", "max_oscillation_distance"]

# CODATA 2018
HBAR_C_EV_M = 1.973269804e-7   # eV m
HBAR_EV_S = 6.582119569e-16    # eV s

# unit -> (dimension, value of one unit in the dimension's base unit)
# base units: eV for energy, 1/eV for time/length, eV^2 for squared energy
UNITS = {
    "eV": ("energy", 1.0),
    "eV^-1": ("inverse_energy", 1.0),
    "s": ("inverse_energy", 1.0 / HBAR_EV_S),
    "m": ("inverse_energy", 1.0 / HBAR_C_EV_M),
    "km": ("inverse_energy", 1e3 / HBAR_C_EV_M),
    "eV2": ("energy_squared", 1.0),
}

_ALIASES = {
    "ev": "eV", "ev^-1": "eV^-1", "ev-1": "eV^-1", "1/ev": "eV^-1", "ev⁻¹": "eV^-1",
    "s": "s", "m": "m", "km": "km", "ev2": "eV2", "ev^2": "eV2", "ev²": "eV2",
}


def _unit(name: str) -> str:
    key = _ALIASES.get(name.strip().lower())
    if key is None:
        raise ConfigError(f"unknown unit {name!r}; choose from {', '.join(UNITS)}")
    return key


def convert_units(value: float, from_unit: str, to_unit: str) -> float:
    """Convert ``value`` between units of the same natural-unit dimension."""
    src, dst = _unit(from_unit), _unit(to_unit)
    if src == dst:
        return float(value)
    (dim_a, fa), (dim_b, fb) = UNITS[src], UNITS[dst]
    if dim_a != dim_b:
        raise ConfigError(f"cannot convert {src} ({dim_a}) to {dst} ({dim_b})")
    return float(value) * fa / fb


def max_oscillation_distance(lam: float, unit: str = "m") -> float:
    """``pi hbar c / lam``: the travel distance covered in one half-period ``pi/lam``."""
    if not lam > 0:
        raise ConfigError("lambda must be positive")
    return convert_units(math.pi / lam, "eV^-1", unit)
