"""Hourly output of PV, wind-turbine and fuel-cell units.

All DG runs at unity power factor, so only active injections are produced.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from .network import HOURS, HourlySeries
from .powerflow import InjectionSet

__all__ = [
    "DgKind",
    "DgUnit",
    "WindCurve",
    "DgSettings",
    "pv_output",
    "wt_output",
    "fc_output",
    "capacity_factors",
    "hourly_injections",
]


class DgKind(str, Enum):
    PV = "PV"
    WT = "WT"
    FC = "FC"


@dataclass(frozen=True)
class DgUnit:
    kind: DgKind
    location: int  # bus id, never the slack
    rated_kw: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", DgKind(self.kind))
        if self.rated_kw < 0:
            raise ValueError(f"{self.kind.value}: rated_kw must be non-negative")


@dataclass(frozen=True)
class WindCurve:
    cut_in: float = 2.5  # m/s
    rated_speed: float = 12.0
    cut_out: float = 25.0

    def __post_init__(self) -> None:
        if not 0 < self.cut_in < self.rated_speed < self.cut_out:
            raise ValueError("wind curve needs 0 < cut_in < rated_speed < cut_out")


@dataclass(frozen=True)
class DgSettings:
    wind_curve: WindCurve = WindCurve()
    reference_irradiance: float = 1000.0  # W/m2

    def __post_init__(self) -> None:
        if not self.reference_irradiance > 0:
            raise ValueError("reference_irradiance must be positive")


def pv_output(rated_kw, irradiance, reference_irradiance: float = 1000.0):
    """PV output in kW, linear in irradiance and capped at rating.

    Works element-wise on arrays as well as on scalars.
    """
    rated = np.asarray(rated_kw, dtype=float)
    g = np.asarray(irradiance, dtype=float)
    if np.any(rated < 0) or np.any(g < 0) or not reference_irradiance > 0:
        raise ValueError("pv_output inputs must be non-negative, reference positive")
    out = np.minimum(rated, rated * (g / reference_irradiance))
    return out if out.ndim else float(out)


def wt_output(rated_kw, wind_speed, curve: WindCurve = WindCurve()):
    """Wind-turbine output in kW for a cubic power curve.

    Zero below cut-in and from cut-out upward; cubic ramp between cut-in
    and rated speed; flat at rating from rated speed to cut-out.
    """
    rated = np.asarray(rated_kw, dtype=float)
    v = np.asarray(wind_speed, dtype=float)
    if np.any(v < 0) or np.any(rated < 0):
        raise ValueError("wind speed and rating must be non-negative")
    ci, vr, co = curve.cut_in, curve.rated_speed, curve.cut_out
    frac = np.where(
        (v < ci) | (v >= co),
        0.0,
        np.where(v < vr, (v**3 - ci**3) / (vr**3 - ci**3), 1.0),
    )
    out = rated * frac
    return out if out.ndim else float(out)


def fc_output(rated_kw, hours: int = HOURS) -> np.ndarray:
    """Fuel cells run at rating every hour."""
    rated = float(rated_kw)
    if rated < 0:
        raise ValueError("rated_kw must be non-negative")
    return np.full(hours, rated)


def capacity_factors(
    irradiance: HourlySeries | Sequence[float],
    wind: HourlySeries | Sequence[float],
    settings: DgSettings = DgSettings(),
) -> dict[DgKind, np.ndarray]:
    """Per-kW hourly output for each kind; multiply by a rating to get kW."""
    g = np.asarray(getattr(irradiance, "values", irradiance), dtype=float)
    w = np.asarray(getattr(wind, "values", wind), dtype=float)
    return {
        DgKind.PV: pv_output(np.ones_like(g), g, settings.reference_irradiance),
        DgKind.WT: wt_output(np.ones_like(w), w, settings.wind_curve),
        DgKind.FC: fc_output(1.0, len(g)),
    }


def hourly_injections(
    units: Iterable[DgUnit],
    irradiance: HourlySeries | Sequence[float],
    wind: HourlySeries | Sequence[float],
    settings: DgSettings = DgSettings(),
    *,
    n_bus: int,
) -> list[InjectionSet]:
    """Place each unit's hourly output at its bus; one set per hour."""
    units = list(units)
    kinds = [u.kind for u in units]
    if len(set(kinds)) != len(kinds):
        raise ValueError("at most one unit per DG kind is allowed")
    for u in units:
        if not 2 <= u.location <= n_bus:
            raise ValueError(f"{u.kind.value} location {u.location} outside buses 2..{n_bus}")
    factors = capacity_factors(irradiance, wind, settings)
    n_hours = len(factors[DgKind.FC])
    p = np.zeros((n_hours, n_bus))
    for u in units:
        p[:, u.location - 1] += u.rated_kw * factors[u.kind]
    return [InjectionSet(p[h], np.zeros(n_bus)) for h in range(n_hours)]
