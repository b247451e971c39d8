"""Dispatchable-fleet adequacy arithmetic, storage exhaustion, cost, emissions.

A fleet is a list of asset classes. Fuel-burning units contribute ramp
capability (capacity x ramp rate) and firm capacity; storage responds
instantaneously but its energy runs out within hours, so it counts toward the
slew check only, as immediate power, and never toward lull firm capacity.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import IO, Optional

import numpy as np
import yaml

from .errors import ConfigurationError
from .events import STEP_HOURS

STORAGE = "storage"
TECHNOLOGIES = ("CCGT", "OCGT", "ICGR", STORAGE, "other")

DEFAULT_EMISSIONS_EFFICIENCY = 0.5
DEFAULT_EMISSION_FACTOR_T_PER_MWH = 0.185


@dataclass
class FleetUnit:
    technology: str
    capacity_gw: float
    ramp_rate_per_gw: float = 0.0  # GW/h per GW of capacity; ignored for storage
    time_to_full_min: float = 0.0
    efficiency_full: Optional[float] = None
    efficiency_40pct: Optional[float] = None  # stored for reporting only
    energy_capacity_gwh: Optional[float] = None  # storage only

    def __post_init__(self):
        if self.technology not in TECHNOLOGIES:
            raise ConfigurationError(
                f"unknown technology {self.technology!r}; expected one of {TECHNOLOGIES}"
            )
        if self.capacity_gw < 0:
            raise ConfigurationError(f"{self.technology}: capacity must be >= 0")
        if self.is_storage:
            if not self.energy_capacity_gwh or self.energy_capacity_gwh <= 0:
                raise ConfigurationError("storage units need energy_capacity_gwh > 0")
        else:
            for eff in (self.efficiency_full, self.efficiency_40pct):
                if eff is not None and not 0 < eff <= 1:
                    raise ConfigurationError(
                        f"{self.technology}: efficiencies must be in (0, 1], got {eff}"
                    )

    @property
    def is_storage(self) -> bool:
        return self.technology == STORAGE


@dataclass
class AdequacyCheck:
    requirement: float
    capability: float

    @property
    def margin(self) -> float:
        return self.capability - self.requirement

    @property
    def passed(self) -> bool:
        return self.margin >= 0


@dataclass
class AdequacyReport:
    slew: AdequacyCheck  # GW/h (+ instantaneous storage GW counted once)
    lull: AdequacyCheck  # firm (non-storage) capacity vs Hdrm, GW
    ramp_gwh: float
    instantaneous_gw: float
    firm_capacity_gw: float

    @property
    def passed(self) -> bool:
        return self.slew.passed and self.lull.passed


def ramp_capability(fleet: list[FleetUnit]) -> tuple[float, float]:
    """(summed ramp of fuel-burning units in GW/h, instantaneous storage power in GW)."""
    ramp = sum(u.capacity_gw * u.ramp_rate_per_gw for u in fleet if not u.is_storage)
    instantaneous = sum(u.capacity_gw for u in fleet if u.is_storage)
    return ramp, instantaneous


def firm_capacity(fleet: list[FleetUnit]) -> float:
    return sum(u.capacity_gw for u in fleet if not u.is_storage)


def storage_energy(fleet: list[FleetUnit]) -> float:
    return sum(u.energy_capacity_gwh or 0.0 for u in fleet if u.is_storage)


def check_adequacy(fleet: list[FleetUnit], required_slew_gwh: float, hdrm_gw: float) -> AdequacyReport:
    """Can the fleet match the worst down-slew and carry the headroom through a lull?"""
    if required_slew_gwh < 0 or hdrm_gw < 0:
        raise ConfigurationError("requirements must be >= 0")
    ramp, instantaneous = ramp_capability(fleet)
    firm = firm_capacity(fleet)
    return AdequacyReport(
        slew=AdequacyCheck(requirement=required_slew_gwh, capability=ramp + instantaneous),
        lull=AdequacyCheck(requirement=hdrm_gw, capability=firm),
        ramp_gwh=ramp,
        instantaneous_gw=instantaneous,
        firm_capacity_gw=firm,
    )


def storage_exhaustion(
    energy_gwh: float, deficit_gw: np.ndarray, step_hours: float = STEP_HOURS
) -> Optional[float]:
    """Hours until storage drains to zero against the deficit profile.

    Returns None ("not exhausted") if the profile ends with energy remaining.
    The crossing is interpolated inside the final interval.
    """
    if energy_gwh < 0:
        raise ConfigurationError("storage energy must be >= 0")
    remaining = energy_gwh
    elapsed = 0.0
    for d in np.asarray(deficit_gw, dtype=float).reshape(-1):
        if d > 0:
            draw = d * step_hours
            if draw >= remaining:
                return elapsed + remaining / d
            remaining -= draw
        elapsed += step_hours
    return None


def storage_cost(deficit_gwh: float, unit_cost_per_kwh: float) -> float:
    """Cost of storage sized to cover the deficit, at a per-kWh unit cost."""
    if deficit_gwh < 0 or unit_cost_per_kwh < 0:
        raise ConfigurationError("inputs must be >= 0")
    return deficit_gwh * 1e6 * unit_cost_per_kwh


def annual_emissions(
    annual_dispatchable_gw: float,
    efficiency: float = DEFAULT_EMISSIONS_EFFICIENCY,
    emission_factor_t_per_mwh: float = DEFAULT_EMISSION_FACTOR_T_PER_MWH,
) -> float:
    """Annual CO2 from the dispatchable fleet, MtCO2/yr.

    Electrical energy (GW x 8760 h -> MWh) is converted to thermal fuel burn
    via the blended efficiency and multiplied by the thermal emission factor.
    """
    if not 0 < efficiency <= 1:
        raise ConfigurationError(f"efficiency must be in (0, 1], got {efficiency}")
    if emission_factor_t_per_mwh < 0:
        raise ConfigurationError("emission factor must be >= 0")
    mwh_electrical = annual_dispatchable_gw * 8760.0 * 1000.0
    return mwh_electrical / efficiency * emission_factor_t_per_mwh / 1e6


# ---------------------------------------------------------------------------
# Fleet files: YAML with a ``units`` list plus optional emissions/storage-cost
# parameters. See configs/fleet_2035.yaml for the bundled example.


@dataclass
class FleetConfig:
    units: list[FleetUnit]
    emissions_efficiency: float = DEFAULT_EMISSIONS_EFFICIENCY
    emission_factor_t_per_mwh: float = DEFAULT_EMISSION_FACTOR_T_PER_MWH
    storage_cost_per_kwh: float = 150.0


def fleet_from_dict(doc: dict) -> FleetConfig:
    raw_units = doc.get("units")
    if not isinstance(raw_units, list):
        raise ConfigurationError("fleet file needs a 'units' list")
    units = []
    for entry in raw_units:
        if not isinstance(entry, dict):
            raise ConfigurationError("each fleet unit must be a mapping")
        try:
            units.append(FleetUnit(**entry))
        except TypeError as exc:
            raise ConfigurationError(f"bad fleet unit fields: {exc}") from exc
    emissions = doc.get("emissions", {}) or {}
    return FleetConfig(
        units=units,
        emissions_efficiency=float(
            emissions.get("efficiency", DEFAULT_EMISSIONS_EFFICIENCY)
        ),
        emission_factor_t_per_mwh=float(
            emissions.get("factor_t_per_mwh", DEFAULT_EMISSION_FACTOR_T_PER_MWH)
        ),
        storage_cost_per_kwh=float(doc.get("storage_cost_per_kwh", 150.0)),
    )


def load_fleet(stream: IO[str]) -> FleetConfig:
    doc = yaml.safe_load(stream)
    if not isinstance(doc, dict):
        raise ConfigurationError("fleet file must contain a YAML mapping")
    return fleet_from_dict(doc)
