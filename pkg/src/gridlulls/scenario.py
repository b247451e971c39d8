"""Future-system scenarios and scaling of the base-year blocks.

A scenario fixes demand and nuclear (both constant, giving a constant
headroom) and a target for each renewable channel, given either as an annual
average in GW or as a multiplier on the base year. Scaling multiplies every
5-minute sample by the channel factor.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import IO, Optional

import numpy as np
import yaml

from .errors import ConfigurationError, InfeasibleScenarioError
from .ingest import YearBlocks

DEFAULT_SLEW_WINDOW_MIN = 60
DEFAULT_LULL_THRESHOLD = 0.2
DEFAULT_LULL_MIN_HOURS = 24.0
DEFAULT_BIN_GW = 5.0


@dataclass
class ChannelTarget:
    """Target for one renewable channel: an annual average GW or a multiplier."""

    average_gw: Optional[float] = None
    multiplier: Optional[float] = None

    def __post_init__(self):
        if (self.average_gw is None) == (self.multiplier is None):
            raise ConfigurationError(
                "give exactly one of average_gw / multiplier per channel"
            )
        value = self.average_gw if self.average_gw is not None else self.multiplier
        if value <= 0:
            raise ConfigurationError("channel target must be > 0")

    def factor(self, base_average: float, channel: str) -> float:
        if self.multiplier is not None:
            return self.multiplier
        return scale_factor(self.average_gw, base_average, channel)


@dataclass
class Scenario:
    name: str
    demand_gw: float
    nuclear_gw: float
    wind: ChannelTarget
    solar: ChannelTarget
    slew_window_min: int = DEFAULT_SLEW_WINDOW_MIN
    lull_threshold: float = DEFAULT_LULL_THRESHOLD
    lull_min_hours: float = DEFAULT_LULL_MIN_HOURS
    bin_gw: float = DEFAULT_BIN_GW

    def __post_init__(self):
        if self.nuclear_gw < 0:
            raise ConfigurationError(f"{self.name}: nuclear must be >= 0")
        if self.demand_gw <= self.nuclear_gw:
            raise InfeasibleScenarioError(
                f"{self.name}: demand ({self.demand_gw} GW) must exceed "
                f"nuclear ({self.nuclear_gw} GW)"
            )
        if not 0 < self.lull_threshold < 1:
            raise ConfigurationError(f"{self.name}: lull threshold must be in (0, 1)")
        if self.lull_min_hours < 1:
            raise ConfigurationError(f"{self.name}: lull minimum duration must be >= 1 h")
        if self.slew_window_min <= 0 or self.slew_window_min % 5 != 0:
            raise ConfigurationError(
                f"{self.name}: slew window must be a positive multiple of 5 minutes"
            )
        if self.bin_gw <= 0:
            raise ConfigurationError(f"{self.name}: histogram bin width must be > 0")

    @property
    def hdrm(self) -> float:
        return headroom(self.demand_gw, self.nuclear_gw)


@dataclass
class ScaledYear:
    """The base-year blocks scaled to one scenario, with its constant headroom."""

    scenario: Scenario
    year_start: datetime
    hdrm: float
    wind: np.ndarray  # (52, 2016) GW
    solar: np.ndarray
    ws: np.ndarray  # elementwise wind + solar
    wind_average: float  # realized annual averages
    solar_average: float

    def flat_ws(self) -> np.ndarray:
        return self.ws.reshape(-1)

    def flat_wind(self) -> np.ndarray:
        return self.wind.reshape(-1)

    def flat_solar(self) -> np.ndarray:
        return self.solar.reshape(-1)


def headroom(demand_gw: float, nuclear_gw: float) -> float:
    """Electrical demand less nuclear generation, GW."""
    if nuclear_gw < 0:
        raise InfeasibleScenarioError(f"nuclear must be >= 0, got {nuclear_gw}")
    if nuclear_gw >= demand_gw:
        raise InfeasibleScenarioError(
            f"nuclear ({nuclear_gw} GW) >= demand ({demand_gw} GW): no headroom left"
        )
    return demand_gw - nuclear_gw


def scale_factor(target_average: float, base_average: float, channel: str = "") -> float:
    """Multiplier taking the base-year annual average to the target average."""
    if base_average <= 0:
        label = f" for {channel}" if channel else ""
        raise ConfigurationError(
            f"base average{label} must be > 0 to derive a multiplier, got {base_average}"
        )
    return target_average / base_average


def apply_scenario(blocks: YearBlocks, scenario: Scenario) -> ScaledYear:
    """Scale every wind/solar sample by the scenario factors and form w+s."""
    for needed in ("wind", "solar"):
        if needed not in blocks.channels:
            raise ConfigurationError(f"dataset lacks the {needed!r} channel")
    hdrm = scenario.hdrm
    wf = scenario.wind.factor(blocks.base_averages["wind"], "wind")
    sf = scenario.solar.factor(blocks.base_averages["solar"], "solar")
    wind = blocks.channels["wind"] * wf
    solar = blocks.channels["solar"] * sf
    return ScaledYear(
        scenario=scenario,
        year_start=blocks.year_start,
        hdrm=hdrm,
        wind=wind,
        solar=solar,
        ws=wind + solar,
        wind_average=wf * blocks.base_averages["wind"],
        solar_average=sf * blocks.base_averages["solar"],
    )


# ---------------------------------------------------------------------------
# Scenario files: YAML, one scenario per file. See configs/ for examples.


def _target_from_config(raw: dict, name: str, channel: str) -> ChannelTarget:
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{name}: {channel} section must be a mapping")
    allowed = {"average_gw", "multiplier"}
    unknown = set(raw) - allowed
    if unknown:
        raise ConfigurationError(f"{name}: unknown {channel} keys {sorted(unknown)}")
    return ChannelTarget(
        average_gw=raw.get("average_gw"), multiplier=raw.get("multiplier")
    )


def scenario_from_dict(doc: dict) -> Scenario:
    try:
        name = doc["name"]
        analysis = doc.get("analysis", {}) or {}
        return Scenario(
            name=str(name),
            demand_gw=float(doc["demand_gw"]),
            nuclear_gw=float(doc["nuclear_gw"]),
            wind=_target_from_config(doc["wind"], name, "wind"),
            solar=_target_from_config(doc["solar"], name, "solar"),
            slew_window_min=int(analysis.get("slew_window_min", DEFAULT_SLEW_WINDOW_MIN)),
            lull_threshold=float(analysis.get("lull_threshold", DEFAULT_LULL_THRESHOLD)),
            lull_min_hours=float(analysis.get("lull_min_hours", DEFAULT_LULL_MIN_HOURS)),
            bin_gw=float(analysis.get("histogram_bin_gw", DEFAULT_BIN_GW)),
        )
    except KeyError as exc:
        raise ConfigurationError(f"scenario file missing required key {exc}") from exc
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"bad scenario value: {exc}") from exc


def load_scenario(stream: IO[str]) -> Scenario:
    doc = yaml.safe_load(stream)
    if not isinstance(doc, dict):
        raise ConfigurationError("scenario file must contain a YAML mapping")
    return scenario_from_dict(doc)
