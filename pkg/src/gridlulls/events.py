"""Detection of the two stability threats: wind lulls and wind/solar slews.

Slews are backward differences over a configurable window, expressed in GW/h.
A down-slew only threatens stability while w+s is at or below the headroom;
above it the fall merely reduces curtailment. Lulls are maximal runs where
wind generation stays below a fraction of its realized annual average for at
least a minimum duration; each carries the energy deficit that dispatchable
plant (or storage) would have to cover.

Sign convention: down-slew magnitudes are reported positive (a positive
``down_slew`` of 21.9 means generation falling at 21.9 GW/h).
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import datetime
from typing import Optional

import numpy as np

from .errors import ConfigurationError, RangeError
from .ingest import STEP, STEP_SECONDS
from .scenario import ScaledYear

STEP_HOURS = STEP_SECONDS / 3600.0  # 1/12 h
SAMPLES_PER_HOUR = 12

# Reference pairing for scaling the maximum solar slew to other fleets:
# a 10 GW/h maximum solar slew at a 7.08 GW solar annual average.
SOLAR_SLEW_REF_GWH = 10.0
SOLAR_SLEW_REF_AVERAGE_GW = 7.08

MACKAY_FACTOR = 0.37


@dataclass
class SlewSeries:
    """Windowed rate of change for one channel; rate[i] covers (t_i, t_i + window]."""

    window_min: int
    offset_steps: int  # index shift into the source series for rate i
    rates: np.ndarray  # GW/h, signed (negative = falling)

    def source_index(self, i: int) -> int:
        """Index into the source series of the interval end the rate refers to."""
        return i + self.offset_steps


@dataclass
class SlewEvent:
    timestamp: datetime
    index: int  # flat sample index of the interval end
    block: int  # 0-based weekly block containing the event
    wind_down_gwh: float  # positive = wind falling
    solar_down_gwh: float
    combined_down_gwh: float  # wind + solar
    ws_level_gw: float
    effective: bool  # w+s <= Hdrm at the event


@dataclass
class LullEvent:
    start: datetime
    end: datetime
    duration_hours: float
    min_ws_gw: float
    min_ws_timestamp: datetime
    deficit_gwh: float


def slew_series(samples: np.ndarray, window_min: int) -> SlewSeries:
    """Backward difference over the window, in GW/h."""
    if window_min <= 0 or window_min % 5 != 0:
        raise ConfigurationError(
            f"slew window must be a positive multiple of 5 minutes, got {window_min}"
        )
    flat = np.asarray(samples).reshape(-1)
    k = window_min // 5
    if flat.size <= k:
        raise ConfigurationError(
            f"series of {flat.size} samples is too short for a {window_min}-minute window"
        )
    rates = (flat[k:] - flat[:-k]) / (window_min / 60.0)
    return SlewSeries(window_min=window_min, offset_steps=k, rates=rates)


def max_effective_downslew(year: ScaledYear, window_min: Optional[int] = None) -> Optional[SlewEvent]:
    """Largest w+s down-slew occurring while w+s <= Hdrm, or None if w+s never dips.

    Ties on magnitude are broken by the earliest timestamp.
    """
    if window_min is None:
        window_min = year.scenario.slew_window_min
    ws = year.flat_ws()
    combined = slew_series(ws, window_min)
    wind = slew_series(year.flat_wind(), window_min)
    solar = slew_series(year.flat_solar(), window_min)

    k = combined.offset_steps
    eligible = ws[k:] <= year.hdrm
    if not np.any(eligible):
        return None
    down = -combined.rates
    masked = np.where(eligible, down, -np.inf)
    i = int(np.argmax(masked))  # argmax returns the first maximum: earliest wins
    src = combined.source_index(i)
    return SlewEvent(
        timestamp=year.year_start + src * STEP,
        index=src,
        block=src // year.ws.shape[1],
        wind_down_gwh=float(-wind.rates[i]),
        solar_down_gwh=float(-solar.rates[i]),
        combined_down_gwh=float(down[i]),
        ws_level_gw=float(ws[src]),
        effective=True,
    )


def max_channel_slew(year: ScaledYear, channel: str, window_min: Optional[int] = None) -> float:
    """Largest down-slew magnitude of one channel over the whole year, GW/h."""
    if window_min is None:
        window_min = year.scenario.slew_window_min
    samples = {"wind": year.flat_wind(), "solar": year.flat_solar(), "ws": year.flat_ws()}[channel]
    return float(np.max(-slew_series(samples, window_min).rates))


def _index_of(year: ScaledYear, ts: datetime) -> int:
    offset = (ts - year.year_start).total_seconds()
    if offset % STEP_SECONDS != 0:
        raise RangeError(f"{ts.isoformat()} is not on the 5-minute sample grid")
    return int(offset // STEP_SECONDS)


def lull_deficit(year: ScaledYear, start: datetime, end: datetime) -> float:
    """Energy deficit over [start, end): sum of (Hdrm - w+s)+ x 5 minutes, GWh."""
    i, j = _index_of(year, start), _index_of(year, end)
    ws = year.flat_ws()
    if i < 0 or j > ws.size or i >= j:
        raise RangeError(
            f"window [{start.isoformat()}, {end.isoformat()}) outside the simulated year"
        )
    shortfall = np.maximum(0.0, year.hdrm - ws[i:j])
    return float(shortfall.sum() * STEP_HOURS)


def detect_lulls(
    year: ScaledYear,
    threshold_fraction: Optional[float] = None,
    min_duration_hours: Optional[float] = None,
) -> list[LullEvent]:
    """Maximal runs of wind below threshold x realized annual wind average.

    The criterion is evaluated on wind alone; w+s enters only through the
    per-event minimum level and energy deficit.
    """
    s = year.scenario
    if threshold_fraction is None:
        threshold_fraction = s.lull_threshold
    if min_duration_hours is None:
        min_duration_hours = s.lull_min_hours
    if not 0 < threshold_fraction < 1:
        raise ConfigurationError(f"threshold fraction must be in (0, 1), got {threshold_fraction}")
    if min_duration_hours < 1:
        raise ConfigurationError(f"minimum duration must be >= 1 h, got {min_duration_hours}")

    wind = year.flat_wind()
    ws = year.flat_ws()
    cutoff = threshold_fraction * year.wind_average
    low = wind < cutoff
    min_steps = int(round(min_duration_hours * SAMPLES_PER_HOUR))

    events: list[LullEvent] = []
    n = low.size
    i = 0
    while i < n:
        if not low[i]:
            i += 1
            continue
        j = i
        while j < n and low[j]:
            j += 1
        if j - i >= min_steps:
            start = year.year_start + i * STEP
            end = year.year_start + j * STEP
            window = ws[i:j]
            m = int(np.argmin(window))
            events.append(
                LullEvent(
                    start=start,
                    end=end,
                    duration_hours=(j - i) * STEP_HOURS,
                    min_ws_gw=float(window[m]),
                    min_ws_timestamp=year.year_start + (i + m) * STEP,
                    deficit_gwh=lull_deficit(year, start, end),
                )
            )
        i = j
    return events


def mackay_slew(annual_average_wind_gw: float) -> float:
    """MacKay's shortcut: maximum wind slew = 0.37 x annual average wind, GW/h."""
    if annual_average_wind_gw < 0:
        raise ConfigurationError("annual average wind must be >= 0")
    return MACKAY_FACTOR * annual_average_wind_gw


def scaled_solar_slew(annual_average_solar_gw: float) -> float:
    """Maximum solar slew scaled in proportion to the solar annual average, GW/h."""
    if annual_average_solar_gw < 0:
        raise ConfigurationError("annual average solar must be >= 0")
    return SOLAR_SLEW_REF_GWH * annual_average_solar_gw / SOLAR_SLEW_REF_AVERAGE_GW
