"""Ingestion of raw 5-minute grid records into the fixed 52x2016 year structure.

The pipeline is: parse_records (CSV -> RawRecord) -> clean_series (snap to the
5-minute grid, repair gaps/spikes/negatives) -> to_year_blocks (52 contiguous
weekly blocks of 2016 samples per channel).

All power values are held in GW. Columns declared in MW are divided by 1000
at parse time.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from datetime import datetime, timedelta, timezone
from typing import IO, Iterable, Optional

import numpy as np

from .errors import (
    ConfigurationError,
    CoverageError,
    DataQualityError,
    EmptyInputError,
)

STEP = timedelta(minutes=5)
STEP_SECONDS = 300
SAMPLES_PER_WEEK = 2016
WEEKS_PER_YEAR = 52
SAMPLES_PER_YEAR = SAMPLES_PER_WEEK * WEEKS_PER_YEAR  # 104,832

CHANNELS = ("wind", "solar", "demand", "nuclear")

FLAG_MEASURED = "measured"
FLAG_INTERPOLATED = "interpolated"


@dataclass
class ColumnMapping:
    """Maps CSV columns onto the timestamp and the named power channels.

    ``channels`` maps channel name -> column name. ``units`` maps channel
    name -> "GW" or "MW" (default GW). Only the wind channel is mandatory.
    """

    timestamp: str
    channels: dict[str, str]
    units: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if "wind" not in self.channels:
            raise ConfigurationError("column mapping must include a 'wind' channel")
        for name in self.channels:
            if name not in CHANNELS:
                raise ConfigurationError(f"unknown channel {name!r}; expected one of {CHANNELS}")
        for name, unit in self.units.items():
            if unit not in ("GW", "MW"):
                raise ConfigurationError(f"unit for {name!r} must be 'GW' or 'MW', got {unit!r}")

    def scale(self, channel: str) -> float:
        return 1e-3 if self.units.get(channel, "GW") == "MW" else 1.0


@dataclass
class RawRecord:
    timestamp: datetime  # UTC
    readings: dict[str, float]  # channel -> GW; absent key = missing reading


@dataclass
class RejectedRow:
    line_number: int
    reason: str


@dataclass
class CleaningPolicy:
    """Gap and spike repair thresholds for clean_series.

    Gaps up to ``max_gap_steps`` 5-minute steps are linearly interpolated;
    longer gaps are filled by carrying the last value forward. A sample is
    treated as a sensor spike when it exceeds ``spike_ratio`` times both of
    its neighbours.
    """

    max_gap_steps: int = 12
    spike_ratio: float = 10.0
    max_flagged_fraction: float = 0.20


@dataclass
class SampleSeries:
    """A uniformly spaced 5-minute series for one channel, in GW."""

    start: datetime
    values: np.ndarray
    flags: list[str]  # per-sample, FLAG_MEASURED or FLAG_INTERPOLATED

    def __len__(self) -> int:
        return len(self.values)

    def timestamp(self, i: int) -> datetime:
        return self.start + i * STEP

    def flagged_count(self) -> int:
        return sum(1 for f in self.flags if f != FLAG_MEASURED)


@dataclass
class YearBlocks:
    """Exactly 52 weekly blocks of 2016 samples per channel plus base averages."""

    year_start: datetime
    channels: dict[str, np.ndarray]  # channel -> (52, 2016) array, GW
    base_averages: dict[str, float]  # channel -> annual mean over the 104,832 samples

    def flat(self, channel: str) -> np.ndarray:
        return self.channels[channel].reshape(-1)


def _parse_timestamp(raw: str, epoch_mode: Optional[bool]) -> tuple[datetime, bool]:
    """Parse one timestamp, auto-detecting epoch-seconds vs ISO-8601.

    Returns (timestamp, epoch_mode) so the detected mode sticks for the file.
    """
    text = raw.strip()
    if epoch_mode is not False:
        try:
            return datetime.fromtimestamp(float(text), tz=timezone.utc), True
        except (ValueError, OverflowError, OSError):
            if epoch_mode is True:
                raise ValueError(f"bad epoch timestamp {raw!r}")
    ts = datetime.fromisoformat(text.replace("Z", "+00:00"))
    if ts.tzinfo is None:
        ts = ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc), False


def parse_records(
    stream: IO[str] | Iterable[str], mapping: ColumnMapping
) -> tuple[list[RawRecord], list[RejectedRow]]:
    """Parse delimiter-separated text with a header row into RawRecords.

    Rows whose timestamp or wind reading cannot be parsed are collected into
    the rejects list with their 1-based line number. Other channels missing or
    unparseable on a row simply leave that reading absent.
    """
    reader = csv.DictReader(stream, skipinitialspace=True)
    if reader.fieldnames is None:
        raise EmptyInputError("input has no header row")
    header = [h.strip() for h in reader.fieldnames]
    needed = [mapping.timestamp] + list(mapping.channels.values())
    missing = [c for c in needed if c not in header]
    if missing:
        raise ConfigurationError(f"mapped column(s) not in header: {missing}")

    records: list[RawRecord] = []
    rejects: list[RejectedRow] = []
    epoch_mode: Optional[bool] = None
    n_rows = 0
    for row in reader:
        n_rows += 1
        line_number = reader.line_num
        row = {(k.strip() if k else k): v for k, v in row.items()}
        try:
            ts, detected = _parse_timestamp(row[mapping.timestamp], epoch_mode)
            epoch_mode = detected
        except (ValueError, TypeError):
            rejects.append(RejectedRow(line_number, "unparseable timestamp"))
            continue
        readings: dict[str, float] = {}
        for channel, column in mapping.channels.items():
            raw = row.get(column)
            if raw is None or raw.strip() == "":
                continue
            try:
                readings[channel] = float(raw) * mapping.scale(channel)
            except ValueError:
                continue
        if "wind" not in readings:
            rejects.append(RejectedRow(line_number, "missing or unparseable wind reading"))
            continue
        records.append(RawRecord(ts, readings))
    if n_rows == 0:
        raise EmptyInputError("input contains a header but no data rows")
    return records, rejects


def _snap_index(ts: datetime, origin: datetime) -> int:
    return round((ts - origin).total_seconds() / STEP_SECONDS)


def clean_series(
    records: list[RawRecord], channel: str, policy: CleaningPolicy | None = None
) -> SampleSeries:
    """Build a gapless, non-negative 5-minute SampleSeries for one channel.

    Records are sorted, snapped to the canonical grid (nearest 5-minute
    instant; last write wins on collisions), spikes removed, gaps repaired per
    the policy, and negatives clamped to zero. Every repaired sample is
    flagged interpolated.
    """
    if policy is None:
        policy = CleaningPolicy()
    pairs = sorted(
        (r.timestamp, r.readings[channel]) for r in records if channel in r.readings
    )
    if not pairs:
        raise EmptyInputError(f"no records carry a {channel!r} reading")

    origin = pairs[0][0]
    start = origin  # grid anchored at the first observation
    # snap onto grid slots relative to the first record
    slots: dict[int, float] = {}
    for ts, value in pairs:
        slots[_snap_index(ts, origin)] = value
    n = max(slots) + 1

    values = np.full(n, np.nan)
    for i, v in slots.items():
        values[i] = v
    measured = ~np.isnan(values)

    # spike rejection: single-sample excursion > ratio x both neighbours
    r = policy.spike_ratio
    for i in range(1, n - 1):
        a, b, c = values[i - 1], values[i], values[i + 1]
        if np.isnan(a) or np.isnan(b) or np.isnan(c):
            continue
        if b > r * a and b > r * c and b > 0:
            values[i] = np.nan
            measured[i] = False

    # repair gaps: linear interpolation up to max_gap_steps, carry-forward beyond
    i = 0
    while i < n:
        if not np.isnan(values[i]):
            i += 1
            continue
        j = i
        while j < n and np.isnan(values[j]):
            j += 1
        gap = j - i
        left = values[i - 1] if i > 0 else None
        right = values[j] if j < n else None
        if left is None:
            values[i:j] = right
        elif right is None or gap > policy.max_gap_steps:
            values[i:j] = left
        else:
            for k in range(gap):
                values[i + k] = left + (right - left) * (k + 1) / (gap + 1)
        i = j

    clamped = values < 0
    values[clamped] = 0.0

    repaired = ~measured | clamped
    flags = [FLAG_INTERPOLATED if f else FLAG_MEASURED for f in repaired]
    frac = repaired.sum() / n
    if frac > policy.max_flagged_fraction:
        raise DataQualityError(
            f"{channel}: {frac:.1%} of samples required repair "
            f"(limit {policy.max_flagged_fraction:.0%}); series unusable"
        )
    return SampleSeries(start=start, values=values, flags=flags)


def to_year_blocks(series: dict[str, SampleSeries], year_start: datetime) -> YearBlocks:
    """Cut each channel series into 52 contiguous blocks of 2016 samples.

    Each series must cover at least 104,832 samples from ``year_start``;
    anything beyond (the partial week 53) is discarded.
    """
    if year_start.tzinfo is None:
        year_start = year_start.replace(tzinfo=timezone.utc)
    channels: dict[str, np.ndarray] = {}
    averages: dict[str, float] = {}
    for name, s in series.items():
        offset_s = (year_start - s.start).total_seconds()
        if offset_s < 0 or offset_s % STEP_SECONDS != 0:
            raise CoverageError(
                f"{name}: series starts at {s.start.isoformat()}, "
                f"which does not cover year start {year_start.isoformat()}"
            )
        offset = int(offset_s // STEP_SECONDS)
        available = len(s.values) - offset
        if available < SAMPLES_PER_YEAR:
            raise CoverageError(
                f"{name}: need {SAMPLES_PER_YEAR} samples from year start, "
                f"have {max(available, 0)} (short by {SAMPLES_PER_YEAR - available})"
            )
        year = s.values[offset : offset + SAMPLES_PER_YEAR]
        channels[name] = year.reshape(WEEKS_PER_YEAR, SAMPLES_PER_WEEK).copy()
        averages[name] = float(year.mean())
    return YearBlocks(year_start=year_start, channels=channels, base_averages=averages)


# ---------------------------------------------------------------------------
# Blocked-dataset file: line 1 marker comment, line 2 JSON header, line 3
# column names, then 104,832 comma-separated rows (one column per channel).

DATASET_MARKER = "# gridlulls blocked dataset v1"


def write_blocked_dataset(blocks: YearBlocks, stream: IO[str]) -> None:
    names = sorted(blocks.channels)
    header = {
        "year_start": blocks.year_start.isoformat(),
        "channels": names,
        "base_averages": {n: blocks.base_averages[n] for n in names},
        "weeks": WEEKS_PER_YEAR,
        "samples_per_week": SAMPLES_PER_WEEK,
    }
    stream.write(DATASET_MARKER + "\n")
    stream.write(json.dumps(header, sort_keys=True) + "\n")
    stream.write(",".join(names) + "\n")
    cols = [blocks.flat(n) for n in names]
    for row in zip(*cols):
        stream.write(",".join(repr(float(v)) for v in row) + "\n")


def read_blocked_dataset(stream: IO[str]) -> YearBlocks:
    marker = stream.readline().strip()
    if marker != DATASET_MARKER:
        raise ConfigurationError("not a gridlulls blocked dataset (bad marker line)")
    header = json.loads(stream.readline())
    names = stream.readline().strip().split(",")
    data = np.loadtxt(stream, delimiter=",", ndmin=2)
    if data.shape != (SAMPLES_PER_YEAR, len(names)):
        raise CoverageError(
            f"dataset body has shape {data.shape}, expected ({SAMPLES_PER_YEAR}, {len(names)})"
        )
    channels = {
        n: data[:, i].reshape(WEEKS_PER_YEAR, SAMPLES_PER_WEEK).copy()
        for i, n in enumerate(names)
    }
    return YearBlocks(
        year_start=datetime.fromisoformat(header["year_start"]),
        channels=channels,
        base_averages={n: float(header["base_averages"][n]) for n in names},
    )


def dumps_blocked_dataset(blocks: YearBlocks) -> str:
    buf = io.StringIO()
    write_blocked_dataset(blocks, buf)
    return buf.getvalue()


def loads_blocked_dataset(text: str) -> YearBlocks:
    return read_blocked_dataset(io.StringIO(text))
