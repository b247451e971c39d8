"""Shared fixtures: synthetic year builders and the optional real 2017 dataset.

Set GRIDLULLS_FIXTURE_2017 to the path of a real 2017 Gridwatch-style CSV
(5-minute records with wind/solar columns in MW) to enable the tests that
reproduce published figures; they skip cleanly when the variable is unset.
Set GRIDLULLS_FIXTURE_MAPPING to a mapping YAML to override the default
Gridwatch column mapping.
"""

from __future__ import annotations

import os
from datetime import datetime, timezone
from pathlib import Path

import numpy as np
import pytest
import yaml

from gridlulls.ingest import (
    SAMPLES_PER_YEAR,
    CleaningPolicy,
    ColumnMapping,
    YearBlocks,
    clean_series,
    parse_records,
    to_year_blocks,
)
from gridlulls.scenario import ChannelTarget, Scenario, apply_scenario

YEAR_START = datetime(2017, 1, 1, tzinfo=timezone.utc)

REPO_ROOT = Path(__file__).resolve().parents[1]
CONFIG_DIR = REPO_ROOT / "configs"


def make_blocks(wind: np.ndarray, solar: np.ndarray, year_start: datetime = YEAR_START) -> YearBlocks:
    """Wrap two flat 104,832-sample arrays into a YearBlocks."""
    assert wind.size == SAMPLES_PER_YEAR and solar.size == SAMPLES_PER_YEAR
    return YearBlocks(
        year_start=year_start,
        channels={
            "wind": wind.reshape(52, 2016).copy(),
            "solar": solar.reshape(52, 2016).copy(),
        },
        base_averages={"wind": float(wind.mean()), "solar": float(solar.mean())},
    )


def make_scenario(
    name="test",
    demand_gw=54.0,
    nuclear_gw=5.5,
    wind_multiplier=1.0,
    solar_multiplier=1.0,
    **kwargs,
) -> Scenario:
    return Scenario(
        name=name,
        demand_gw=demand_gw,
        nuclear_gw=nuclear_gw,
        wind=ChannelTarget(multiplier=wind_multiplier),
        solar=ChannelTarget(multiplier=solar_multiplier),
        **kwargs,
    )


def make_year(wind, solar, scenario=None):
    blocks = make_blocks(np.asarray(wind, float), np.asarray(solar, float))
    return apply_scenario(blocks, scenario or make_scenario())


@pytest.fixture(scope="session")
def random_blocks() -> YearBlocks:
    """A plausible synthetic base year: autocorrelated wind, diurnal solar."""
    rng = np.random.default_rng(20170101)
    # AR(1) wind around 6 GW, clipped at 0
    wind = np.empty(SAMPLES_PER_YEAR)
    level = 6.0
    for i in range(SAMPLES_PER_YEAR):
        level += 0.02 * (6.0 - level) + rng.normal(0, 0.25)
        wind[i] = max(0.0, level)
    # half-sine daytime solar, ~1.2 GW annual mean
    t = np.arange(SAMPLES_PER_YEAR)
    day_phase = (t % 288) / 288.0
    solar = np.maximum(0.0, np.sin((day_phase - 0.25) * 2 * np.pi)) * 3.6
    return make_blocks(wind, solar)


# ---------------------------------------------------------------------------
# optional real 2017 fixture

FIXTURE_ENV = "GRIDLULLS_FIXTURE_2017"


def fixture_path() -> Path | None:
    raw = os.environ.get(FIXTURE_ENV)
    if not raw:
        return None
    p = Path(raw)
    return p if p.exists() else None


requires_fixture = pytest.mark.skipif(
    fixture_path() is None,
    reason=f"real 2017 dataset not available (set {FIXTURE_ENV})",
)


@pytest.fixture(scope="session")
def fixture_csv_path() -> Path:
    p = fixture_path()
    if p is None:
        pytest.skip(f"real 2017 dataset not available (set {FIXTURE_ENV})")
    return p


@pytest.fixture(scope="session")
def fixture_blocks(fixture_csv_path: Path) -> YearBlocks:
    mapping_file = os.environ.get("GRIDLULLS_FIXTURE_MAPPING")
    if mapping_file:
        doc = yaml.safe_load(Path(mapping_file).read_text())
    else:
        doc = yaml.safe_load((CONFIG_DIR / "mapping_gridwatch.yaml").read_text())
    mapping = ColumnMapping(
        timestamp=doc["timestamp"],
        channels={k: v["column"] for k, v in doc["channels"].items()},
        units={k: v.get("unit", "GW") for k, v in doc["channels"].items()},
    )
    with open(fixture_csv_path) as f:
        records, _ = parse_records(f, mapping)
    policy = CleaningPolicy()
    series = {
        name: clean_series(records, name, policy)
        for name in ("wind", "solar")
        if any(name in r.readings for r in records)
    }
    return to_year_blocks(series, YEAR_START)


@pytest.fixture(scope="session")
def scenario_2035() -> Scenario:
    return Scenario(
        name="2035",
        demand_gw=54.0,
        nuclear_gw=5.5,
        wind=ChannelTarget(average_gw=54.16),
        solar=ChannelTarget(average_gw=7.08),
    )


@pytest.fixture(scope="session")
def year_2035(fixture_blocks, scenario_2035):
    return apply_scenario(fixture_blocks, scenario_2035)
