"""FastAPI service exposing ingestion, scenario runs, event detection and
fleet checks over HTTP. The CLI is a thin client of these endpoints."""

from __future__ import annotations

import io
from datetime import datetime, timezone

import numpy as np
from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse

from .. import __version__
from ..dispatch import histogram, run_dispatch, summary_dict, write_intervals_csv
from ..errors import (
    ConfigurationError,
    CoverageError,
    DataQualityError,
    EmptyInputError,
    GridLullsError,
    InfeasibleScenarioError,
    RangeError,
)
from ..events import (
    LullEvent,
    SlewEvent,
    detect_lulls,
    mackay_slew,
    max_channel_slew,
    max_effective_downslew,
    scaled_solar_slew,
    slew_series,
)
from ..fleet import (
    FleetConfig,
    FleetUnit,
    annual_emissions,
    check_adequacy,
    storage_cost,
    storage_energy,
    storage_exhaustion,
)
from ..ingest import (
    STEP,
    CleaningPolicy,
    ColumnMapping,
    clean_series,
    dumps_blocked_dataset,
    loads_blocked_dataset,
    parse_records,
    to_year_blocks,
)
from ..scenario import ChannelTarget, ScaledYear, Scenario, apply_scenario
from . import schemas

app = FastAPI(title="gridlulls", version=__version__)

_STATUS = {
    ConfigurationError: 400,
    EmptyInputError: 422,
    DataQualityError: 422,
    CoverageError: 422,
    RangeError: 422,
    InfeasibleScenarioError: 409,
}


@app.exception_handler(GridLullsError)
async def _domain_error(request: Request, exc: GridLullsError) -> JSONResponse:
    status = _STATUS.get(type(exc), 422)
    return JSONResponse(
        status_code=status,
        content={"error_type": type(exc).__name__, "message": str(exc)},
    )


def _to_scenario(model: schemas.ScenarioModel) -> Scenario:
    a = model.analysis
    return Scenario(
        name=model.name,
        demand_gw=model.demand_gw,
        nuclear_gw=model.nuclear_gw,
        wind=ChannelTarget(model.wind.average_gw, model.wind.multiplier),
        solar=ChannelTarget(model.solar.average_gw, model.solar.multiplier),
        slew_window_min=a.slew_window_min,
        lull_threshold=a.lull_threshold,
        lull_min_hours=a.lull_min_hours,
        bin_gw=a.histogram_bin_gw,
    )


def _to_fleet(model: schemas.FleetModel) -> FleetConfig:
    return FleetConfig(
        units=[FleetUnit(**u.model_dump()) for u in model.units],
        emissions_efficiency=model.emissions_efficiency,
        emission_factor_t_per_mwh=model.emission_factor_t_per_mwh,
        storage_cost_per_kwh=model.storage_cost_per_kwh,
    )


def _lull_model(e: LullEvent) -> schemas.LullEventModel:
    return schemas.LullEventModel(
        start=e.start.isoformat(),
        end=e.end.isoformat(),
        duration_hours=e.duration_hours,
        min_ws_gw=e.min_ws_gw,
        min_ws_timestamp=e.min_ws_timestamp.isoformat(),
        deficit_gwh=e.deficit_gwh,
    )


def _slew_model(e: SlewEvent) -> schemas.SlewEventModel:
    return schemas.SlewEventModel(
        timestamp=e.timestamp.isoformat(),
        block=e.block,
        wind_down_gwh=e.wind_down_gwh,
        solar_down_gwh=e.solar_down_gwh,
        combined_down_gwh=e.combined_down_gwh,
        ws_level_gw=e.ws_level_gw,
    )


@app.get("/health")
def health() -> dict:
    return {"status": "ok", "version": __version__}


@app.post("/ingest", response_model=schemas.IngestResponse)
def ingest(req: schemas.IngestRequest) -> schemas.IngestResponse:
    mapping = ColumnMapping(
        timestamp=req.mapping.timestamp,
        channels={k: v.column for k, v in req.mapping.channels.items()},
        units={k: v.unit for k, v in req.mapping.channels.items()},
    )
    policy = CleaningPolicy(
        max_gap_steps=req.cleaning.max_gap_steps,
        spike_ratio=req.cleaning.spike_ratio,
        max_flagged_fraction=req.cleaning.max_flagged_fraction,
    )
    records, rejects = parse_records(io.StringIO(req.csv_text), mapping)
    series = {
        name: clean_series(records, name, policy) for name in mapping.channels
    }
    if req.year_start:
        year_start = datetime.fromisoformat(req.year_start)
        if year_start.tzinfo is None:
            year_start = year_start.replace(tzinfo=timezone.utc)
    else:
        year_start = next(iter(series.values())).start
    blocks = to_year_blocks(series, year_start)
    return schemas.IngestResponse(
        dataset_text=dumps_blocked_dataset(blocks),
        base_averages=blocks.base_averages,
        n_records=len(records),
        n_rejects=len(rejects),
        rejects=[
            schemas.RejectModel(line_number=r.line_number, reason=r.reason)
            for r in rejects[:100]
        ],
        flagged_samples={name: s.flagged_count() for name, s in series.items()},
    )


def _scaled_year(dataset_text: str, model: schemas.ScenarioModel) -> ScaledYear:
    blocks = loads_blocked_dataset(dataset_text)
    return apply_scenario(blocks, _to_scenario(model))


@app.post("/run", response_model=schemas.RunResponse)
def run(req: schemas.RunRequest) -> schemas.RunResponse:
    blocks = loads_blocked_dataset(req.dataset_text)
    results = []
    for model in req.scenarios:
        year = apply_scenario(blocks, _to_scenario(model))
        result = run_dispatch(year, parallel=req.parallel)
        summary = summary_dict(year, result)
        hist = histogram(year.ws, year.scenario.bin_gw)
        intervals = None
        if req.include_intervals:
            buf = io.StringIO()
            write_intervals_csv(year, result, buf)
            intervals = buf.getvalue()
        results.append(
            schemas.ScenarioRunResult(
                scenario=summary["scenario"],
                hdrm_gw=summary["hdrm_gw"],
                wind_average_gw=summary["wind_average_gw"],
                solar_average_gw=summary["solar_average_gw"],
                annual_accepted_gw=summary["annual_accepted_gw"],
                annual_curtailed_gw=summary["annual_curtailed_gw"],
                annual_dispatchable_gw=summary["annual_dispatchable_gw"],
                dispatchable_to_hdrm_ratio=summary["dispatchable_to_hdrm_ratio"],
                weekly=[schemas.WeeklyRow(**row) for row in summary["weekly"]],
                histogram=schemas.HistogramModel(
                    bin_gw=hist.bin_gw, counts=hist.counts, total=hist.total
                ),
                intervals_csv=intervals,
            )
        )
    return schemas.RunResponse(results=results)


def _lull_series_csv(year: ScaledYear, events) -> str:
    """Wind and w+s levels over each event window, padded a day either side."""
    wind = year.flat_wind()
    ws = year.flat_ws()
    pad = 288
    lines = ["event,timestamp,wind_gw,ws_gw,hdrm_gw"]
    for n, e in enumerate(events, start=1):
        i0 = max(0, int((e.start - year.year_start).total_seconds() // 300) - pad)
        i1 = min(ws.size, int((e.end - year.year_start).total_seconds() // 300) + pad)
        for i in range(i0, i1):
            ts = (year.year_start + i * STEP).isoformat()
            lines.append(
                f"{n},{ts},{float(wind[i])!r},{float(ws[i])!r},{year.hdrm!r}"
            )
    return "\n".join(lines) + "\n"


@app.post("/lulls", response_model=schemas.LullsResponse)
def lulls(req: schemas.LullsRequest) -> schemas.LullsResponse:
    year = _scaled_year(req.dataset_text, req.scenario)
    events = detect_lulls(year)
    by_time = [_lull_model(e) for e in events]
    by_severity = [
        _lull_model(e)
        for e in sorted(events, key=lambda e: (-e.deficit_gwh, e.start))
    ]
    return schemas.LullsResponse(
        scenario=year.scenario.name,
        threshold_gw=year.scenario.lull_threshold * year.wind_average,
        events_by_time=by_time,
        events_by_severity=by_severity,
        total_lull_hours=sum(e.duration_hours for e in events),
        series_csv=_lull_series_csv(year, events) if req.include_series else None,
    )


def _slew_series_csv(year: ScaledYear) -> str:
    window = year.scenario.slew_window_min
    wind = slew_series(year.flat_wind(), window)
    solar = slew_series(year.flat_solar(), window)
    ws = slew_series(year.flat_ws(), window)
    k = ws.offset_steps
    flat_ws = year.flat_ws()
    lines = ["timestamp,ws_gw,wind_rate_gwh,solar_rate_gwh,ws_rate_gwh"]
    for i in range(ws.rates.size):
        ts = (year.year_start + (i + k) * STEP).isoformat()
        lines.append(
            f"{ts},{float(flat_ws[i + k])!r},{float(wind.rates[i])!r},"
            f"{float(solar.rates[i])!r},{float(ws.rates[i])!r}"
        )
    return "\n".join(lines) + "\n"


@app.post("/slews", response_model=schemas.SlewsResponse)
def slews(req: schemas.SlewsRequest) -> schemas.SlewsResponse:
    blocks = loads_blocked_dataset(req.dataset_text)
    results = []
    for model in req.scenarios:
        year = apply_scenario(blocks, _to_scenario(model))
        event = max_effective_downslew(year)
        results.append(
            schemas.ScenarioSlews(
                scenario=year.scenario.name,
                window_min=year.scenario.slew_window_min,
                max_effective_downslew=_slew_model(event) if event else None,
                max_wind_downslew_gwh=max_channel_slew(year, "wind"),
                max_solar_downslew_gwh=max_channel_slew(year, "solar"),
                mackay_wind_slew_gwh=mackay_slew(year.wind_average),
                scaled_solar_slew_gwh=scaled_solar_slew(year.solar_average),
                series_csv=_slew_series_csv(year) if req.include_series else None,
            )
        )
    return schemas.SlewsResponse(results=results)


@app.post("/fleet-check", response_model=schemas.FleetCheckResponse)
def fleet_check(req: schemas.FleetCheckRequest) -> schemas.FleetCheckResponse:
    year = _scaled_year(req.dataset_text, req.scenario)
    fleet = _to_fleet(req.fleet)
    result = run_dispatch(year)

    event = max_effective_downslew(year)
    required_slew = event.combined_down_gwh if event else 0.0
    report = check_adequacy(fleet.units, max(0.0, required_slew), year.hdrm)

    emissions = annual_emissions(
        result.annual_dispatchable,
        fleet.emissions_efficiency,
        fleet.emission_factor_t_per_mwh,
    )

    lull_events = detect_lulls(year)
    worst = max(lull_events, key=lambda e: e.deficit_gwh, default=None)
    energy = storage_energy(fleet.units)
    exhaustion = None
    if worst is not None:
        i0 = int((worst.start - year.year_start).total_seconds() // 300)
        i1 = int((worst.end - year.year_start).total_seconds() // 300)
        deficit_profile = np.maximum(0.0, year.hdrm - year.flat_ws()[i0:i1])
        exhaustion = storage_exhaustion(energy, deficit_profile)

    def _check(c) -> schemas.CheckModel:
        return schemas.CheckModel(
            requirement=c.requirement,
            capability=c.capability,
            margin=c.margin,
            passed=c.passed,
        )

    return schemas.FleetCheckResponse(
        scenario=year.scenario.name,
        required_slew_gwh=max(0.0, required_slew),
        hdrm_gw=year.hdrm,
        slew_check=_check(report.slew),
        lull_check=_check(report.lull),
        ramp_gwh=report.ramp_gwh,
        instantaneous_gw=report.instantaneous_gw,
        firm_capacity_gw=report.firm_capacity_gw,
        passed=report.passed,
        annual_emissions_mt=emissions,
        worst_lull_deficit_gwh=worst.deficit_gwh if worst else None,
        worst_lull_storage_cost=(
            storage_cost(worst.deficit_gwh, fleet.storage_cost_per_kwh) if worst else None
        ),
        storage_energy_gwh=energy,
        storage_exhaustion_hours=exhaustion,
        storage_exhausted=exhaustion is not None,
    )
