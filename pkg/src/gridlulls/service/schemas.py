"""Pydantic request/response models for the HTTP service.

Datasets travel as the blocked-dataset text format (the same layout the CLI
writes to disk), so the service stays stateless and shares no filesystem with
its clients.
"""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class ColumnSpec(BaseModel):
    column: str
    unit: str = "GW"


class MappingModel(BaseModel):
    timestamp: str
    channels: dict[str, ColumnSpec]


class CleaningModel(BaseModel):
    max_gap_steps: int = 12
    spike_ratio: float = 10.0
    max_flagged_fraction: float = 0.20


class IngestRequest(BaseModel):
    csv_text: str
    mapping: MappingModel
    year_start: str  # ISO-8601; defaults to the first cleaned sample if empty
    cleaning: CleaningModel = CleaningModel()


class RejectModel(BaseModel):
    line_number: int
    reason: str


class IngestResponse(BaseModel):
    dataset_text: str
    base_averages: dict[str, float]
    n_records: int
    n_rejects: int
    rejects: list[RejectModel]
    flagged_samples: dict[str, int]


class ChannelTargetModel(BaseModel):
    average_gw: Optional[float] = None
    multiplier: Optional[float] = None


class AnalysisModel(BaseModel):
    slew_window_min: int = 60
    lull_threshold: float = 0.2
    lull_min_hours: float = 24.0
    histogram_bin_gw: float = 5.0


class ScenarioModel(BaseModel):
    name: str
    demand_gw: float
    nuclear_gw: float
    wind: ChannelTargetModel
    solar: ChannelTargetModel
    analysis: AnalysisModel = AnalysisModel()


class RunRequest(BaseModel):
    dataset_text: str
    scenarios: list[ScenarioModel] = Field(min_length=1)
    include_intervals: bool = False
    parallel: bool = False


class WeeklyRow(BaseModel):
    week: int
    accepted_gw: float
    curtailed_gw: float
    dispatchable_gw: float


class HistogramModel(BaseModel):
    bin_gw: float
    counts: list[int]
    total: int


class ScenarioRunResult(BaseModel):
    scenario: str
    hdrm_gw: float
    wind_average_gw: float
    solar_average_gw: float
    annual_accepted_gw: float
    annual_curtailed_gw: float
    annual_dispatchable_gw: float
    dispatchable_to_hdrm_ratio: float
    weekly: list[WeeklyRow]
    histogram: HistogramModel
    intervals_csv: Optional[str] = None


class RunResponse(BaseModel):
    results: list[ScenarioRunResult]


class LullsRequest(BaseModel):
    dataset_text: str
    scenario: ScenarioModel
    include_series: bool = False


class LullEventModel(BaseModel):
    start: str
    end: str
    duration_hours: float
    min_ws_gw: float
    min_ws_timestamp: str
    deficit_gwh: float


class LullsResponse(BaseModel):
    scenario: str
    threshold_gw: float
    events_by_time: list[LullEventModel]
    events_by_severity: list[LullEventModel]
    total_lull_hours: float
    series_csv: Optional[str] = None  # plot-ready wind/w+s levels per event window


class SlewsRequest(BaseModel):
    dataset_text: str
    scenarios: list[ScenarioModel] = Field(min_length=1)
    include_series: bool = False


class SlewEventModel(BaseModel):
    timestamp: str
    block: int
    wind_down_gwh: float
    solar_down_gwh: float
    combined_down_gwh: float
    ws_level_gw: float


class ScenarioSlews(BaseModel):
    scenario: str
    window_min: int
    max_effective_downslew: Optional[SlewEventModel]
    max_wind_downslew_gwh: float
    max_solar_downslew_gwh: float
    mackay_wind_slew_gwh: float
    scaled_solar_slew_gwh: float
    series_csv: Optional[str] = None


class SlewsResponse(BaseModel):
    results: list[ScenarioSlews]


class FleetUnitModel(BaseModel):
    technology: str
    capacity_gw: float
    ramp_rate_per_gw: float = 0.0
    time_to_full_min: float = 0.0
    efficiency_full: Optional[float] = None
    efficiency_40pct: Optional[float] = None
    energy_capacity_gwh: Optional[float] = None


class FleetModel(BaseModel):
    units: list[FleetUnitModel]
    emissions_efficiency: float = 0.5
    emission_factor_t_per_mwh: float = 0.185
    storage_cost_per_kwh: float = 150.0


class FleetCheckRequest(BaseModel):
    dataset_text: str
    scenario: ScenarioModel
    fleet: FleetModel


class CheckModel(BaseModel):
    requirement: float
    capability: float
    margin: float
    passed: bool


class FleetCheckResponse(BaseModel):
    scenario: str
    required_slew_gwh: float
    hdrm_gw: float
    slew_check: CheckModel
    lull_check: CheckModel
    ramp_gwh: float
    instantaneous_gw: float
    firm_capacity_gw: float
    passed: bool
    annual_emissions_mt: float
    worst_lull_deficit_gwh: Optional[float]
    worst_lull_storage_cost: Optional[float]
    storage_energy_gwh: float
    storage_exhaustion_hours: Optional[float]
    storage_exhausted: bool


class ErrorResponse(BaseModel):
    error_type: str
    message: str
