"""Per-interval acceptance/curtailment against the headroom, and aggregation.

For each 5-minute interval, renewable generation up to the headroom is
accepted; the surplus is curtailed; the shortfall must come from dispatchable
plant. Weekly averages are taken over each 2016-sample block and the annual
average is the mean of the 52 weekly averages (identical to the global mean
since all blocks are the same length).
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import IO

import numpy as np

from .errors import EmptyInputError, GridLullsError
from .ingest import STEP, WEEKS_PER_YEAR
from .scenario import ScaledYear


@dataclass
class IntervalDispatch:
    accepted: float
    curtailed: float
    dispatchable: float


@dataclass
class DispatchResult:
    hdrm: float
    accepted: np.ndarray  # (52, 2016) GW
    curtailed: np.ndarray
    dispatchable: np.ndarray
    weekly_accepted: np.ndarray  # (52,)
    weekly_curtailed: np.ndarray
    weekly_dispatchable: np.ndarray
    annual_accepted: float
    annual_curtailed: float
    annual_dispatchable: float
    ratio: float  # annual dispatchable / Hdrm


@dataclass
class GenHistogram:
    bin_gw: float
    counts: list[int]  # counts[k] covers [k*bin_gw, (k+1)*bin_gw)
    total: int

    def band(self, k: int) -> tuple[float, float]:
        return k * self.bin_gw, (k + 1) * self.bin_gw


def dispatch_interval(w_s: float, hdrm: float) -> IntervalDispatch:
    """Split one interval's w+s generation into accepted/curtailed/dispatchable."""
    if w_s < 0:
        raise GridLullsError(f"negative w+s generation {w_s}; input was not cleaned")
    if hdrm <= 0:
        raise GridLullsError(f"headroom must be > 0, got {hdrm}")
    accepted = min(w_s, hdrm)
    return IntervalDispatch(
        accepted=accepted, curtailed=w_s - accepted, dispatchable=hdrm - accepted
    )


def _dispatch_block(ws_block: np.ndarray, hdrm: float) -> tuple[np.ndarray, ...]:
    accepted = np.minimum(ws_block, hdrm)
    return accepted, ws_block - accepted, hdrm - accepted


def run_dispatch(year: ScaledYear, parallel: bool = False) -> DispatchResult:
    """Dispatch all 104,832 intervals and aggregate weekly and annually.

    The per-block map is independent, so ``parallel=True`` evaluates blocks in
    a thread pool; results are assembled in block order and are bit-identical
    to the sequential path.
    """
    ws = year.ws
    if np.any(ws < 0):
        raise GridLullsError("negative w+s generation; input was not cleaned")
    hdrm = year.hdrm
    if parallel:
        with ThreadPoolExecutor(max_workers=8) as pool:
            parts = list(pool.map(lambda b: _dispatch_block(b, hdrm), ws))
        accepted = np.stack([p[0] for p in parts])
        curtailed = np.stack([p[1] for p in parts])
        dispatchable = np.stack([p[2] for p in parts])
    else:
        accepted, curtailed, dispatchable = _dispatch_block(ws, hdrm)

    weekly_accepted = accepted.mean(axis=1)
    weekly_curtailed = curtailed.mean(axis=1)
    weekly_dispatchable = dispatchable.mean(axis=1)
    annual_dispatchable = float(weekly_dispatchable.mean())
    return DispatchResult(
        hdrm=hdrm,
        accepted=accepted,
        curtailed=curtailed,
        dispatchable=dispatchable,
        weekly_accepted=weekly_accepted,
        weekly_curtailed=weekly_curtailed,
        weekly_dispatchable=weekly_dispatchable,
        annual_accepted=float(weekly_accepted.mean()),
        annual_curtailed=float(weekly_curtailed.mean()),
        annual_dispatchable=annual_dispatchable,
        ratio=annual_dispatchable / hdrm,
    )


def histogram(samples: np.ndarray, bin_gw: float = 5.0) -> GenHistogram:
    """Count samples into half-open bands [k*bin, (k+1)*bin) from zero up."""
    if bin_gw <= 0:
        raise GridLullsError(f"bin width must be > 0, got {bin_gw}")
    flat = np.asarray(samples).reshape(-1)
    if flat.size == 0:
        raise EmptyInputError("cannot histogram an empty series")
    idx = np.floor_divide(flat, bin_gw).astype(int)
    counts = np.bincount(idx)
    return GenHistogram(bin_gw=bin_gw, counts=[int(c) for c in counts], total=int(flat.size))


def summary_dict(year: ScaledYear, result: DispatchResult) -> dict:
    """Plain-JSON summary of one scenario run (annual figures + weekly table)."""
    s = year.scenario
    return {
        "scenario": s.name,
        "demand_gw": s.demand_gw,
        "nuclear_gw": s.nuclear_gw,
        "hdrm_gw": result.hdrm,
        "wind_average_gw": year.wind_average,
        "solar_average_gw": year.solar_average,
        "annual_accepted_gw": result.annual_accepted,
        "annual_curtailed_gw": result.annual_curtailed,
        "annual_dispatchable_gw": result.annual_dispatchable,
        "dispatchable_to_hdrm_ratio": result.ratio,
        "weekly": [
            {
                "week": w + 1,
                "accepted_gw": float(result.weekly_accepted[w]),
                "curtailed_gw": float(result.weekly_curtailed[w]),
                "dispatchable_gw": float(result.weekly_dispatchable[w]),
            }
            for w in range(WEEKS_PER_YEAR)
        ],
    }


def write_intervals_csv(year: ScaledYear, result: DispatchResult, stream: IO[str]) -> None:
    """Per-interval export: timestamp, w+s, accepted, curtailed, dispatchable."""
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(["timestamp", "ws_gw", "accepted_gw", "curtailed_gw", "dispatchable_gw"])
    ws = year.flat_ws()
    acc = result.accepted.reshape(-1)
    cur = result.curtailed.reshape(-1)
    dsp = result.dispatchable.reshape(-1)
    start = year.year_start
    for i in range(ws.size):
        ts = (start + i * STEP).isoformat()
        writer.writerow(
            [ts, repr(float(ws[i])), repr(float(acc[i])), repr(float(cur[i])), repr(float(dsp[i]))]
        )
