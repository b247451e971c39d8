"""Command-line front end. A thin HTTP client of the gridlulls service.

By default the client talks to an in-process instance of the service; pass
``--server URL`` (or set GRIDLULLS_SERVER) to use a remote one started with
``gridlulls serve``. Relative dataset paths are also resolved against the
GRIDLULLS_DATA_DIR directory when set.

Exit codes: 0 success, 1 usage/configuration, 2 data error, 3 infeasible
scenario.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys
from pathlib import Path

import yaml

from . import __version__

EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INFEASIBLE = 3

_ERROR_EXIT_CODES = {
    "ConfigurationError": EXIT_USAGE,
    "EmptyInputError": EXIT_DATA,
    "DataQualityError": EXIT_DATA,
    "CoverageError": EXIT_DATA,
    "RangeError": EXIT_DATA,
    "GridLullsError": EXIT_DATA,
    "InfeasibleScenarioError": EXIT_INFEASIBLE,
}


class CliError(Exception):
    def __init__(self, message: str, exit_code: int):
        super().__init__(message)
        self.exit_code = exit_code


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse default exits 2; usage errors are 1 here
        self.print_usage(sys.stderr)
        raise CliError(message, EXIT_USAGE)


def _make_client(server: str | None):
    if server:
        import httpx

        return httpx.Client(base_url=server, timeout=300.0)
    from fastapi.testclient import TestClient

    from .service import app

    return TestClient(app)


def _call(client, path: str, payload: dict) -> dict:
    resp = client.post(path, json=payload)
    if resp.status_code >= 400:
        try:
            body = resp.json()
        except ValueError:
            raise CliError(f"server error {resp.status_code}: {resp.text}", EXIT_DATA)
        error_type = body.get("error_type", "")
        message = body.get("message") or body.get("detail") or resp.text
        raise CliError(
            f"{error_type or 'error'}: {message}",
            _ERROR_EXIT_CODES.get(error_type, EXIT_USAGE if resp.status_code == 422 else EXIT_DATA),
        )
    return resp.json()


def _resolve_dataset(path: str) -> Path:
    p = Path(path)
    if not p.exists() and not p.is_absolute():
        data_dir = os.environ.get("GRIDLULLS_DATA_DIR")
        if data_dir:
            candidate = Path(data_dir) / p
            if candidate.exists():
                return candidate
    if not p.exists():
        raise CliError(f"dataset file not found: {path}", EXIT_DATA)
    return p


def _load_yaml(path: str, what: str) -> dict:
    try:
        with open(path) as f:
            doc = yaml.safe_load(f)
    except FileNotFoundError:
        raise CliError(f"{what} file not found: {path}", EXIT_USAGE)
    except yaml.YAMLError as exc:
        raise CliError(f"bad {what} file {path}: {exc}", EXIT_USAGE)
    if not isinstance(doc, dict):
        raise CliError(f"{what} file {path} must contain a YAML mapping", EXIT_USAGE)
    return doc


def _scenario_payload(path: str, args) -> dict:
    doc = _load_yaml(path, "scenario")
    analysis = dict(doc.get("analysis") or {})
    overrides = {
        "slew_window_min": getattr(args, "window_min", None),
        "lull_threshold": getattr(args, "lull_threshold", None),
        "lull_min_hours": getattr(args, "lull_min_hours", None),
        "histogram_bin_gw": getattr(args, "bin_gw", None),
    }
    for key, value in overrides.items():
        if value is not None:
            analysis[key] = value
    payload = {
        "name": doc.get("name", Path(path).stem),
        "demand_gw": doc.get("demand_gw"),
        "nuclear_gw": doc.get("nuclear_gw"),
        "wind": doc.get("wind"),
        "solar": doc.get("solar"),
        "analysis": analysis,
    }
    for key in ("demand_gw", "nuclear_gw", "wind", "solar"):
        if payload[key] is None:
            raise CliError(f"scenario file {path} missing required key {key!r}", EXIT_USAGE)
    return payload


def _fleet_payload(path: str) -> dict:
    doc = _load_yaml(path, "fleet")
    units = doc.get("units")
    if not isinstance(units, list):
        raise CliError(f"fleet file {path} needs a 'units' list", EXIT_USAGE)
    emissions = doc.get("emissions") or {}
    return {
        "units": units,
        "emissions_efficiency": emissions.get("efficiency", 0.5),
        "emission_factor_t_per_mwh": emissions.get("factor_t_per_mwh", 0.185),
        "storage_cost_per_kwh": doc.get("storage_cost_per_kwh", 150.0),
    }


def _safe_name(name: str) -> str:
    return "".join(c if c.isalnum() or c in "-_" else "_" for c in name)


def _fmt(x: float) -> str:
    return f"{x:.4f}"


def _dump_json(obj) -> str:
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def _write_outputs(out_dir: Path, outputs: dict[str, str]) -> None:
    # All content is assembled before anything touches disk, so a failure
    # partway through analysis leaves no partial results behind.
    out_dir.mkdir(parents=True, exist_ok=True)
    for rel, text in outputs.items():
        (out_dir / rel).write_text(text)


def _histogram_csv(hist: dict) -> str:
    lines = ["band_lo_gw,band_hi_gw,count"]
    for k, count in enumerate(hist["counts"]):
        lo = k * hist["bin_gw"]
        hi = (k + 1) * hist["bin_gw"]
        lines.append(f"{lo!r},{hi!r},{count}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# subcommands


def cmd_ingest(client, args) -> int:
    mapping_doc = _load_yaml(args.mapping, "mapping")
    input_path = Path(args.input)
    if not input_path.exists():
        raise CliError(f"input file not found: {args.input}", EXIT_DATA)
    channels = mapping_doc.get("channels")
    if not isinstance(channels, dict):
        raise CliError(f"mapping file {args.mapping} needs a 'channels' mapping", EXIT_USAGE)
    payload = {
        "csv_text": input_path.read_text(),
        "mapping": {
            "timestamp": mapping_doc.get("timestamp", "timestamp"),
            "channels": {
                name: (spec if isinstance(spec, dict) else {"column": spec})
                for name, spec in channels.items()
            },
        },
        "year_start": args.year_start or "",
    }
    body = _call(client, "/ingest", payload)
    Path(args.out).write_text(body["dataset_text"])
    print(f"wrote {args.out}")
    print(f"records: {body['n_records']}  rejects: {body['n_rejects']}")
    for name, avg in sorted(body["base_averages"].items()):
        flagged = body["flagged_samples"].get(name, 0)
        print(f"  {name}: base average {_fmt(avg)} GW ({flagged} repaired samples)")
    return 0


def _run_scenarios(client, args, include_intervals: bool) -> dict:
    dataset = _resolve_dataset(args.dataset)
    payload = {
        "dataset_text": dataset.read_text(),
        "scenarios": [_scenario_payload(p, args) for p in args.scenario],
        "include_intervals": include_intervals,
    }
    return _call(client, "/run", payload)


def cmd_run(client, args) -> int:
    body = _run_scenarios(client, args, args.intervals)
    outputs: dict[str, str] = {}
    for result in body["results"]:
        name = _safe_name(result["scenario"])
        print(f"scenario {result['scenario']}:")
        print(f"  Hdrm                 {_fmt(result['hdrm_gw'])} GW")
        print(f"  wind average         {_fmt(result['wind_average_gw'])} GW")
        print(f"  solar average        {_fmt(result['solar_average_gw'])} GW")
        print(f"  annual dispatchable  {_fmt(result['annual_dispatchable_gw'])} GW")
        print(f"  annual curtailed     {_fmt(result['annual_curtailed_gw'])} GW")
        print(f"  dispatchable/Hdrm    {_fmt(100 * result['dispatchable_to_hdrm_ratio'])} %")
        if args.out_dir:
            intervals = result.pop("intervals_csv", None)
            hist = result["histogram"]
            outputs[f"{name}_summary.json"] = _dump_json(result)
            outputs[f"{name}_histogram.csv"] = _histogram_csv(hist)
            if intervals:
                outputs[f"{name}_intervals.csv"] = intervals
    if args.out_dir:
        _write_outputs(Path(args.out_dir), outputs)
    return 0


def cmd_lulls(client, args) -> int:
    dataset = _resolve_dataset(args.dataset)
    outputs: dict[str, str] = {}
    for path in args.scenario:
        payload = {
            "dataset_text": dataset.read_text(),
            "scenario": _scenario_payload(path, args),
            "include_series": bool(args.out_dir),
        }
        body = _call(client, "/lulls", payload)
        name = _safe_name(body["scenario"])
        print(f"scenario {body['scenario']}: {len(body['events_by_time'])} lull event(s), "
              f"{_fmt(body['total_lull_hours'])} h total (wind < {_fmt(body['threshold_gw'])} GW)")
        print("  by severity:")
        for e in body["events_by_severity"]:
            print(
                f"    {e['start']} .. {e['end']}  {_fmt(e['duration_hours'])} h  "
                f"deficit {_fmt(e['deficit_gwh'])} GWh  min w+s {_fmt(e['min_ws_gw'])} GW"
            )
        print("  by time:")
        for e in body["events_by_time"]:
            print(f"    {e['start']} .. {e['end']}  deficit {_fmt(e['deficit_gwh'])} GWh")
        if args.out_dir:
            series = body.pop("series_csv", None)
            outputs[f"{name}_lulls.json"] = _dump_json(body)
            if series:
                outputs[f"{name}_lulls.csv"] = series
    if args.out_dir:
        _write_outputs(Path(args.out_dir), outputs)
    return 0


def cmd_slews(client, args) -> int:
    dataset = _resolve_dataset(args.dataset)
    payload = {
        "dataset_text": dataset.read_text(),
        "scenarios": [_scenario_payload(p, args) for p in args.scenario],
        "include_series": bool(args.out_dir),
    }
    body = _call(client, "/slews", payload)
    outputs: dict[str, str] = {}
    for result in body["results"]:
        name = _safe_name(result["scenario"])
        event = result["max_effective_downslew"]
        print(f"scenario {result['scenario']} (window {result['window_min']} min):")
        if event:
            print(
                f"  max effective down-slew {_fmt(event['combined_down_gwh'])} GW/h "
                f"(wind {_fmt(event['wind_down_gwh'])} + solar {_fmt(event['solar_down_gwh'])}) "
                f"at {event['timestamp']} in block {event['block']}"
            )
        else:
            print("  no effective down-slew: w+s never at or below Hdrm")
        print(f"  max wind down-slew   {_fmt(result['max_wind_downslew_gwh'])} GW/h")
        print(f"  max solar down-slew  {_fmt(result['max_solar_downslew_gwh'])} GW/h")
        if args.out_dir:
            series = result.pop("series_csv", None)
            outputs[f"{name}_slews.json"] = _dump_json(result)
            if series:
                outputs[f"{name}_slew_series.csv"] = series
    if len(body["results"]) > 1:
        print("model vs MacKay-rule maximum wind slews (GW/h):")
        print(f"  {'scenario':<20} {'model':>10} {'MacKay':>10}")
        for result in body["results"]:
            print(
                f"  {result['scenario']:<20} {_fmt(result['max_wind_downslew_gwh']):>10} "
                f"{_fmt(result['mackay_wind_slew_gwh']):>10}"
            )
    if args.out_dir:
        _write_outputs(Path(args.out_dir), outputs)
    return 0


def cmd_fleet_check(client, args) -> int:
    dataset = _resolve_dataset(args.dataset)
    outputs: dict[str, str] = {}
    exit_code = 0
    for path in args.scenario:
        payload = {
            "dataset_text": dataset.read_text(),
            "scenario": _scenario_payload(path, args),
            "fleet": _fleet_payload(args.fleet),
        }
        body = _call(client, "/fleet-check", payload)
        name = _safe_name(body["scenario"])
        slew, lull = body["slew_check"], body["lull_check"]
        print(f"scenario {body['scenario']}: fleet {'PASS' if body['passed'] else 'FAIL'}")
        print(
            f"  slew: need {_fmt(slew['requirement'])} GW/h, have "
            f"{_fmt(slew['capability'])} (margin {_fmt(slew['margin'])}) "
            f"-> {'pass' if slew['passed'] else 'fail'}"
        )
        print(
            f"  lull: need {_fmt(lull['requirement'])} GW firm, have "
            f"{_fmt(lull['capability'])} (margin {_fmt(lull['margin'])}) "
            f"-> {'pass' if lull['passed'] else 'fail'}"
        )
        print(f"  annual emissions: {_fmt(body['annual_emissions_mt'])} MtCO2")
        if body["worst_lull_deficit_gwh"] is not None:
            print(
                f"  worst lull deficit {_fmt(body['worst_lull_deficit_gwh'])} GWh; storage to cover "
                f"it would cost {body['worst_lull_storage_cost']:.3e}"
            )
            if body["storage_exhausted"]:
                print(
                    f"  fleet storage ({_fmt(body['storage_energy_gwh'])} GWh) exhausts in "
                    f"{_fmt(body['storage_exhaustion_hours'])} h of the worst lull"
                )
            else:
                print(
                    f"  fleet storage ({_fmt(body['storage_energy_gwh'])} GWh) "
                    "outlasts the worst lull"
                )
        if args.out_dir:
            outputs[f"{name}_adequacy.json"] = _dump_json(body)
    if args.out_dir:
        _write_outputs(Path(args.out_dir), outputs)
    return exit_code


def cmd_report(client, args) -> int:
    dataset = _resolve_dataset(args.dataset)
    out_dir = Path(args.out_dir)
    outputs: dict[str, str] = {}
    dataset_text = dataset.read_text()
    scenario_payloads = [_scenario_payload(p, args) for p in args.scenario]

    body = _call(
        client,
        "/run",
        {
            "dataset_text": dataset_text,
            "scenarios": scenario_payloads,
            "include_intervals": args.intervals,
        },
    )
    for result in body["results"]:
        name = _safe_name(result["scenario"])
        intervals = result.pop("intervals_csv", None)
        outputs[f"{name}_summary.json"] = _dump_json(result)
        outputs[f"{name}_histogram.csv"] = _histogram_csv(result["histogram"])
        if intervals:
            outputs[f"{name}_intervals.csv"] = intervals

    for payload in scenario_payloads:
        lull_body = _call(
            client, "/lulls", {"dataset_text": dataset_text, "scenario": payload}
        )
        outputs[f"{_safe_name(lull_body['scenario'])}_lulls.json"] = _dump_json(lull_body)

    slews_body = _call(
        client,
        "/slews",
        {"dataset_text": dataset_text, "scenarios": scenario_payloads, "include_series": False},
    )
    for result in slews_body["results"]:
        outputs[f"{_safe_name(result['scenario'])}_slews.json"] = _dump_json(result)

    if args.fleet:
        fleet_payload = _fleet_payload(args.fleet)
        for payload in scenario_payloads:
            check = _call(
                client,
                "/fleet-check",
                {"dataset_text": dataset_text, "scenario": payload, "fleet": fleet_payload},
            )
            outputs[f"{_safe_name(check['scenario'])}_adequacy.json"] = _dump_json(check)

    manifest = {
        "tool": "gridlulls",
        "version": __version__,
        "dataset": str(args.dataset),
        "dataset_sha256": hashlib.sha256(dataset_text.encode()).hexdigest(),
        "scenario_files": list(args.scenario),
        "fleet_file": args.fleet,
        "parameters": {
            "window_min": args.window_min,
            "lull_threshold": args.lull_threshold,
            "lull_min_hours": args.lull_min_hours,
            "bin_gw": args.bin_gw,
            "intervals": args.intervals,
        },
        "scenarios": scenario_payloads,
        "outputs": sorted(outputs),
    }
    outputs["manifest.json"] = _dump_json(manifest)
    _write_outputs(out_dir, outputs)
    print(f"report written to {out_dir} ({len(outputs)} files)")
    return 0


def cmd_serve(client, args) -> int:
    import uvicorn

    from .service import app

    uvicorn.run(app, host=args.host, port=args.port)
    return 0


# ---------------------------------------------------------------------------


def _add_common(p: argparse.ArgumentParser, fleet: bool = False) -> None:
    p.add_argument("--dataset", required=True, help="blocked dataset file")
    p.add_argument("--scenario", action="append", required=True, help="scenario YAML (repeatable)")
    if fleet:
        p.add_argument("--fleet", required=True, help="fleet YAML file")
    p.add_argument("--window-min", type=int, default=None, help="override slew window (minutes)")
    p.add_argument("--lull-threshold", type=float, default=None, help="override lull threshold fraction")
    p.add_argument("--lull-min-hours", type=float, default=None, help="override minimum lull duration")
    p.add_argument("--bin-gw", type=float, default=None, help="override histogram band width (GW)")
    p.add_argument("--out-dir", default=None, help="directory for exported files")


def build_parser() -> _Parser:
    parser = _Parser(prog="gridlulls", description=__doc__)
    parser.add_argument("--server", default=os.environ.get("GRIDLULLS_SERVER"),
                        help="base URL of a running gridlulls service (default: in-process)")
    parser.add_argument("--version", action="version", version=f"gridlulls {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("ingest", help="parse/clean a raw 5-minute CSV into a blocked dataset")
    p.add_argument("--input", required=True, help="raw CSV file")
    p.add_argument("--mapping", required=True, help="column-mapping YAML")
    p.add_argument("--year-start", default=None, help="ISO timestamp of the year start")
    p.add_argument("--out", required=True, help="output blocked-dataset path")
    p.set_defaults(func=cmd_ingest)

    p = sub.add_parser("run", help="dispatch/curtailment run for one or more scenarios")
    _add_common(p)
    p.add_argument("--intervals", action="store_true", help="also export per-interval CSV")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("lulls", help="detect wind lulls and their energy deficits")
    _add_common(p)
    p.set_defaults(func=cmd_lulls)

    p = sub.add_parser("slews", help="largest wind/solar slews and MacKay comparison")
    _add_common(p)
    p.set_defaults(func=cmd_slews)

    p = sub.add_parser("fleet-check", help="fleet adequacy, emissions, storage analyses")
    _add_common(p, fleet=True)
    p.set_defaults(func=cmd_fleet_check)

    p = sub.add_parser("report", help="run everything and write a manifest")
    _add_common(p)
    p.add_argument("--fleet", default=None, help="fleet YAML file (optional)")
    p.add_argument("--intervals", action="store_true", help="also export per-interval CSV")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("serve", help="start the HTTP service")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.set_defaults(func=cmd_serve)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command == "report" and not args.out_dir:
            raise CliError("report requires --out-dir", EXIT_USAGE)
        client = None if args.command == "serve" else _make_client(args.server)
        try:
            return args.func(client, args)
        finally:
            if client is not None:
                client.close()
    except CliError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code


if __name__ == "__main__":
    sys.exit(main())
