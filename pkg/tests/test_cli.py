import json
from datetime import timedelta

import numpy as np
import pytest
import yaml

from gridlulls.cli import main
from gridlulls.ingest import SAMPLES_PER_YEAR, dumps_blocked_dataset
from tests.conftest import YEAR_START, make_blocks


@pytest.fixture(scope="module")
def dataset_file(tmp_path_factory, random_blocks):
    path = tmp_path_factory.mktemp("data") / "year.blocks"
    path.write_text(dumps_blocked_dataset(random_blocks))
    return path


@pytest.fixture(scope="module")
def scenario_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "identity.yaml"
    path.write_text(yaml.safe_dump({
        "name": "identity",
        "demand_gw": 54, "nuclear_gw": 5.5,
        "wind": {"multiplier": 1.0}, "solar": {"multiplier": 1.0},
    }))
    return path


@pytest.fixture(scope="module")
def fleet_file(tmp_path_factory):
    path = tmp_path_factory.mktemp("cfg") / "fleet.yaml"
    path.write_text(yaml.safe_dump({
        "units": [
            {"technology": "CCGT", "capacity_gw": 25, "ramp_rate_per_gw": 3,
             "efficiency_full": 0.6, "efficiency_40pct": 0.4},
            {"technology": "OCGT", "capacity_gw": 24, "ramp_rate_per_gw": 30,
             "efficiency_full": 0.35, "efficiency_40pct": 0.27},
            {"technology": "storage", "capacity_gw": 5, "energy_capacity_gwh": 150},
        ],
    }))
    return path


class TestIngestCommand:
    def _mapping(self, tmp_path):
        path = tmp_path / "mapping.yaml"
        path.write_text(yaml.safe_dump({
            "timestamp": "ts",
            "channels": {"wind": {"column": "wind", "unit": "MW"},
                         "solar": {"column": "solar", "unit": "MW"}},
        }))
        return path

    def test_truncated_file_exits_2(self, tmp_path, capsys):
        csv_path = tmp_path / "short.csv"
        rows = ["ts,wind,solar"] + [
            f"{(YEAR_START + i * timedelta(minutes=5)).isoformat()},4000,0"
            for i in range(100)
        ]
        csv_path.write_text("\n".join(rows) + "\n")
        code = main([
            "ingest", "--input", str(csv_path), "--mapping", str(self._mapping(tmp_path)),
            "--out", str(tmp_path / "out.blocks"),
        ])
        assert code == 2
        assert "CoverageError" in capsys.readouterr().err

    def test_bad_mapping_exits_1(self, tmp_path, capsys):
        csv_path = tmp_path / "data.csv"
        csv_path.write_text("ts,wind,solar\n2017-01-01T00:00:00,4000,0\n")
        mapping = tmp_path / "mapping.yaml"
        mapping.write_text(yaml.safe_dump({
            "timestamp": "ts", "channels": {"wind": {"column": "missing"}},
        }))
        code = main([
            "ingest", "--input", str(csv_path), "--mapping", str(mapping),
            "--out", str(tmp_path / "out.blocks"),
        ])
        assert code == 1

    def test_small_year_round_trip(self, tmp_path, capsys):
        rows = ["ts,wind,solar"]
        for i in range(SAMPLES_PER_YEAR):
            rows.append(f"{(YEAR_START + i * timedelta(minutes=5)).isoformat()},6045,1160")
        csv_path = tmp_path / "year.csv"
        csv_path.write_text("\n".join(rows) + "\n")
        out = tmp_path / "year.blocks"
        code = main([
            "ingest", "--input", str(csv_path), "--mapping", str(self._mapping(tmp_path)),
            "--out", str(out),
        ])
        assert code == 0
        assert out.exists()
        captured = capsys.readouterr().out
        assert "wind: base average 6.0450 GW" in captured


class TestRunCommand:
    def test_run_writes_summary_and_histogram(self, dataset_file, scenario_file, tmp_path, capsys):
        out_dir = tmp_path / "out"
        code = main([
            "run", "--dataset", str(dataset_file), "--scenario", str(scenario_file),
            "--out-dir", str(out_dir),
        ])
        assert code == 0
        summary = json.loads((out_dir / "identity_summary.json").read_text())
        assert summary["hdrm_gw"] == pytest.approx(48.5)
        hist_lines = (out_dir / "identity_histogram.csv").read_text().splitlines()
        assert hist_lines[0] == "band_lo_gw,band_hi_gw,count"
        total = sum(int(line.split(",")[2]) for line in hist_lines[1:])
        assert total == SAMPLES_PER_YEAR
        assert "dispatchable/Hdrm" in capsys.readouterr().out

    def test_missing_dataset_exits_2(self, scenario_file, capsys):
        code = main([
            "run", "--dataset", "/nonexistent.blocks", "--scenario", str(scenario_file),
        ])
        assert code == 2

    def test_infeasible_scenario_exits_3(self, dataset_file, tmp_path, capsys):
        bad = tmp_path / "bad.yaml"
        bad.write_text(yaml.safe_dump({
            "name": "bad", "demand_gw": 5, "nuclear_gw": 6,
            "wind": {"multiplier": 1.0}, "solar": {"multiplier": 1.0},
        }))
        code = main(["run", "--dataset", str(dataset_file), "--scenario", str(bad)])
        assert code == 3

    def test_usage_error_exits_1(self, capsys):
        assert main(["run", "--dataset", "x"]) == 1

    def test_data_dir_env_resolution(self, dataset_file, scenario_file, monkeypatch, capsys):
        monkeypatch.setenv("GRIDLULLS_DATA_DIR", str(dataset_file.parent))
        code = main([
            "run", "--dataset", dataset_file.name, "--scenario", str(scenario_file),
        ])
        assert code == 0


class TestLullsAndSlews:
    def test_lulls_listing(self, tmp_path, scenario_file, capsys):
        wind = np.full(SAMPLES_PER_YEAR, 10.0)
        wind[288:576] = 0.0
        path = tmp_path / "lully.blocks"
        path.write_text(dumps_blocked_dataset(make_blocks(wind, np.zeros(SAMPLES_PER_YEAR))))
        out_dir = tmp_path / "out"
        code = main([
            "lulls", "--dataset", str(path), "--scenario", str(scenario_file),
            "--out-dir", str(out_dir),
        ])
        assert code == 0
        out = capsys.readouterr().out
        assert "1 lull event(s)" in out
        body = json.loads((out_dir / "identity_lulls.json").read_text())
        assert body["events_by_time"][0]["duration_hours"] == pytest.approx(24.0)
        plot = (out_dir / "identity_lulls.csv").read_text().splitlines()
        assert plot[0] == "event,timestamp,wind_gw,ws_gw,hdrm_gw"
        assert len(plot) > 288  # event window plus padding

    def test_slews_mackay_table_for_multiple_scenarios(
        self, dataset_file, scenario_file, tmp_path, capsys
    ):
        second = tmp_path / "double.yaml"
        second.write_text(yaml.safe_dump({
            "name": "double", "demand_gw": 54, "nuclear_gw": 5.5,
            "wind": {"multiplier": 2.0}, "solar": {"multiplier": 2.0},
        }))
        code = main([
            "slews", "--dataset", str(dataset_file),
            "--scenario", str(scenario_file), "--scenario", str(second),
        ])
        assert code == 0
        out = capsys.readouterr().out
        assert "MacKay" in out
        assert "double" in out

    def test_window_override(self, dataset_file, scenario_file, tmp_path, capsys):
        out_dir = tmp_path / "out"
        code = main([
            "slews", "--dataset", str(dataset_file), "--scenario", str(scenario_file),
            "--window-min", "5", "--out-dir", str(out_dir),
        ])
        assert code == 0
        body = json.loads((out_dir / "identity_slews.json").read_text())
        assert body["window_min"] == 5


class TestFleetCheckCommand:
    def test_check(self, dataset_file, scenario_file, fleet_file, tmp_path, capsys):
        out_dir = tmp_path / "out"
        code = main([
            "fleet-check", "--dataset", str(dataset_file), "--scenario", str(scenario_file),
            "--fleet", str(fleet_file), "--out-dir", str(out_dir),
        ])
        assert code == 0
        body = json.loads((out_dir / "identity_adequacy.json").read_text())
        assert body["lull_check"]["capability"] == pytest.approx(49.0)
        assert "annual emissions" in capsys.readouterr().out


class TestReportCommand:
    def test_report_reruns_byte_identical(self, dataset_file, scenario_file, fleet_file, tmp_path, capsys):
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        for out in (out_a, out_b):
            code = main([
                "report", "--dataset", str(dataset_file), "--scenario", str(scenario_file),
                "--fleet", str(fleet_file), "--out-dir", str(out),
            ])
            assert code == 0
        files_a = sorted(p.name for p in out_a.iterdir())
        files_b = sorted(p.name for p in out_b.iterdir())
        assert files_a == files_b
        assert "manifest.json" in files_a
        for name in files_a:
            assert (out_a / name).read_bytes() == (out_b / name).read_bytes()

    def test_manifest_lists_all_outputs(self, dataset_file, scenario_file, tmp_path, capsys):
        out = tmp_path / "r"
        main([
            "report", "--dataset", str(dataset_file), "--scenario", str(scenario_file),
            "--out-dir", str(out),
        ])
        manifest = json.loads((out / "manifest.json").read_text())
        produced = sorted(p.name for p in out.iterdir() if p.name != "manifest.json")
        assert manifest["outputs"] == produced
        assert manifest["dataset_sha256"]

    def test_report_requires_out_dir(self, dataset_file, scenario_file, capsys):
        code = main([
            "report", "--dataset", str(dataset_file), "--scenario", str(scenario_file),
        ])
        assert code == 1
