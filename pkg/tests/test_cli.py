"""End-to-end tests of the survcam command line."""

import json
import os
import shutil

import numpy as np

import pandas as pd

import pytest

from survcam.cli import EXIT_DATA, EXIT_OK, EXIT_USAGE, main
from survcam.examples.toy_instances import two_target_game
from survcam.metrics import metric_report
from survcam.model_io import load_model
from survcam.placement import Placement

GRID_ARGS = ["--min-lat", "39.9", "--max-lat", "39.91", "--min-lon", "116.3", "--max-lon", "116.313"]
N_VEHICLES = 20


def run_pipeline(out):
    common = GRID_ARGS + ["--output-dir", str(out), "-q"]
    commands = [
        ["synth", "--vehicles", str(N_VEHICLES), "--days", "0.05", "--interval", "30",
         "--max-pause", "120", "--seed", "1"],
        ["ingest", "--input", os.path.join(str(out), "trajectories.csv")],
        ["place", "--all-strategies", "--budget", "10"],
        ["game", "--strategy", "S1", "--game-strategies", "20", "--game-k", "2"],
        ["export", "--all-strategies", "--format", "geojson"],
        ["export", "--source", "traffic"],
    ]
    for command in commands:
        assert main(command[:1] + common + command[1:]) == EXIT_OK, command


@pytest.fixture(scope="module")
def pipeline(tmp_path_factory):
    out = tmp_path_factory.mktemp("pipeline")
    run_pipeline(out)
    return out


def _json(path):
    with open(path, "r", encoding="utf-8") as f:
        return json.load(f)


def test_pipeline_outputs(pipeline):
    expected = ["trajectories.csv", "model.svcm", "ingest_report.json", "comparison.csv",
                "game_S1.json", "game_table.csv", "heatmap_traffic.csv"]
    for strategy in ("S1", "S2", "S3", "S4", "S5"):
        expected += [f"placement_{strategy}.json", f"metrics_{strategy}.json",
                     f"vehicles_{strategy}.csv", f"heatmap_{strategy}.geojson"]
    for name in expected:
        assert (pipeline / name).exists(), name


def test_ingest_report(pipeline):
    report = _json(pipeline / "ingest_report.json")
    assert report["vehicles"] == N_VEHICLES
    assert report["records"] == N_VEHICLES * 144
    assert report["malformed"] == 0
    assert report["removed_speed"] == 0
    assert report["removed_total"] == report["removed_deviation"] <= 0.01 * report["records"]
    assert report["covered_vehicles"] == N_VEHICLES
    assert report["placeable_blocks"] == load_model(pipeline / "model.svcm").n_blocks


def test_metrics_match_recomputation(pipeline):
    model = load_model(pipeline / "model.svcm")
    for strategy in ("S1", "S3", "S5"):
        placement = Placement.from_dict(_json(pipeline / f"placement_{strategy}.json"))
        assert 1 <= len(placement.blocks) <= 10
        stored = _json(pipeline / f"metrics_{strategy}.json")
        report = metric_report(model, placement.blocks)
        assert stored["ucr"] == pytest.approx(report.ucr)
        assert stored["vcr"] == pytest.approx(report.vcr)
        assert stored["n_cameras"] == len(placement.blocks)
        vehicles = pd.read_csv(pipeline / f"vehicles_{strategy}.csv")
        assert len(vehicles) == N_VEHICLES
        assert np.array_equal(vehicles["vch"].to_numpy(), report.vehicles.vch)


def test_comparison_table(pipeline):
    comparison = pd.read_csv(pipeline / "comparison.csv")
    assert set(comparison["strategy"]) == {"S1", "S2", "S3", "S4", "S5"}
    for _, curve in comparison.groupby("strategy"):
        assert np.all(np.diff(curve["ucr"].to_numpy()) >= -1e-12)


def test_game_outputs(pipeline):
    report = _json(pipeline / "game_S1.json")
    assert set(report) == {"strategy", "solution", "baselines", "instance"}
    mixed = report["baselines"]["mixed"]["defender_utility"]
    assert mixed >= report["baselines"]["uniform"]["defender_utility"] - 1e-6
    assert mixed >= report["baselines"]["best"]["defender_utility"] - 1e-6
    assert sum(report["solution"]["a"].values()) == pytest.approx(1.0)
    table = pd.read_csv(pipeline / "game_table.csv")
    assert list(table["strategy"]) == ["S1"]
    assert table["n_strategies"].iloc[0] == 20
    assert table["mixed"].iloc[0] == pytest.approx(mixed)


def test_heatmaps(pipeline):
    placement = _json(pipeline / "placement_S2.json")
    collection = _json(pipeline / "heatmap_S2.geojson")
    assert len(collection["features"]) == len(placement["steps"])
    traffic = pd.read_csv(pipeline / "heatmap_traffic.csv")
    assert len(traffic) == load_model(pipeline / "model.svcm").n_blocks
    assert (traffic["value"] >= 0).all()


def test_metrics_prefix(pipeline):
    assert main(["metrics", "--output-dir", str(pipeline), "--strategy", "S4", "-n", "1", "-q"]) == EXIT_OK
    assert _json(pipeline / "metrics_S4.json")["n_cameras"] == 1


def test_single_strategy_game(pipeline, tmp_path):
    for name in ("model.svcm", "placement_S3.json"):
        shutil.copy(pipeline / name, tmp_path / name)
    args = ["--output-dir", str(tmp_path), "--strategy", "S3", "--game-strategies", "1", "-q"]
    assert main(["game"] + args) == EXIT_OK
    utilities = _json(tmp_path / "game_S3.json")["baselines"]
    mixed = utilities["mixed"]["defender_utility"]
    assert utilities["uniform"]["defender_utility"] == pytest.approx(mixed)
    assert utilities["best"]["defender_utility"] == pytest.approx(mixed)


def test_runs_are_reproducible(tmp_path):
    first, second = tmp_path / "first", tmp_path / "second"
    run_pipeline(first)
    run_pipeline(second)
    names = sorted(os.listdir(first))
    assert names == sorted(os.listdir(second))
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes(), name


def test_exit_codes(tmp_path):
    out = ["--output-dir", str(tmp_path), "-q"]
    assert main(["survey"]) == EXIT_USAGE
    assert main(["place", "--budget", "0"] + out) == EXIT_USAGE
    assert main(["place", "--strategy", "S9"] + out) == EXIT_USAGE
    assert main(["place", "--budget", "many"] + out) == EXIT_USAGE
    assert main(["ingest"] + out) == EXIT_USAGE
    assert main(["ingest", "--input", str(tmp_path / "missing.csv")] + out) == EXIT_DATA
    assert main(["place"] + out) == EXIT_DATA
    assert main(["game", "--game-file", str(tmp_path / "missing.json")] + out) == EXIT_DATA
    assert main(["place", "--config", str(tmp_path / "missing.cfg")] + out) == EXIT_USAGE


def test_empty_input(tmp_path):
    path = tmp_path / "empty.csv"
    path.write_text("vehicle_id,timestamp,latitude,longitude\n")
    out = GRID_ARGS + ["--output-dir", str(tmp_path), "-q"]
    assert main(["ingest", "--input", str(path)] + out) == EXIT_OK
    assert _json(tmp_path / "ingest_report.json")["covered_vehicles"] == 0
    assert main(["place", "--heatmap", "csv"] + out) == EXIT_OK
    assert _json(tmp_path / "placement_S1.json")["steps"] == []
    assert (tmp_path / "heatmap_S1.csv").read_text().strip() == "row,col,center_lat,center_lon,value"


def test_tdrive_input(tmp_path):
    path = tmp_path / "1.txt"
    path.write_text(
        "1,2008-02-02 15:36:08,116.3010,39.9010\n"
        "1,2008-02-02 15:37:08,116.3015,39.9012\n"
        "1,2008-02-02 15:38:08,116.3020,39.9014\n"
    )
    out = GRID_ARGS + ["--output-dir", str(tmp_path), "-q"]
    assert main(["ingest", "--tdrive", "--input", str(path)] + out) == EXIT_OK
    report = _json(tmp_path / "ingest_report.json")
    assert report["vehicles"] == 1 and report["records"] == 3
    assert report["measurement_span_s"] == 120.0


def test_config_file(tmp_path):
    config = tmp_path / "run.cfg"
    config.write_text(
        "min_lat = 39.9\nmax_lat = 39.905\nmin_lon = 116.3\nmax_lon = 116.306\n"
        "synth_vehicles = 5\nsynth_days = 0.02\nbudget = 3\nstrategy = s2\n"
    )
    out = ["--config", str(config), "--output-dir", str(tmp_path), "-q"]
    assert main(["synth"] + out) == EXIT_OK
    assert main(["ingest", "--input", str(tmp_path / "trajectories.csv")] + out) == EXIT_OK
    assert main(["place"] + out) == EXIT_OK
    placement = _json(tmp_path / "placement_S2.json")
    assert 1 <= len(placement["steps"]) <= 3


def test_game_file(tmp_path):
    path = tmp_path / "game.json"
    two_target_game().save(path)
    assert main(["game", "--game-file", str(path), "--output-dir", str(tmp_path), "-q"]) == EXIT_OK
    report = _json(tmp_path / "game_file.json")
    assert report["solution"]["defender_utility"] == pytest.approx(0.0, abs=1e-6)
    assert report["solution"]["x"] == pytest.approx([0.5, 0.5], abs=1e-6)


def test_corrupt_reports(pipeline, tmp_path):
    shutil.copy(pipeline / "model.svcm", tmp_path / "model.svcm")
    out = ["--output-dir", str(tmp_path), "-q"]
    for text in ("{not json", "{}", "[]", '{"payoffs": [], "strategies": [[7]]}'):
        path = tmp_path / "game.json"
        path.write_text(text)
        assert main(["game", "--game-file", str(path)] + out) == EXIT_DATA, text
    for text in ("{not json", '{"strategy": "S1"}', "[]", '{"strategy": "S1", "budget": 2, "steps": [{}]}'):
        (tmp_path / "placement_S1.json").write_text(text)
        assert main(["metrics", "--strategy", "S1"] + out) == EXIT_DATA, text
        assert main(["game", "--strategy", "S1"] + out) == EXIT_DATA, text
