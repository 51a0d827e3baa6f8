"""Tests of the run configuration."""

import pytest

from survcam.config import RunConfig, load_config, parse_config
from survcam.errors import UsageError


def test_defaults_are_valid():
    config = RunConfig().validate()
    assert config.cell_size_m == 50.0
    assert config.max_speed_mps == 42.0
    assert config.window_size == 5
    assert config.budget == 100
    assert config.strategy == "S1"


def test_parse_config():
    text = """
    # Beijing core
    min_lat = 39.9
    cell_size_m = 100   # coarser blocks
    strategy = s3
    tdrive = yes
    weights_path = none
    """
    config = parse_config(text).validate()
    assert config.min_lat == 39.9
    assert config.cell_size_m == 100.0
    assert config.strategy == "S3"
    assert config.tdrive is True
    assert config.weights_path is None
    assert config.max_lat == RunConfig().max_lat


def test_parse_errors():
    with pytest.raises(UsageError):
        parse_config("camera_count = 5")
    with pytest.raises(UsageError):
        parse_config("budget = many")
    with pytest.raises(UsageError):
        parse_config("tdrive = perhaps")
    with pytest.raises(UsageError):
        parse_config("budget 5")


@pytest.mark.parametrize(
    "overrides",
    [
        {"budget": 0},
        {"cell_size_m": -1.0},
        {"window_size": 4},
        {"window_size": 1},
        {"min_spread_m": -1.0},
        {"strategy": "S9"},
        {"payoff_mode": "cooperative"},
        {"game_k": -1},
        {"synth_max_speed_mps": 1.0},
        {"synth_home_bias": 1.5},
    ],
)
def test_validate(overrides):
    with pytest.raises(UsageError):
        RunConfig().updated(**overrides).validate()


def test_updated():
    config = RunConfig().updated(budget=7, strategy=None)
    assert config.budget == 7 and config.strategy == "S1"
    with pytest.raises(UsageError):
        RunConfig().updated(cameras=3)


def test_game_k():
    assert RunConfig().game_k_for(500) == 50
    assert RunConfig().game_k_for(5) == 1
    assert RunConfig().game_k_for(11) == 2
    assert RunConfig(game_k=7).game_k_for(5) == 5
    assert RunConfig(game_strategies=1).game_k_for(30) == 30
    assert RunConfig(game_strategies=4).game_k_for(30) == 8


def test_load_config(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("budget = 12\n")
    assert load_config(path).budget == 12
    assert load_config(path, base=RunConfig(seed=3)).seed == 3
    with pytest.raises(UsageError):
        load_config(tmp_path / "missing.cfg")
