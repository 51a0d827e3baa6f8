"""Placement and game results on seeded synthetic taxi fleets."""

import numpy as np

import pytest

from survcam.examples.synthetic_city import run


@pytest.fixture(scope="module")
def city():
    return run(display=False)


def test_saturation(city):
    curves = city["curves"]
    s1 = curves[curves["strategy"] == "S1"]
    ucr = s1["ucr"].to_numpy()
    assert np.all(np.diff(ucr) >= -1e-12)
    assert np.all(np.diff(ucr, 2) <= 1e-12)

    saturation = city["saturation"]
    assert saturation["S1"] is not None
    assert saturation["S1"] < city["n_placeable"]
    assert saturation["S2"] is None or saturation["S2"] >= saturation["S1"]


def test_game_dominance(city):
    table = city["game_table"]
    assert list(table["strategy"]) == ["S1", "S2", "S3", "S4", "S5"]
    for row in table.itertuples():
        assert row.mixed >= row.uniform - 1e-6
        assert row.mixed >= row.best - 1e-6
        assert -1.0 <= row.mixed <= 1.0
        assert abs(row.mixed + row.adversary) < 1e-9


def test_fairness_strategies_spread_hits():
    seeds = range(5)
    wins = {strategy: 0 for strategy in ("S3", "S4", "S5")}
    for seed in seeds:
        gini_vch = run(
            n_vehicles=200,
            grid_size=100,
            n_days=2,
            seed=seed,
            budget=100,
            game_cameras=0,
            display=False,
        )["gini_vch"]
        for strategy in wins:
            wins[strategy] += gini_vch["S2"] >= gini_vch[strategy]
    for strategy, count in wins.items():
        assert count > len(seeds) / 2, strategy
