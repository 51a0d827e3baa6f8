"""Camera placement and resolution-upgrade game on a synthetic taxi fleet.

Generates a seeded fleet on a square grid, cleans the trajectories, places
cameras with every strategy and reports coverage curves, the Gini
coefficient of camera hits and the defender utilities of the optimal mixed
strategy against the uniform and best-pure baselines.
"""

import numpy as np

import pandas as pd

from survcam.coverage_model import build_coverage
from survcam.geo_grid import grid_from_dims
from survcam.heatmap import placement_values, value_grid
from survcam.metrics import metric_curve, metric_report
from survcam.placement import StrategyId, greedy_place
from survcam.security_game import build_game, compare_strategies
from survcam.synth import SynthSpec, generate, to_trajectories
from survcam.trajectory_ingest import clean_and_segment


def create_city(
    n_vehicles=500,
    grid_size=200,
    n_days=7,
    sample_interval_s=300.0,
    cell_size_m=50.0,
    seed=0,
):
    grid = grid_from_dims(39.80, 116.25, grid_size, grid_size, cell_size_m)
    spec = SynthSpec(
        grid=grid,
        n_vehicles=n_vehicles,
        n_days=n_days,
        sample_interval_s=sample_interval_s,
        min_speed_mps=5.0,
        max_speed_mps=15.0,
        home_bias=0.7,
        home_radius_blocks=10,
        max_pause_s=1800.0,
        seed=seed,
    )
    trajectories = to_trajectories(generate(spec))
    visits, stats = clean_and_segment(trajectories, grid)
    return build_coverage(visits, grid=grid), stats


def _first_full_cover(curve):
    full = np.flatnonzero(curve["ucr"].to_numpy() >= 1.0 - 1e-12)
    return int(curve["n"].iloc[full[0]]) if full.size else None


def run(
    n_vehicles=500,
    grid_size=200,
    n_days=7,
    sample_interval_s=300.0,
    seed=0,
    budget=100,
    game_cameras=500,
    game_strategies=100,
    game_k=50,
    game_seed=0,
    display=True,
):
    model, stats = create_city(n_vehicles, grid_size, n_days, sample_interval_s, seed=seed)
    n_steps = min(max(budget, game_cameras), model.n_blocks)

    placements = {}
    curves = []
    saturation = {}
    gini_vch = {}
    for strategy in StrategyId:
        placement = greedy_place(model, strategy, n_steps, early_stop=False)
        placements[strategy.value] = placement
        curve = metric_curve(model, placement)
        curves.append(curve)
        saturation[strategy.value] = _first_full_cover(curve)
        gini_vch[strategy.value] = metric_report(model, placement.prefix(budget)).gini_vch
    curves = pd.concat(curves, ignore_index=True)

    rows = []
    if game_cameras > 0:
        for name, placement in placements.items():
            blocks = placement.prefix(game_cameras)
            game = build_game(model, blocks, game_strategies, min(game_k, len(blocks)), game_seed)
            solution, evaluations = compare_strategies(game)
            rows.append(
                {
                    "strategy": name,
                    "mixed": evaluations["mixed"].defender_utility,
                    "uniform": evaluations["uniform"].defender_utility,
                    "best": evaluations["best"].defender_utility,
                    "adversary": solution.adversary_utility,
                }
            )
    game_table = pd.DataFrame(rows, columns=["strategy", "mixed", "uniform", "best", "adversary"])

    if display:
        import matplotlib.pyplot as plt

        print(f"{model.n_vehicles} vehicles, {model.n_blocks} placeable blocks, {stats.removed_total} outliers")
        print("first full cover:", saturation)
        print("gini of VCH:", gini_vch)
        print(game_table)
        fig, axes = plt.subplots(1, 3, figsize=(15, 4))
        for name, curve in curves.groupby("strategy"):
            axes[0].plot(curve["n"], curve["ucr"], label=name)
            axes[1].plot(curve["n"], curve["vcr"], label=name)
        axes[0].set_ylabel("UCR")
        axes[1].set_ylabel("VCR")
        for ax in axes[:2]:
            ax.set_xlabel("cameras")
            ax.legend()
        first = placements[StrategyId.S1.value]
        axes[2].imshow(
            value_grid(model.grid, placement_values(first)), origin="lower", cmap="viridis_r"
        )
        axes[2].set_title("S1 placement rank")
        plt.show()

    return {
        "n_vehicles": model.n_vehicles,
        "n_placeable": model.n_blocks,
        "curves": curves,
        "saturation": saturation,
        "gini_vch": gini_vch,
        "game_table": game_table,
    }


if __name__ == "__main__":
    run()
