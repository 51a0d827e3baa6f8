"""Hand-checkable instances: a three-vehicle coverage model and small games."""

import numpy as np

from survcam.coverage_model import build_coverage
from survcam.geo_grid import BlockId, grid_from_dims
from survcam.metrics import metric_report
from survcam.placement import StrategyId, exhaustive_place, greedy_place
from survcam.security_game import (
    GameInstance,
    evaluate_defender,
    solve_mixed_strategy,
    uniform_strategy,
    zero_sum_payoffs,
)
from survcam.trajectory_ingest import BlockVisit

B1, B2, B3 = BlockId(0, 0), BlockId(0, 1), BlockId(0, 2)


def toy_grid():
    return grid_from_dims(39.9, 116.3, 1, 3, 50.0)


def toy_model(measurement_span=100.0, weights=None):
    """Vehicle A crosses b1 and b2, B crosses b2, C crosses b3; one hit each."""
    visits = [
        BlockVisit("A", B1, 0.0, 10.0),
        BlockVisit("A", B2, 10.0, 20.0),
        BlockVisit("B", B2, 0.0, 10.0),
        BlockVisit("C", B3, 0.0, 10.0),
    ]
    return build_coverage(visits, measurement_span, weights, grid=toy_grid())


def identity_game(importance):
    importance = np.asarray(importance, dtype=np.float64)
    n = len(importance)
    return GameInstance(np.eye(n, dtype=np.int8), zero_sum_payoffs(importance), importance)


def two_target_game():
    return identity_game([1.0, 0.5])


def three_target_game():
    return identity_game([1.0, 1.0, 1.0])


def run(display=True):
    model = toy_model()
    results = {}
    for strategy in StrategyId:
        placement = greedy_place(model, strategy, 3)
        optimum, _ = exhaustive_place(model, strategy, 3)
        report = metric_report(model, placement.blocks)
        results[strategy.value] = (placement.blocks, placement.value, optimum, report.ucr)
        if display:
            print(
                f"{strategy.value}: blocks {[tuple(b) for b in placement.blocks]}"
                f" F = {placement.value:.4f} (optimum {optimum:.4f}) UCR = {report.ucr:.3f}"
            )
    for name, game in (("two targets", two_target_game()), ("three targets", three_target_game())):
        solution = solve_mixed_strategy(game)
        uniform = evaluate_defender(game, uniform_strategy(game))
        results[name] = (solution.defender_utility, uniform.defender_utility)
        if display:
            print(
                f"{name}: x = {np.round(solution.mixed.marginals, 4)}"
                f" U_d = {solution.defender_utility:.4f} (uniform {uniform.defender_utility:.4f})"
            )
    return results


if __name__ == "__main__":
    run()
