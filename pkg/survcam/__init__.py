# -*- coding: utf-8 -*-
"""survcam

Surveillance camera placement from vehicle GPS trajectories: grid binning,
trajectory cleaning, submodular greedy placement, coverage metrics and a
Stackelberg game for randomized camera resolution upgrades.
"""
__all__ = [
    "Grid",
    "BlockId",
    "grid_from_bounds",
    "grid_from_dims",
    "parse_records",
    "clean_and_segment",
    "CoverageModel",
    "build_coverage",
    "StrategyId",
    "greedy_place",
    "metric_report",
    "GameInstance",
    "solve_mixed_strategy",
    "solve_lp",
    "RunConfig",
]

from .config import RunConfig
from .coverage_model import CoverageModel, build_coverage
from .geo_grid import BlockId, Grid, grid_from_bounds, grid_from_dims
from .metrics import metric_report
from .placement import StrategyId, greedy_place
from .security_game import GameInstance, solve_mixed_strategy
from .simplex import solve_lp
from .trajectory_ingest import clean_and_segment, parse_records
