"""Command line front end: synth, ingest, place, metrics, game and export.

Exit codes are 0 on success, 1 for usage errors, 2 for data errors and 3
for solver errors. Every report is written under the output directory.
"""

import argparse
import json
import logging
import os
import sys

import pandas as pd

from . import heatmap
from .config import RunConfig, load_config
from .coverage_model import build_coverage, read_weights
from .errors import DataError, SolverError, UsageError
from .geo_grid import grid_from_bounds
from .metrics import metric_curve, metric_report
from .model_io import load_model, save_model
from .placement import Placement, StrategyId, greedy_place
from .security_game import METHODS, GameInstance, build_game, compare_strategies
from .synth import SynthSpec, generate, write_csv
from .trajectory_ingest import clean_and_segment, parse_records

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_SOLVER = 3

MODEL_FILE = "model.svcm"
TRAJECTORY_FILE = "trajectories.csv"
GAME_TABLE_COLUMNS = ["strategy", "n_targets", "n_strategies", "k", "mixed", "uniform", "best"]


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _write_json(path, report):
    with open(path, "w", encoding="utf-8") as f:
        json.dump(report, f, sort_keys=True, indent=2)
        f.write("\n")
    logger.debug("wrote %s", path)


def _read_json(path, what):
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, ValueError) as error:
        raise DataError(f"cannot read {what} {path}: {error}") from error


def _output(config, name):
    os.makedirs(config.output_dir, exist_ok=True)
    return os.path.join(config.output_dir, name)


def _grid(config):
    return grid_from_bounds(
        config.min_lat, config.max_lat, config.min_lon, config.max_lon, config.cell_size_m
    )


def _strategies(args, config):
    if getattr(args, "all_strategies", False):
        return list(StrategyId)
    return [StrategyId.parse(config.strategy)]


def _load_model(config):
    model = load_model(_output(config, MODEL_FILE))
    if config.weights_path:
        weights = read_weights(config.weights_path)
        model = model.with_weights([weights.get(v, 1.0) for v in model.vehicle_ids])
    return model


def _load_placement(config, strategy):
    path = _output(config, f"placement_{strategy.value}.json")
    return Placement.from_dict(_read_json(path, "placement report"))


def cmd_synth(args, config):
    spec = SynthSpec(
        grid=_grid(config),
        n_vehicles=config.synth_vehicles,
        n_days=config.synth_days,
        sample_interval_s=config.synth_interval_s,
        min_speed_mps=config.synth_min_speed_mps,
        max_speed_mps=config.synth_max_speed_mps,
        home_bias=config.synth_home_bias,
        home_radius_blocks=config.synth_home_radius_blocks,
        max_pause_s=config.synth_max_pause_s,
        seed=config.seed,
    )
    path = args.output or _output(config, TRAJECTORY_FILE)
    write_csv(generate(spec), path)
    logger.info("synthetic trajectories written to %s", path)


def cmd_ingest(args, config):
    if not config.input_path:
        raise UsageError("ingest needs an input CSV (--input)")
    grid = _grid(config)
    trajectories, parsed = parse_records(config.input_path, tdrive=config.tdrive)
    visits, stats = clean_and_segment(
        trajectories,
        grid,
        max_speed_mps=config.max_speed_mps,
        window_size=config.window_size,
        deviation_factor=config.deviation_factor,
        min_spread_m=config.min_spread_m,
        max_gap_s=config.max_gap_s,
    )
    model = build_coverage(visits, grid=grid)
    if model.n_vehicles == 0:
        logger.warning("no block visits in %s, the coverage model is empty", config.input_path)
    save_model(model, _output(config, MODEL_FILE))
    report = {
        "lines": parsed.n_lines,
        "records": parsed.n_records,
        "malformed": parsed.n_malformed,
        "duplicates": parsed.n_duplicates,
        "timestamp_conflicts": parsed.n_timestamp_conflicts,
        "vehicles": parsed.n_vehicles,
        "removed_speed": stats.removed_speed,
        "removed_deviation": stats.removed_deviation,
        "removed_total": stats.removed_total,
        "visits": stats.n_visits,
        "covered_vehicles": model.n_vehicles,
        "placeable_blocks": model.n_blocks,
        "measurement_span_s": model.measurement_span,
        "grid": grid.to_dict(),
    }
    _write_json(_output(config, "ingest_report.json"), report)
    logger.info("ingest report %s", json.dumps(report, sort_keys=True))


def _write_metrics(config, model, placement, n=None):
    blocks = placement.blocks if n is None else placement.prefix(n)
    report = metric_report(model, blocks)
    name = placement.strategy.value
    _write_json(_output(config, f"metrics_{name}.json"), dict(report.to_dict(), strategy=name))
    report.vehicles.to_frame().to_csv(_output(config, f"vehicles_{name}.csv"), index=False)
    return report


def cmd_place(args, config):
    model = _load_model(config)
    curves = []
    for strategy in _strategies(args, config):
        placement = greedy_place(model, strategy, config.budget, early_stop=not args.no_early_stop)
        _write_json(_output(config, f"placement_{strategy.value}.json"), placement.to_dict())
        if args.heatmap:
            grid = model.grid if model.grid is not None else _grid(config)
            heatmap.export_heatmap(
                grid,
                heatmap.placement_values(placement),
                _output(config, f"heatmap_{strategy.value}.{args.heatmap}"),
                args.heatmap,
            )
        if model.n_vehicles:
            _write_metrics(config, model, placement)
            if args.all_strategies:
                curves.append(metric_curve(model, placement))
    if curves:
        comparison = pd.concat(curves, ignore_index=True)
        comparison.to_csv(_output(config, "comparison.csv"), index=False, float_format="%.10g")


def cmd_metrics(args, config):
    model = _load_model(config)
    for strategy in _strategies(args, config):
        placement = _load_placement(config, strategy)
        report = _write_metrics(config, model, placement, args.n)
        logger.info(
            "metrics %s",
            json.dumps({"strategy": strategy.value, "ucr": report.ucr, "vcr": report.vcr}, sort_keys=True),
        )


def cmd_game(args, config):
    rows = []
    if args.game_file:
        games = [("file", GameInstance.from_dict(_read_json(args.game_file, "game file")))]
    else:
        model = _load_model(config)
        games = []
        for strategy in _strategies(args, config):
            blocks = _load_placement(config, strategy).blocks
            if not blocks:
                raise DataError(f"placement {strategy.value} selected no camera")
            game = build_game(
                model,
                blocks,
                config.game_strategies,
                config.game_k_for(len(blocks)),
                config.game_seed,
                config.payoff_mode,
            )
            games.append((strategy.value, game))
    for name, game in games:
        solution, evaluations = compare_strategies(game, args.method)
        k = int(game.coverage.sum(axis=1).max())
        report = {
            "strategy": name,
            "solution": solution.to_dict(),
            "baselines": {key: e._asdict() for key, e in evaluations.items()},
            "instance": game.to_dict(),
        }
        _write_json(_output(config, f"game_{name}.json"), report)
        rows.append(
            [name, game.n_targets, game.n_strategies, k]
            + [evaluations[key].defender_utility for key in ("mixed", "uniform", "best")]
        )
    table = pd.DataFrame(rows, columns=GAME_TABLE_COLUMNS)
    table.to_csv(_output(config, "game_table.csv"), index=False, float_format="%.10g")


def cmd_export(args, config):
    model = _load_model(config)
    grid = model.grid if model.grid is not None else _grid(config)
    if args.source == "traffic":
        sources = [("traffic", heatmap.traffic_values(model))]
    else:
        sources = [
            (strategy.value, heatmap.placement_values(_load_placement(config, strategy)))
            for strategy in _strategies(args, config)
        ]
    for name, values in sources:
        heatmap.export_heatmap(grid, values, _output(config, f"heatmap_{name}.{args.format}"), args.format)


def _add_common(parser):
    parser.add_argument("--config", help="key = value configuration file")
    parser.add_argument("--output-dir", dest="output_dir")
    parser.add_argument("--min-lat", dest="min_lat", type=float)
    parser.add_argument("--max-lat", dest="max_lat", type=float)
    parser.add_argument("--min-lon", dest="min_lon", type=float)
    parser.add_argument("--max-lon", dest="max_lon", type=float)
    parser.add_argument("--cell-size", dest="cell_size_m", type=float)
    parser.add_argument("--weights", dest="weights_path")
    parser.add_argument("--seed", type=int)
    parser.add_argument("-v", "--verbose", action="store_true")
    parser.add_argument("-q", "--quiet", action="store_true")


def _add_strategy(parser):
    parser.add_argument("--strategy")
    parser.add_argument("--all-strategies", action="store_true")


def build_parser():
    parser = _Parser(prog="survcam", description="Surveillance camera placement toolkit.")
    commands = parser.add_subparsers(dest="command", parser_class=_Parser)
    commands.required = True

    synth = commands.add_parser("synth", help="generate synthetic trajectories")
    _add_common(synth)
    synth.add_argument("--vehicles", dest="synth_vehicles", type=int)
    synth.add_argument("--days", dest="synth_days", type=float)
    synth.add_argument("--interval", dest="synth_interval_s", type=float)
    synth.add_argument("--min-speed", dest="synth_min_speed_mps", type=float)
    synth.add_argument("--max-speed", dest="synth_max_speed_mps", type=float)
    synth.add_argument("--home-bias", dest="synth_home_bias", type=float)
    synth.add_argument("--max-pause", dest="synth_max_pause_s", type=float)
    synth.add_argument("--output", help="CSV path, defaults to trajectories.csv in the output dir")
    synth.set_defaults(handler=cmd_synth)

    ingest = commands.add_parser("ingest", help="build the coverage model from a trajectory CSV")
    _add_common(ingest)
    ingest.add_argument("--input", dest="input_path")
    ingest.add_argument("--tdrive", action="store_true", default=None)
    ingest.add_argument("--max-speed", dest="max_speed_mps", type=float)
    ingest.add_argument("--window-size", dest="window_size", type=int)
    ingest.add_argument("--deviation-factor", dest="deviation_factor", type=float)
    ingest.add_argument("--min-spread", dest="min_spread_m", type=float)
    ingest.add_argument("--max-gap", dest="max_gap_s", type=float)
    ingest.set_defaults(handler=cmd_ingest)

    place = commands.add_parser("place", help="greedy camera placement")
    _add_common(place)
    _add_strategy(place)
    place.add_argument("--budget", "-n", dest="budget", type=int)
    place.add_argument("--no-early-stop", action="store_true")
    place.add_argument("--heatmap", choices=heatmap.FORMATS, help="also export the placement heatmap")
    place.set_defaults(handler=cmd_place)

    metrics = commands.add_parser("metrics", help="metrics of a stored placement")
    _add_common(metrics)
    _add_strategy(metrics)
    metrics.add_argument("-n", type=int, help="evaluate only the first n cameras")
    metrics.set_defaults(handler=cmd_metrics)

    game = commands.add_parser("game", help="solve the resolution-upgrading security game")
    _add_common(game)
    _add_strategy(game)
    game.add_argument("--game-strategies", dest="game_strategies", type=int)
    game.add_argument("--game-k", dest="game_k", type=int)
    game.add_argument("--game-seed", dest="game_seed", type=int)
    game.add_argument("--payoff-mode", dest="payoff_mode")
    game.add_argument("--method", choices=METHODS, default="auto")
    game.add_argument("--game-file", help="solve a stored game instance instead")
    game.set_defaults(handler=cmd_game)

    export = commands.add_parser("export", help="heatmap of a placement or of block traffic")
    _add_common(export)
    _add_strategy(export)
    export.add_argument("--source", choices=("placement", "traffic"), default="placement")
    export.add_argument("--format", choices=heatmap.FORMATS, default="csv")
    export.set_defaults(handler=cmd_export)
    return parser


_CONFIG_ARGS = {f for f in RunConfig.__dataclass_fields__}


def _config_from_args(args):
    config = load_config(args.config) if args.config else RunConfig()
    overrides = {k: v for k, v in vars(args).items() if k in _CONFIG_ARGS}
    return config.updated(**overrides).validate()


def _setup_logging(args):
    level = logging.INFO
    if getattr(args, "verbose", False):
        level = logging.DEBUG
    elif getattr(args, "quiet", False):
        level = logging.WARNING
    logging.basicConfig(format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    logging.getLogger().setLevel(level)


def main(argv=None):
    try:
        args = build_parser().parse_args(argv)
        _setup_logging(args)
        config = _config_from_args(args)
        args.handler(args, config)
    except UsageError as error:
        logger.error("usage error: %s", error)
        return EXIT_USAGE
    except DataError as error:
        logger.error("data error: %s", error)
        return EXIT_DATA
    except SolverError as error:
        logger.error("solver error: %s", error)
        return EXIT_SOLVER
    except OSError as error:
        logger.error("i/o error: %s", error)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
