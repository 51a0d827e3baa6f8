"""Heatmap export of per-block values as CSV rows or GeoJSON polygons."""

import logging

import geojson

import numpy as np

import pandas as pd

from .errors import UsageError

logger = logging.getLogger(__name__)

HEATMAP_COLUMNS = ["row", "col", "center_lat", "center_lon", "value"]
FORMATS = ("csv", "geojson")


def placement_values(placement):
    """Selection rank (1 = first placed camera) per block."""
    return [(step.block, float(step.rank)) for step in placement.steps]


def traffic_values(model):
    """Total dwell seconds of all vehicles per placeable block."""
    traffic = model.block_traffic()
    return [(block, float(value)) for block, value in zip(model.blocks, traffic)]


def heatmap_frame(grid, values):
    records = []
    for block, value in sorted(values, key=lambda item: (item[0][0], item[0][1])):
        center_lat, center_lon = grid.block_center(block)
        records.append((int(block[0]), int(block[1]), center_lat, center_lon, value))
    return pd.DataFrame.from_records(records, columns=HEATMAP_COLUMNS)


def heatmap_features(grid, values):
    features = []
    for block, value in sorted(values, key=lambda item: (item[0][0], item[0][1])):
        bounds = grid.block_bounds(block)
        ring = [
            (bounds.min_lon, bounds.min_lat),
            (bounds.max_lon, bounds.min_lat),
            (bounds.max_lon, bounds.max_lat),
            (bounds.min_lon, bounds.max_lat),
            (bounds.min_lon, bounds.min_lat),
        ]
        features.append(
            geojson.Feature(
                geometry=geojson.Polygon([ring]),
                properties={"row": int(block[0]), "col": int(block[1]), "value": value},
            )
        )
    return geojson.FeatureCollection(features)


def export_heatmap(grid, values, path, fmt="csv"):
    if fmt not in FORMATS:
        raise UsageError(f"unknown heatmap format {fmt!r}, expected one of {FORMATS}")
    values = list(values)
    if fmt == "csv":
        heatmap_frame(grid, values).to_csv(path, index=False, float_format="%.7f")
    else:
        with open(path, "w", encoding="utf-8") as f:
            geojson.dump(heatmap_features(grid, values), f, sort_keys=True, indent=2)
            f.write("\n")
    logger.debug("wrote %d heatmap cells to %s", len(values), path)
    return path


def value_grid(grid, values):
    """Dense n_rows x n_cols array of the values, NaN where no value is given."""
    dense = np.full((grid.n_rows, grid.n_cols), np.nan)
    for block, value in values:
        dense[block[0], block[1]] = value
    return dense
