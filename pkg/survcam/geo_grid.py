"""Discretization of a latitude/longitude rectangle into square blocks.

Blocks are l x l meters under an equirectangular approximation whose scale is
fixed at the rectangle's mid-latitude. Cells are half-open [low, high) and
points on the maximal edges are clamped into the last row/column, so every
in-bounds point maps to exactly one block. Blocks are serialized row-major.
"""

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import GridError, OutOfBoundsError
from .tools import METERS_PER_DEG_LAT, meters_per_deg_lon

MAX_BLOCKS = np.iinfo(np.int64).max
# shrinks rectangles built from block counts so that ceil() gives back the counts
_DIMS_MARGIN = 1 - 1e-9


class BlockId(NamedTuple):
    row: int
    col: int

    def linear(self, n_cols):
        return self.row * n_cols + self.col


class BlockBounds(NamedTuple):
    min_lat: float
    max_lat: float
    min_lon: float
    max_lon: float

    @property
    def center(self):
        return 0.5 * (self.min_lat + self.max_lat), 0.5 * (self.min_lon + self.max_lon)


@dataclass(frozen=True)
class Grid:
    """Immutable rectangle of n_rows x n_cols blocks of cell_size_m meters."""

    min_lat: float
    max_lat: float
    min_lon: float
    max_lon: float
    cell_size_m: float
    n_rows: int
    n_cols: int
    meters_per_deg_lat: float
    meters_per_deg_lon: float

    @property
    def n_blocks(self):
        return self.n_rows * self.n_cols

    @property
    def cell_deg_lat(self):
        return self.cell_size_m / self.meters_per_deg_lat

    @property
    def cell_deg_lon(self):
        return self.cell_size_m / self.meters_per_deg_lon

    def contains_point(self, lat, lon):
        return self.min_lat <= lat <= self.max_lat and self.min_lon <= lon <= self.max_lon

    def check_block(self, block):
        if not (0 <= block[0] < self.n_rows and 0 <= block[1] < self.n_cols):
            raise GridError(
                f"block {tuple(block)} outside a {self.n_rows}x{self.n_cols} grid"
            )

    def linear_index(self, block):
        self.check_block(block)
        return int(block[0]) * self.n_cols + int(block[1])

    def block_from_index(self, index):
        if not 0 <= index < self.n_blocks:
            raise GridError(f"linear index {index} outside [0, {self.n_blocks})")
        row, col = divmod(int(index), self.n_cols)
        return BlockId(row, col)

    def locate(self, lat, lon):
        if not self.contains_point(lat, lon):
            raise OutOfBoundsError(f"point ({lat}, {lon}) outside the grid rectangle")
        rows, cols, _ = self.locate_many(np.array([lat]), np.array([lon]))
        return BlockId(int(rows[0]), int(cols[0]))

    def locate_many(self, lats, lons):
        """Vectorized locate; returns rows, cols and a mask of in-bounds points.

        Rows and columns of out-of-bounds points are set to -1.
        """
        lats = np.asarray(lats, dtype=float)
        lons = np.asarray(lons, dtype=float)
        inside = (
            (lats >= self.min_lat)
            & (lats <= self.max_lat)
            & (lons >= self.min_lon)
            & (lons <= self.max_lon)
        )
        with np.errstate(invalid="ignore"):
            rows = np.floor((lats - self.min_lat) / self.cell_deg_lat)
            cols = np.floor((lons - self.min_lon) / self.cell_deg_lon)
        rows = np.where(inside, np.clip(rows, 0, self.n_rows - 1), -1).astype(np.int64)
        cols = np.where(inside, np.clip(cols, 0, self.n_cols - 1), -1).astype(np.int64)
        return rows, cols, inside

    def block_bounds(self, block):
        self.check_block(block)
        row, col = int(block[0]), int(block[1])
        low_lat = self.min_lat + row * self.cell_deg_lat
        low_lon = self.min_lon + col * self.cell_deg_lon
        if row == self.n_rows - 1:
            high_lat = self.max_lat
        else:
            high_lat = self.min_lat + (row + 1) * self.cell_deg_lat
        if col == self.n_cols - 1:
            high_lon = self.max_lon
        else:
            high_lon = self.min_lon + (col + 1) * self.cell_deg_lon
        return BlockBounds(low_lat, high_lat, low_lon, high_lon)

    def block_center(self, block):
        return self.block_bounds(block).center

    def area_m2(self, bounds=None):
        """Area in the equirectangular metric of the grid or of given bounds."""
        if bounds is None:
            bounds = BlockBounds(self.min_lat, self.max_lat, self.min_lon, self.max_lon)
        return (
            (bounds.max_lat - bounds.min_lat)
            * self.meters_per_deg_lat
            * (bounds.max_lon - bounds.min_lon)
            * self.meters_per_deg_lon
        )

    def to_dict(self):
        return {
            "min_lat": self.min_lat,
            "max_lat": self.max_lat,
            "min_lon": self.min_lon,
            "max_lon": self.max_lon,
            "cell_size_m": self.cell_size_m,
            "n_rows": self.n_rows,
            "n_cols": self.n_cols,
        }

    @classmethod
    def from_dict(cls, descriptor):
        grid = grid_from_bounds(
            descriptor["min_lat"],
            descriptor["max_lat"],
            descriptor["min_lon"],
            descriptor["max_lon"],
            descriptor["cell_size_m"],
        )
        if (grid.n_rows, grid.n_cols) != (descriptor["n_rows"], descriptor["n_cols"]):
            raise GridError(
                f"grid descriptor says {descriptor['n_rows']}x{descriptor['n_cols']} blocks"
                f" but its bounds give {grid.n_rows}x{grid.n_cols}"
            )
        return grid


def grid_from_bounds(min_lat, max_lat, min_lon, max_lon, cell_size_m):
    values = (min_lat, max_lat, min_lon, max_lon, cell_size_m)
    if not all(math.isfinite(v) for v in values):
        raise GridError(f"non-finite grid parameters {values}")
    if not (min_lat < max_lat and min_lon < max_lon):
        raise GridError(
            f"inverted bounds lat [{min_lat}, {max_lat}] lon [{min_lon}, {max_lon}]"
        )
    if not (-90 <= min_lat and max_lat <= 90 and -180 <= min_lon and max_lon <= 180):
        raise GridError("bounds outside the valid latitude/longitude ranges")
    if cell_size_m <= 0:
        raise GridError(f"cell size must be positive, got {cell_size_m}")

    mid_lat = 0.5 * (min_lat + max_lat)
    m_per_deg_lat = METERS_PER_DEG_LAT
    m_per_deg_lon = float(meters_per_deg_lon(mid_lat))
    height_m = (max_lat - min_lat) * m_per_deg_lat
    width_m = (max_lon - min_lon) * m_per_deg_lon
    n_rows = max(1, math.ceil(height_m / cell_size_m))
    n_cols = max(1, math.ceil(width_m / cell_size_m))
    if n_rows * n_cols > MAX_BLOCKS:
        raise GridError(f"{n_rows}x{n_cols} blocks overflow a 64-bit block index")
    return Grid(
        min_lat=float(min_lat),
        max_lat=float(max_lat),
        min_lon=float(min_lon),
        max_lon=float(max_lon),
        cell_size_m=float(cell_size_m),
        n_rows=n_rows,
        n_cols=n_cols,
        meters_per_deg_lat=m_per_deg_lat,
        meters_per_deg_lon=m_per_deg_lon,
    )


def grid_from_dims(origin_lat, origin_lon, n_rows, n_cols, cell_size_m):
    """Build the rectangle anchored at (origin_lat, origin_lon) holding n_rows x n_cols blocks."""
    if n_rows < 1 or n_cols < 1:
        raise GridError(f"grid dimensions must be positive, got {n_rows}x{n_cols}")
    span_lat = n_rows * cell_size_m / METERS_PER_DEG_LAT * _DIMS_MARGIN
    mid_lat = origin_lat + 0.5 * span_lat
    span_lon = n_cols * cell_size_m / float(meters_per_deg_lon(mid_lat)) * _DIMS_MARGIN
    grid = grid_from_bounds(
        origin_lat, origin_lat + span_lat, origin_lon, origin_lon + span_lon, cell_size_m
    )
    assert (grid.n_rows, grid.n_cols) == (n_rows, n_cols)
    return grid
