"""Tests of the block grid."""

import math

from hypothesis import given, settings
from hypothesis import strategies as st

import pytest

from survcam.errors import GridError, OutOfBoundsError
from survcam.geo_grid import BlockId, grid_from_bounds, grid_from_dims


def test_grid_dimensions():
    grid = grid_from_bounds(39.9, 40.0, 116.3, 116.4, 50)
    m_per_deg_lon = 111320.0 * math.cos(math.radians(39.95))
    assert grid.n_rows == math.ceil(0.1 * 111320.0 / 50)
    assert grid.n_cols == math.ceil((116.4 - 116.3) * m_per_deg_lon / 50)
    assert abs(grid.meters_per_deg_lon - m_per_deg_lon) < 1e-6


def test_city_scale_block_count():
    grid = grid_from_bounds(39.0, 41.0, 115.5, 117.5, 50)
    assert 1e7 < grid.n_blocks < 2e7


def test_single_block_grid():
    grid = grid_from_bounds(0.0, 0.0001, 0.0, 0.0001, 50)
    assert (grid.n_rows, grid.n_cols) == (1, 1)
    assert grid.locate(0.00005, 0.00005) == BlockId(0, 0)


@pytest.mark.parametrize(
    "bounds",
    [
        (40.0, 39.9, 116.3, 116.4, 50),
        (39.9, 40.0, 116.4, 116.3, 50),
        (39.9, 40.0, 116.3, 116.4, 0),
        (39.9, 40.0, 116.3, 116.4, -5),
        (39.9, float("nan"), 116.3, 116.4, 50),
        (-91.0, 40.0, 116.3, 116.4, 50),
        (-90.0, 90.0, -180.0, 180.0, 1e-9),
    ],
)
def test_invalid_grids(bounds):
    with pytest.raises(GridError):
        grid_from_bounds(*bounds)


def test_corners_and_clamping():
    grid = grid_from_bounds(39.9, 40.0, 116.3, 116.4, 50)
    assert grid.locate(grid.min_lat, grid.min_lon) == BlockId(0, 0)
    assert grid.locate(grid.max_lat, grid.max_lon) == BlockId(grid.n_rows - 1, grid.n_cols - 1)
    with pytest.raises(OutOfBoundsError):
        grid.locate(40.1, 116.35)
    with pytest.raises(OutOfBoundsError):
        grid.locate(39.95, 116.2)


def test_block_center_round_trip():
    grid = grid_from_bounds(39.9, 40.0, 116.3, 116.4, 50)
    lat, lon = grid.block_center(BlockId(3, 7))
    assert grid.locate(lat, lon) == BlockId(3, 7)


def test_linear_index():
    grid = grid_from_dims(10.0, 20.0, 4, 5, 100.0)
    assert (grid.n_rows, grid.n_cols) == (4, 5)
    assert grid.linear_index(BlockId(2, 3)) == 13
    assert grid.block_from_index(13) == BlockId(2, 3)
    with pytest.raises(GridError):
        grid.linear_index(BlockId(4, 0))
    with pytest.raises(GridError):
        grid.block_from_index(20)


def test_adjacent_blocks_share_an_edge():
    grid = grid_from_dims(39.9, 116.3, 2, 2, 50.0)
    left = grid.block_bounds(BlockId(0, 0))
    right = grid.block_bounds(BlockId(0, 1))
    assert left.max_lon == right.min_lon
    assert left.min_lat == right.min_lat and left.max_lat == right.max_lat
    assert left.min_lat == grid.min_lat and left.min_lon == grid.min_lon


def test_exact_cover():
    grid = grid_from_bounds(39.9, 39.91, 116.3, 116.3123, 50)
    total = sum(
        grid.area_m2(grid.block_bounds(BlockId(r, c)))
        for r in range(grid.n_rows)
        for c in range(grid.n_cols)
    )
    assert abs(total - grid.area_m2()) < 1e-9 * grid.area_m2()


def test_descriptor_round_trip():
    grid = grid_from_bounds(39.9, 40.0, 116.3, 116.4, 50)
    assert grid.from_dict(grid.to_dict()) == grid
    descriptor = dict(grid.to_dict(), n_rows=grid.n_rows + 1)
    with pytest.raises(GridError):
        grid.from_dict(descriptor)


GRID = grid_from_bounds(39.9, 39.93, 116.3, 116.34, 50)


@settings(max_examples=300, deadline=None)
@given(
    st.floats(min_value=GRID.min_lat, max_value=GRID.max_lat),
    st.floats(min_value=GRID.min_lon, max_value=GRID.max_lon),
)
def test_tiling(lat, lon):
    block = GRID.locate(lat, lon)
    bounds = GRID.block_bounds(block)
    assert bounds.min_lat - 1e-12 <= lat <= bounds.max_lat + 1e-12
    assert bounds.min_lon - 1e-12 <= lon <= bounds.max_lon + 1e-12
    rows, cols, inside = GRID.locate_many([lat], [lon])
    assert inside[0] and BlockId(rows[0], cols[0]) == block
