"""Tests of trajectory parsing, outlier removal and dwell segmentation."""

import io

from hypothesis import given, settings
from hypothesis import strategies as st

import numpy as np

import pytest

from survcam.errors import ParseError, UsageError
from survcam.geo_grid import BlockId, grid_from_dims
from survcam.synth import SynthSpec, generate, to_trajectories
from survcam.tools import from_local_meters
from survcam.trajectory_ingest import (
    Trajectory,
    clean_and_segment,
    filter_outliers,
    parse_records,
    segment_dwell,
)

HEADER = "vehicle_id,timestamp,latitude,longitude\n"
GRID = grid_from_dims(39.9, 116.3, 20, 20, 50.0)


def _trajectory(timestamps, east, north, vehicle_id="v"):
    lats, lons = from_local_meters(east, north, GRID.min_lat, GRID.min_lon)
    return Trajectory(vehicle_id, np.asarray(timestamps, dtype=float), lats, lons)


def test_parse_empty_file():
    trajectories, report = parse_records(io.StringIO(HEADER))
    assert trajectories == {}
    assert report.n_malformed == 0

    trajectories, report = parse_records(io.StringIO(""))
    assert trajectories == {}


def test_parse_sorts_records():
    text = HEADER + "a,120,39.9,116.3\na,0,39.91,116.31\na,60,39.92,116.32\n"
    trajectories, report = parse_records(io.StringIO(text))
    assert list(trajectories) == ["a"]
    assert list(trajectories["a"].timestamps) == [0.0, 60.0, 120.0]
    assert trajectories["a"].lats[0] == 39.91
    assert report.n_records == 3 and report.n_vehicles == 1


def test_parse_counts_malformed_lines():
    lines = [f"a,{60 * k},39.9{k},116.3{k}" for k in range(9)]
    lines.insert(4, "a,999,north,116.3")
    trajectories, report = parse_records(io.StringIO(HEADER + "\n".join(lines) + "\n"))
    assert report.n_lines == 10
    assert report.n_malformed == 1
    assert len(trajectories["a"]) == 9


def test_parse_rejects_wrong_files():
    with pytest.raises(ParseError):
        parse_records(io.StringIO("id,time,lat,lon\na,0,39.9,116.3\n"))
    garbage = HEADER + "x,y,z,w\n" * 3 + "a,0,39.9,116.3\n"
    with pytest.raises(ParseError):
        parse_records(io.StringIO(garbage))
    with pytest.raises(ParseError):
        parse_records("/nonexistent/trajectories.csv")


def test_parse_duplicates_and_conflicts():
    text = HEADER + "a,0,39.9,116.3\na,0,39.9,116.3\na,0,39.95,116.35\na,60,39.9,116.3\n"
    trajectories, report = parse_records(io.StringIO(text))
    assert report.n_duplicates == 1
    assert report.n_timestamp_conflicts == 1
    assert list(trajectories["a"].lats) == [39.9, 39.9]


def test_parse_datetime_and_tdrive_columns():
    text = HEADER + "a,2008-02-02 15:36:08,39.9,116.3\na,2008-02-02 15:37:08,39.9,116.3\n"
    trajectories, _ = parse_records(io.StringIO(text))
    assert list(np.diff(trajectories["a"].timestamps)) == [60.0]

    tdrive = "1,2008-02-02 15:36:08,116.51172,39.92123\n1,2008-02-02 15:46:08,116.51135,39.93883\n"
    trajectories, _ = parse_records(io.StringIO(tdrive), tdrive=True)
    assert trajectories["1"].lats[0] == 39.92123
    assert trajectories["1"].lons[0] == 116.51172


def test_constant_position_keeps_everything():
    traj = _trajectory(np.arange(20) * 60.0, np.full(20, 300.0), np.full(20, 300.0))
    clean, removed = filter_outliers(traj)
    assert removed.total == 0 and len(clean) == 20


def test_teleport_removed_by_speed_rule():
    east = np.arange(10) * 90.0
    north = np.zeros(10)
    east[5] += 50_000.0
    traj = _trajectory(np.arange(10) * 60.0, east, north)
    clean, removed = filter_outliers(traj, max_speed_mps=42)
    assert removed.speed == 1 and removed.deviation == 0
    assert 300.0 not in list(clean.timestamps)
    assert len(clean) == 9


def test_sideways_spike_removed_by_deviation_rule():
    # slow drive east with one reachable but transient jump north
    east = np.arange(12) * 90.0
    north = np.zeros(12)
    north[6] = 2000.0
    traj = _trajectory(np.arange(12) * 60.0, east, north)
    clean, removed = filter_outliers(traj, max_speed_mps=42, window_size=5, deviation_factor=5)
    assert removed == (0, 1)
    assert 360.0 not in list(clean.timestamps)
    assert len(clean) == 11
    assert filter_outliers(clean)[1].total == 0
    assert filter_outliers(traj, deviation_factor=20)[1].total == 0


def test_spread_floor_on_parked_windows():
    north = np.zeros(7)
    north[3] = 300.0
    traj = _trajectory(np.arange(7) * 60.0, np.zeros(7), north)
    clean, removed = filter_outliers(traj, min_spread_m=50.0)
    assert removed == (0, 1)
    assert 180.0 not in list(clean.timestamps)
    assert filter_outliers(traj, min_spread_m=100.0)[1].total == 0


def test_departure_from_parked_window_is_kept():
    east = np.array([0.0] * 5 + [450.0, 900.0, 1350.0, 1800.0, 2250.0])
    traj = _trajectory(np.arange(10) * 30.0, east, np.zeros(10))
    clean, removed = filter_outliers(traj)
    assert removed.total == 0 and clean is traj


def test_short_trajectories_skip_the_deviation_rule():
    traj = _trajectory([0.0, 60.0, 120.0, 180.0], [0.0, 0.0, 0.0, 0.0], [0.0, 2000.0, 0.0, 0.0])
    assert filter_outliers(traj, window_size=5)[1].total == 0
    assert filter_outliers(traj, window_size=3)[1] == (0, 1)


def test_filter_parameters():
    traj = _trajectory([0.0, 60.0], [0.0, 10.0], [0.0, 0.0])
    bad = (
        {"max_speed_mps": 0},
        {"window_size": 4},
        {"window_size": 1},
        {"deviation_factor": -1},
        {"min_spread_m": -1.0},
    )
    for kwargs in bad:
        with pytest.raises(UsageError):
            filter_outliers(traj, **kwargs)
    single = _trajectory([0.0], [0.0], [0.0])
    assert filter_outliers(single)[0] is single


def test_segment_examples():
    assert segment_dwell(_trajectory([0.0], [10.0], [10.0]), GRID) == []
    visits = segment_dwell(_trajectory([0.0, 60.0], [10.0, 20.0], [10.0, 10.0]), GRID)
    assert len(visits) == 1
    assert visits[0].block == BlockId(0, 0) and visits[0].dwell == 60.0

    traj = _trajectory([0.0, 60.0, 120.0], [10.0, 20.0, 60.0], [10.0, 10.0, 10.0])
    visits = segment_dwell(traj, GRID)
    assert [(v.block, v.enter_time, v.leave_time) for v in visits] == [(BlockId(0, 0), 0.0, 120.0)]


def test_segment_gaps_and_reentry():
    traj = _trajectory(
        [0.0, 60.0, 120.0, 1000.0, 1060.0, 1120.0],
        [10.0, 60.0, 10.0, 10.0, 10.0, 10.0],
        [10.0] * 6,
    )
    visits = segment_dwell(traj, GRID, max_gap_s=600)
    assert [(v.block, v.enter_time, v.leave_time) for v in visits] == [
        (BlockId(0, 0), 0.0, 60.0),
        (BlockId(0, 1), 60.0, 120.0),
        (BlockId(0, 0), 1000.0, 1120.0),
    ]
    assert sum(v.dwell for v in segment_dwell(traj, GRID, max_gap_s=10_000)) == 1120.0
    with pytest.raises(UsageError):
        segment_dwell(traj, GRID, max_gap_s=0)


def test_points_outside_grid_are_skipped():
    traj = _trajectory([0.0, 60.0, 120.0], [10.0, -500.0, 10.0], [10.0, 10.0, 10.0])
    visits = segment_dwell(traj, GRID)
    assert [(v.block, v.dwell) for v in visits] == [(BlockId(0, 0), 60.0)]


def _synthetic_trajectories(seed, n_vehicles=10):
    spec = SynthSpec(
        grid=GRID,
        n_vehicles=n_vehicles,
        n_days=1 / 24,
        sample_interval_s=30.0,
        max_pause_s=120.0,
        seed=seed,
    )
    return to_trajectories(generate(spec))


@settings(max_examples=100, deadline=None)
@given(st.integers(min_value=0, max_value=10_000))
def test_conservation_idempotence_and_teleports(seed):
    rng = np.random.default_rng(seed)
    traj = _synthetic_trajectories(seed, n_vehicles=1)["v0"]
    planted = int(rng.integers(1, len(traj) - 1))
    lats = traj.lats.copy()
    lats[planted] += 0.5
    dirty = Trajectory(traj.vehicle_id, traj.timestamps, lats, traj.lons)

    clean, removed = filter_outliers(dirty)
    assert removed.speed == 1
    assert dirty.timestamps[planted] not in set(clean.timestamps.tolist())
    again, removed_again = filter_outliers(clean)
    assert removed_again.total == 0 and len(again) == len(clean)

    visits = segment_dwell(clean, GRID, max_gap_s=600)
    kept = np.diff(clean.timestamps)
    assert abs(sum(v.dwell for v in visits) - kept[kept <= 600].sum()) < 1e-6
    assert sum(v.dwell for v in visits) <= clean.span + 1e-9
    shorter = segment_dwell(clean, GRID, max_gap_s=45)
    assert sum(v.dwell for v in shorter) <= sum(v.dwell for v in visits) + 1e-9


def test_clean_and_segment_statistics():
    trajectories = _synthetic_trajectories(7)
    visits, stats = clean_and_segment(trajectories, GRID)
    assert stats.n_vehicles == 10
    assert stats.n_points == sum(len(t) for t in trajectories.values())
    assert stats.removed_speed == 0
    assert stats.removed_deviation <= 0.01 * stats.n_points
    assert stats.n_visits == len(visits)
    for vehicle_id, traj in trajectories.items():
        clean, _ = filter_outliers(traj)
        kept = np.diff(clean.timestamps)
        dwell = sum(v.dwell for v in visits if v.vehicle_id == vehicle_id)
        assert abs(dwell - kept[kept <= 600].sum()) < 1e-6
