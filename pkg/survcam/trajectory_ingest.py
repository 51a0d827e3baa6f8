"""Parsing of vehicle GPS records, outlier removal and conversion into timed block visits."""

import json
import logging
from dataclasses import asdict, dataclass
from typing import NamedTuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

import pandas as pd

from .errors import ParseError, UsageError
from .geo_grid import BlockId
from .tools import to_local_meters

logger = logging.getLogger(__name__)

COLUMNS = ["vehicle_id", "timestamp", "latitude", "longitude"]
# public T-Drive files have no header and put longitude before latitude
TDRIVE_COLUMNS = ["vehicle_id", "timestamp", "longitude", "latitude"]
TIMESTAMP_FORMAT = "%Y-%m-%d %H:%M:%S"
MAX_MALFORMED_RATIO = 0.5

DEFAULT_MAX_SPEED_MPS = 42.0
DEFAULT_WINDOW_SIZE = 5
DEFAULT_DEVIATION_FACTOR = 5.0
# one block at the default cell size
DEFAULT_MIN_SPREAD_M = 50.0
DEFAULT_MAX_GAP_S = 600.0

_EPOCH = pd.Timestamp("1970-01-01", tz="UTC")


class BlockVisit(NamedTuple):
    vehicle_id: str
    block: BlockId
    enter_time: float
    leave_time: float

    @property
    def dwell(self):
        return self.leave_time - self.enter_time


class RemovalCounts(NamedTuple):
    speed: int
    deviation: int

    @property
    def total(self):
        return self.speed + self.deviation


@dataclass(frozen=True, eq=False)
class Trajectory:
    """Time-sorted positions of one vehicle, stored as parallel arrays."""

    vehicle_id: str
    timestamps: np.ndarray
    lats: np.ndarray
    lons: np.ndarray

    def __len__(self):
        return len(self.timestamps)

    @property
    def span(self):
        if len(self) < 2:
            return 0.0
        return float(self.timestamps[-1] - self.timestamps[0])

    def subset(self, indices):
        return Trajectory(
            self.vehicle_id,
            self.timestamps[indices],
            self.lats[indices],
            self.lons[indices],
        )


@dataclass
class ParseReport:
    n_lines: int = 0
    n_records: int = 0
    n_malformed: int = 0
    n_duplicates: int = 0
    n_timestamp_conflicts: int = 0
    n_vehicles: int = 0


def _epoch_seconds(values):
    seconds = pd.to_numeric(values, errors="coerce")
    as_text = seconds.isna()
    if as_text.any():
        parsed = pd.to_datetime(
            values[as_text], format=TIMESTAMP_FORMAT, errors="coerce", utc=True
        )
        seconds = seconds.astype(float)
        seconds[as_text] = (parsed - _EPOCH).dt.total_seconds()
    return seconds.astype(float)


def parse_records(source, tdrive=False):
    """Read a trajectory CSV into per-vehicle trajectories.

    `source` is a path or a text/binary stream. Malformed lines are counted
    rather than fatal unless they make up more than half of the file.
    Returns a dict vehicle_id -> Trajectory (sorted by id) and a ParseReport.
    """
    bad_lines = []

    def on_bad_line(fields):
        bad_lines.append(fields)
        return None

    try:
        frame = pd.read_csv(
            source,
            dtype=str,
            keep_default_na=False,
            header=None if tdrive else 0,
            names=TDRIVE_COLUMNS if tdrive else None,
            engine="python",
            on_bad_lines=on_bad_line,
            skipinitialspace=True,
            encoding="utf-8",
        )
    except pd.errors.EmptyDataError:
        frame = pd.DataFrame({name: pd.Series(dtype=str) for name in COLUMNS})
    except (OSError, UnicodeDecodeError, pd.errors.ParserError) as error:
        raise ParseError(f"cannot read trajectory records: {error}") from error

    if not tdrive and list(frame.columns) != COLUMNS:
        raise ParseError(f"header {list(frame.columns)} does not match {COLUMNS}")

    vehicle_ids = frame["vehicle_id"].fillna("").astype(str).str.strip()
    timestamps = _epoch_seconds(frame["timestamp"].fillna(""))
    lats = pd.to_numeric(frame["latitude"], errors="coerce").astype(float)
    lons = pd.to_numeric(frame["longitude"], errors="coerce").astype(float)
    valid = (
        (vehicle_ids != "")
        & np.isfinite(timestamps)
        & lats.between(-90, 90)
        & lons.between(-180, 180)
    )

    report = ParseReport()
    report.n_lines = len(frame) + len(bad_lines)
    report.n_malformed = len(bad_lines) + int((~valid).sum())
    if report.n_lines and report.n_malformed > MAX_MALFORMED_RATIO * report.n_lines:
        raise ParseError(
            f"{report.n_malformed} of {report.n_lines} lines are malformed,"
            " this does not look like a trajectory file"
        )

    records = pd.DataFrame(
        {
            "vehicle_id": vehicle_ids[valid],
            "timestamp": timestamps[valid],
            "lat": lats[valid],
            "lon": lons[valid],
        }
    )
    records["order"] = np.arange(len(records))
    n_valid = len(records)
    records = records.drop_duplicates(subset=["vehicle_id", "timestamp", "lat", "lon"])
    report.n_duplicates = n_valid - len(records)
    records = records.sort_values(["vehicle_id", "timestamp", "order"])
    conflicts = records.duplicated(subset=["vehicle_id", "timestamp"], keep="first")
    report.n_timestamp_conflicts = int(conflicts.sum())
    records = records[~conflicts]

    trajectories = {}
    for vehicle_id, group in records.groupby("vehicle_id", sort=True):
        trajectories[vehicle_id] = Trajectory(
            vehicle_id,
            group["timestamp"].to_numpy(dtype=float),
            group["lat"].to_numpy(dtype=float),
            group["lon"].to_numpy(dtype=float),
        )
    report.n_records = len(records)
    report.n_vehicles = len(trajectories)
    logger.info("parse report %s", json.dumps(asdict(report), sort_keys=True))
    return trajectories, report


def _speed_pass(east, north, timestamps, max_speed_mps):
    steps = np.hypot(np.diff(east), np.diff(north))
    if np.all(steps <= max_speed_mps * np.diff(timestamps)):
        return np.arange(len(timestamps))
    kept = [0]
    for k in range(1, len(timestamps)):
        last = kept[-1]
        step = np.hypot(east[k] - east[last], north[k] - north[last])
        if step <= max_speed_mps * (timestamps[k] - timestamps[last]):
            kept.append(k)
    return np.array(kept)


def _deviation_outliers(points, half, deviation_factor, min_spread_m):
    """Mask of the points of an (n, 2) array that leave their surrounding window."""
    outliers = np.zeros(len(points), dtype=bool)
    if len(points) < 2 * half + 1:
        return outliers
    # windows[i] holds points i .. i + 2 * half as columns, the candidate in the middle
    windows = sliding_window_view(points, 2 * half + 1, axis=0)
    neighbours = np.delete(windows, half, axis=2)
    centroids = neighbours.mean(axis=2)
    offsets = neighbours - centroids[:, :, None]
    spread = np.median(np.hypot(offsets[:, 0], offsets[:, 1]), axis=1)
    candidates = points[half : len(points) - half]
    distance = np.hypot(*(candidates - centroids).T)
    threshold = deviation_factor * np.maximum(spread, min_spread_m)
    outliers[half : len(points) - half] = distance > threshold
    return outliers


def filter_outliers(
    traj,
    max_speed_mps=DEFAULT_MAX_SPEED_MPS,
    window_size=DEFAULT_WINDOW_SIZE,
    deviation_factor=DEFAULT_DEVIATION_FACTOR,
    min_spread_m=DEFAULT_MIN_SPREAD_M,
):
    """Remove impossible-speed points and points that leave the moving average.

    The speed rule runs first, in time order: a point is dropped when its
    speed from the previous kept point exceeds max_speed_mps. The deviation
    rule then compares every point with the window_size - 1 points around
    it, half before and half after. The point is dropped when its distance to
    the centroid of those neighbours exceeds deviation_factor times their
    median distance to that centroid, the median being at least
    min_spread_m. Points without a full window on both sides are kept.
    The deviation rule is reapplied to the survivors until it removes
    nothing, so filtering a clean trajectory again keeps everything.
    The first point is always kept.
    """
    if max_speed_mps <= 0:
        raise UsageError(f"max_speed_mps must be positive, got {max_speed_mps}")
    if window_size < 3 or window_size % 2 == 0:
        raise UsageError(f"window_size must be odd and >= 3, got {window_size}")
    if deviation_factor <= 0:
        raise UsageError(f"deviation_factor must be positive, got {deviation_factor}")
    if min_spread_m < 0:
        raise UsageError(f"min_spread_m must be non-negative, got {min_spread_m}")
    if len(traj) <= 1:
        return traj, RemovalCounts(0, 0)

    east, north = to_local_meters(traj.lats, traj.lons, traj.lats[0], traj.lons[0])
    kept = _speed_pass(east, north, traj.timestamps, max_speed_mps)
    removed_speed = len(traj) - len(kept)

    points = np.column_stack([east, north])
    while True:
        outliers = _deviation_outliers(
            points[kept], window_size // 2, deviation_factor, min_spread_m
        )
        if not outliers.any():
            break
        kept = kept[~outliers]

    counts = RemovalCounts(removed_speed, len(traj) - removed_speed - len(kept))
    if counts.total == 0:
        return traj, counts
    return traj.subset(kept), counts


def segment_dwell(traj, grid, max_gap_s=DEFAULT_MAX_GAP_S):
    """Turn a cleaned trajectory into block visits.

    Each interval between consecutive samples that is no longer than
    max_gap_s is attributed to the block of its first sample; contiguous
    intervals in the same block merge into one visit. Samples outside the
    grid contribute no interval.
    """
    if max_gap_s <= 0:
        raise UsageError(f"max_gap_s must be positive, got {max_gap_s}")
    if len(traj) < 2:
        return []
    rows, cols, inside = grid.locate_many(traj.lats, traj.lons)
    starts = traj.timestamps[:-1]
    ends = traj.timestamps[1:]
    kept = np.flatnonzero(((ends - starts) <= max_gap_s) & inside[:-1])
    if len(kept) == 0:
        return []
    starts = starts[kept]
    ends = ends[kept]
    blocks = rows[kept] * grid.n_cols + cols[kept]
    new_visit = np.ones(len(kept), dtype=bool)
    new_visit[1:] = (blocks[1:] != blocks[:-1]) | (starts[1:] != ends[:-1])
    first = np.flatnonzero(new_visit)
    last = np.append(first[1:], len(kept)) - 1
    return [
        BlockVisit(
            traj.vehicle_id,
            BlockId(int(rows[kept[i]]), int(cols[kept[i]])),
            float(starts[i]),
            float(ends[j]),
        )
        for i, j in zip(first, last)
    ]


@dataclass
class IngestStats:
    n_points: int = 0
    n_vehicles: int = 0
    removed_speed: int = 0
    removed_deviation: int = 0
    n_visits: int = 0

    @property
    def removed_total(self):
        return self.removed_speed + self.removed_deviation


def clean_and_segment(
    trajectories,
    grid,
    max_speed_mps=DEFAULT_MAX_SPEED_MPS,
    window_size=DEFAULT_WINDOW_SIZE,
    deviation_factor=DEFAULT_DEVIATION_FACTOR,
    min_spread_m=DEFAULT_MIN_SPREAD_M,
    max_gap_s=DEFAULT_MAX_GAP_S,
):
    """Run filter_outliers then segment_dwell over every trajectory of a dict."""
    stats = IngestStats()
    visits = []
    for vehicle_id in sorted(trajectories):
        traj = trajectories[vehicle_id]
        stats.n_points += len(traj)
        stats.n_vehicles += 1
        clean, counts = filter_outliers(
            traj, max_speed_mps, window_size, deviation_factor, min_spread_m
        )
        stats.removed_speed += counts.speed
        stats.removed_deviation += counts.deviation
        visits.extend(segment_dwell(clean, grid, max_gap_s))
    stats.n_visits = len(visits)
    logger.info("outlier report %s", json.dumps(asdict(stats), sort_keys=True))
    return visits, stats
