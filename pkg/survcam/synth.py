"""Seeded synthetic taxi trajectories on a grid (random waypoint mobility)."""

import logging
from dataclasses import dataclass

import numpy as np

import pandas as pd

from .errors import UsageError
from .trajectory_ingest import COLUMNS, Trajectory

logger = logging.getLogger(__name__)

SECONDS_PER_DAY = 86400.0
# positions stay this many meters inside the grid rectangle
_EDGE_MARGIN_M = 1.0


@dataclass(frozen=True)
class SynthSpec:
    """Parameters of the synthetic fleet.

    Each vehicle starts at a random point and repeatedly picks a waypoint,
    drives to it in a straight line at a speed drawn uniformly from
    [min_speed_mps, max_speed_mps] and pauses there for a time drawn
    uniformly from [0, max_pause_s]. With probability home_bias the waypoint
    is drawn within home_radius_blocks blocks of the vehicle's home point
    instead of anywhere on the grid.
    """

    grid: object
    n_vehicles: int = 50
    n_days: float = 1.0
    sample_interval_s: float = 60.0
    min_speed_mps: float = 5.0
    max_speed_mps: float = 15.0
    home_bias: float = 0.0
    home_radius_blocks: int = 5
    max_pause_s: float = 0.0
    seed: int = 0
    start_time: int = 0

    def __post_init__(self):
        if self.n_vehicles < 1:
            raise UsageError(f"n_vehicles must be positive, got {self.n_vehicles}")
        if not (self.n_days > 0 and self.sample_interval_s > 0):
            raise UsageError("n_days and sample_interval_s must be positive")
        if not 0 < self.min_speed_mps <= self.max_speed_mps:
            raise UsageError(
                f"speed range [{self.min_speed_mps}, {self.max_speed_mps}] is not valid"
            )
        if not 0 <= self.home_bias <= 1:
            raise UsageError(f"home_bias must lie in [0, 1], got {self.home_bias}")
        if self.max_pause_s < 0 or self.home_radius_blocks < 0:
            raise UsageError("max_pause_s and home_radius_blocks must be non-negative")

    @property
    def n_samples(self):
        return max(1, int(round(self.n_days * SECONDS_PER_DAY / self.sample_interval_s)))


class _Walker:
    """Continuous-time random waypoint state of one vehicle, in local meters."""

    def __init__(self, spec, rng, width, height):
        self.spec = spec
        self.rng = rng
        self.low = np.array([_EDGE_MARGIN_M, _EDGE_MARGIN_M])
        self.high = np.array([width - _EDGE_MARGIN_M, height - _EDGE_MARGIN_M])
        self.home = rng.uniform(self.low, self.high)
        self.position = self.home.copy()
        self.pause = 0.0
        self._next_leg()

    def _waypoint(self):
        spec = self.spec
        if spec.home_bias > 0 and self.rng.random() < spec.home_bias:
            radius = spec.home_radius_blocks * spec.grid.cell_size_m
            low = np.maximum(self.home - radius, self.low)
            high = np.minimum(self.home + radius, self.high)
            return self.rng.uniform(low, high)
        return self.rng.uniform(self.low, self.high)

    def _next_leg(self):
        self.target = self._waypoint()
        self.speed = self.rng.uniform(self.spec.min_speed_mps, self.spec.max_speed_mps)

    def advance(self, duration):
        remaining = duration
        while remaining > 0:
            if self.pause > 0:
                waited = min(self.pause, remaining)
                self.pause -= waited
                remaining -= waited
                continue
            offset = self.target - self.position
            distance = float(np.hypot(offset[0], offset[1]))
            reach = self.speed * remaining
            if reach < distance:
                self.position = self.position + offset * (reach / distance)
                return
            self.position = self.target.copy()
            remaining -= distance / self.speed
            if self.spec.max_pause_s > 0:
                self.pause = self.rng.uniform(0.0, self.spec.max_pause_s)
            self._next_leg()


def generate(spec):
    """DataFrame of records with the trajectory CSV columns, sorted by vehicle then time."""
    grid = spec.grid
    width = (grid.max_lon - grid.min_lon) * grid.meters_per_deg_lon
    height = (grid.max_lat - grid.min_lat) * grid.meters_per_deg_lat
    if width <= 2 * _EDGE_MARGIN_M or height <= 2 * _EDGE_MARGIN_M:
        raise UsageError("grid rectangle too small for synthetic trajectories")
    rng = np.random.default_rng(spec.seed)
    n_samples = spec.n_samples
    offsets = np.arange(n_samples, dtype=np.int64) * spec.sample_interval_s
    timestamps = spec.start_time + np.round(offsets).astype(np.int64)
    digits = len(str(spec.n_vehicles))

    frames = []
    for v in range(spec.n_vehicles):
        walker = _Walker(spec, rng, width, height)
        positions = np.empty((n_samples, 2))
        for k in range(n_samples):
            if k:
                walker.advance(spec.sample_interval_s)
            positions[k] = walker.position
        frames.append(
            pd.DataFrame(
                {
                    "vehicle_id": f"v{v:0{digits}d}",
                    "timestamp": timestamps,
                    "latitude": grid.min_lat + positions[:, 1] / grid.meters_per_deg_lat,
                    "longitude": grid.min_lon + positions[:, 0] / grid.meters_per_deg_lon,
                },
                columns=COLUMNS,
            )
        )
    frame = pd.concat(frames, ignore_index=True)
    logger.info(
        "generated %d records for %d vehicles over %d samples", len(frame), spec.n_vehicles, n_samples
    )
    return frame


def write_csv(frame, path):
    frame.to_csv(path, index=False, float_format="%.7f")


def to_trajectories(frame):
    """Per-vehicle Trajectory dict of a generated frame, skipping the CSV round trip."""
    trajectories = {}
    for vehicle_id, group in frame.groupby("vehicle_id", sort=True):
        trajectories[vehicle_id] = Trajectory(
            vehicle_id,
            group["timestamp"].to_numpy(dtype=float),
            group["latitude"].to_numpy(dtype=float),
            group["longitude"].to_numpy(dtype=float),
        )
    return trajectories
