"""Per-vehicle coverage statistics aggregated from block visits.

The model stores, for every (vehicle, block) pair with at least one visit,
the total dwell seconds and the number of visits (entries). The four
statistics used by the objectives and metrics are derived from it:

- I_v(C): 1 if v visits some block of C
- T_v(C): dwell seconds of v in C
- H_v(C): number of entries of v into blocks of C
- U_v(C): number of distinct blocks of C visited by v
"""

import logging

import numpy as np

import pandas as pd

from scipy import sparse

from .errors import CoverageError, UnknownVehicleError
from .geo_grid import BlockId

logger = logging.getLogger(__name__)

DUMP_COLUMNS = ["vehicle_id", "block_row", "block_col", "dwell_s", "hits"]


class CoverageModel:
    """Sparse vehicle x placeable-block matrices of dwell seconds and hit counts.

    Rows follow the sorted vehicle ids, columns the row-major order of the
    placeable blocks R. CSC copies serve as the per-block index of visiting
    vehicles. The model is immutable once built.
    """

    def __init__(
        self, vehicle_ids, blocks, dwell, hits, measurement_span, weights=None, grid=None
    ):
        self.vehicle_ids = list(vehicle_ids)
        self.blocks = [BlockId(int(r), int(c)) for r, c in blocks]
        shape = (len(self.vehicle_ids), len(self.blocks))
        self.dwell = sparse.csr_matrix(dwell, shape=shape, dtype=np.float64)
        self.hits = sparse.csr_matrix(hits, shape=shape, dtype=np.int64)
        self.dwell.sort_indices()
        self.hits.sort_indices()
        assert np.array_equal(self.dwell.indptr, self.hits.indptr)
        assert np.array_equal(self.dwell.indices, self.hits.indices)
        self.dwell_by_block = self.dwell.tocsc()
        self.hits_by_block = self.hits.tocsc()
        self.dwell_by_block.sort_indices()
        self.hits_by_block.sort_indices()

        if weights is None:
            weights = np.ones(shape[0])
        self.weights = np.asarray(weights, dtype=np.float64)
        if self.weights.shape != (shape[0],):
            raise CoverageError("one weight per vehicle expected")
        if np.any(~(self.weights > 0)):
            raise CoverageError("vehicle weights must be positive")
        if not measurement_span > 0:
            raise CoverageError(f"measurement span must be positive, got {measurement_span}")
        self.measurement_span = float(measurement_span)
        if shape[0] and np.max(self.total_dwell()) > self.measurement_span * (1 + 1e-12):
            raise CoverageError("measurement span shorter than a vehicle's total dwell")
        self.grid = grid

        self._vehicle_index = {v: i for i, v in enumerate(self.vehicle_ids)}
        self._block_index = {b: j for j, b in enumerate(self.blocks)}

    @property
    def n_vehicles(self):
        return len(self.vehicle_ids)

    @property
    def n_blocks(self):
        return len(self.blocks)

    @property
    def placeable_blocks(self):
        return list(self.blocks)

    @property
    def unit_weights(self):
        return bool(np.all(self.weights == 1.0))

    def vehicle_index(self, vehicle_id):
        try:
            return self._vehicle_index[vehicle_id]
        except KeyError:
            raise UnknownVehicleError(f"unknown vehicle {vehicle_id!r}") from None

    def column(self, block):
        """Column of a block of R, or None for blocks outside R."""
        return self._block_index.get(BlockId(int(block[0]), int(block[1])))

    def columns(self, blocks, strict=False):
        cols = []
        for block in blocks:
            col = self.column(block)
            if col is None:
                if strict:
                    raise CoverageError(f"block {tuple(block)} is not a placeable block")
                continue
            cols.append(col)
        return np.unique(np.array(cols, dtype=np.int64))

    def vehicles_of(self, col):
        """Vehicle rows visiting column `col` with their dwell and hit counts."""
        start, end = self.dwell_by_block.indptr[col], self.dwell_by_block.indptr[col + 1]
        return (
            self.dwell_by_block.indices[start:end],
            self.dwell_by_block.data[start:end],
            self.hits_by_block.data[start:end],
        )

    def _row(self, vehicle_id):
        i = self.vehicle_index(vehicle_id)
        start, end = self.dwell.indptr[i], self.dwell.indptr[i + 1]
        return self.dwell.indices[start:end], self.dwell.data[start:end], self.hits.data[start:end]

    def pair(self, vehicle_id, block):
        """(dwell_s, hit_count) of one vehicle in one block; zeros when never visited."""
        cols, dwell, hits = self._row(vehicle_id)
        col = self.column(block)
        if col is None:
            return 0.0, 0
        pos = np.searchsorted(cols, col)
        if pos < len(cols) and cols[pos] == col:
            return float(dwell[pos]), int(hits[pos])
        return 0.0, 0

    def _restricted_row(self, vehicle_id, blocks):
        cols, dwell, hits = self._row(vehicle_id)
        mask = np.isin(cols, self.columns(blocks))
        return dwell[mask], hits[mask]

    def total_dwell(self):
        return np.asarray(self.dwell.sum(axis=1)).ravel()

    def block_traffic(self):
        """T(c) = sum over vehicles of T_v({c}), per column."""
        return np.asarray(self.dwell.sum(axis=0)).ravel()

    def vehicle_totals(self, blocks):
        """Arrays I, T, H, U over all vehicles for the block set `blocks`."""
        cols = self.columns(blocks)
        dwell = self.dwell[:, cols]
        hits = self.hits[:, cols]
        dwell_total = np.asarray(dwell.sum(axis=1)).ravel()
        hit_total = np.asarray(hits.sum(axis=1)).ravel().astype(np.int64)
        unique = np.diff(hits.tocsr().indptr).astype(np.int64)
        return (unique > 0).astype(np.int64), dwell_total, hit_total, unique

    def with_weights(self, weights):
        return CoverageModel(
            self.vehicle_ids,
            self.blocks,
            self.dwell,
            self.hits,
            self.measurement_span,
            weights=weights,
            grid=self.grid,
        )

    def to_frame(self):
        coo = self.dwell.tocoo()
        order = np.lexsort((coo.col, coo.row))
        rows, cols = coo.row[order], coo.col[order]
        return pd.DataFrame(
            {
                "vehicle_id": [self.vehicle_ids[i] for i in rows],
                "block_row": [self.blocks[j].row for j in cols],
                "block_col": [self.blocks[j].col for j in cols],
                "dwell_s": coo.data[order],
                "hits": self.hits.tocoo().data[order],
            },
            columns=DUMP_COLUMNS,
        )

    def dump_csv(self, path):
        self.to_frame().to_csv(path, index=False)


def read_weights(path):
    """Read a `vehicle_id,weight` CSV into a dict."""
    frame = pd.read_csv(path, dtype={"vehicle_id": str})
    if list(frame.columns) != ["vehicle_id", "weight"]:
        raise CoverageError(f"weights header {list(frame.columns)} is not vehicle_id,weight")
    weights = dict(zip(frame["vehicle_id"], frame["weight"].astype(float)))
    bad = sorted(v for v, w in weights.items() if not w > 0)
    if bad:
        raise CoverageError(f"non-positive weights for vehicles {bad[:5]}")
    return weights


def build_coverage(visits, measurement_span=None, weights=None, grid=None):
    """Aggregate BlockVisits into a CoverageModel.

    `measurement_span` defaults to the dataset time span (last leave time minus
    first enter time). `weights` maps vehicle ids to positive weights;
    vehicles without an entry weigh 1.
    """
    visits = list(visits)
    if weights:
        bad = sorted(v for v, w in weights.items() if not w > 0)
        if bad:
            raise CoverageError(f"non-positive weights for vehicles {bad[:5]}")
    if measurement_span is not None and not measurement_span > 0:
        raise CoverageError(f"measurement span must be positive, got {measurement_span}")

    if not visits:
        return CoverageModel(
            [], [], (0, 0), (0, 0), measurement_span or 1.0, grid=grid
        )

    vehicle_names = np.array([v.vehicle_id for v in visits], dtype=object)
    block_rc = np.array([(v.block[0], v.block[1]) for v in visits], dtype=np.int64)
    enter = np.array([v.enter_time for v in visits], dtype=float)
    leave = np.array([v.leave_time for v in visits], dtype=float)
    if np.any(leave < enter):
        raise CoverageError("a visit leaves its block before entering it")

    vehicle_ids, vehicle_rows = np.unique(vehicle_names.astype(str), return_inverse=True)
    blocks, block_cols = np.unique(block_rc, axis=0, return_inverse=True)
    vehicle_rows = vehicle_rows.reshape(-1)
    block_cols = block_cols.reshape(-1)
    shape = (len(vehicle_ids), len(blocks))
    dwell = sparse.coo_matrix((leave - enter, (vehicle_rows, block_cols)), shape=shape).tocsr()
    hits = sparse.coo_matrix(
        (np.ones(len(visits), dtype=np.int64), (vehicle_rows, block_cols)), shape=shape
    ).tocsr()

    if measurement_span is None:
        measurement_span = float(leave.max() - enter.min())
        if measurement_span <= 0:
            measurement_span = 1.0

    weight_vector = np.ones(shape[0])
    if weights:
        for i, vehicle_id in enumerate(vehicle_ids):
            weight_vector[i] = weights.get(vehicle_id, 1.0)
        unused = set(weights) - set(vehicle_ids)
        if unused:
            logger.debug("%d weighted vehicles have no visits", len(unused))

    model = CoverageModel(
        [str(v) for v in vehicle_ids],
        [tuple(b) for b in blocks],
        dwell,
        hits,
        measurement_span,
        weights=weight_vector,
        grid=grid,
    )
    logger.debug(
        "coverage model with %d vehicles, %d placeable blocks", model.n_vehicles, model.n_blocks
    )
    return model


def covered(model, vehicle_id, blocks):
    """I_v(C)."""
    _, hits = model._restricted_row(vehicle_id, blocks)
    return int(len(hits) > 0)


def dwell_time(model, vehicle_id, blocks):
    """T_v(C)."""
    dwell, _ = model._restricted_row(vehicle_id, blocks)
    return float(dwell.sum())


def hit_count_total(model, vehicle_id, blocks):
    """H_v(C)."""
    _, hits = model._restricted_row(vehicle_id, blocks)
    return int(hits.sum())


def unique_hits(model, vehicle_id, blocks):
    """U_v(C)."""
    _, hits = model._restricted_row(vehicle_id, blocks)
    return int(len(hits))
