"""Camera placement objectives S1-S5 and greedy selection under a budget.

With per-vehicle statistic s_v(C) and weight w_v the objectives are

- S1: sum_v w_v I_v(C)
- S2: sum_v w_v T_v(C)
- S3: Phi - sum_v (S / (w_v T_v(C) + 1) - 1) / |V|,  Phi = S - 1
- S4: Phi - sum_v S / (w_v H_v(C) + 1) / |V|,      Phi = S
- S5: Phi - sum_v S / (w_v U_v(C) + 1) / |V|,      Phi = S

S3-S5 all reduce to sum_v S w_v s_v / (w_v s_v + 1) / |V|, which is what
is evaluated unless the literal form is asked for.
"""

import enum
import heapq
import itertools
import json
import logging
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import CoverageError, PlacementError
from .geo_grid import BlockId

logger = logging.getLogger(__name__)

MAX_EXHAUSTIVE_BLOCKS = 20
# initial gains are computed in bulk; inflating them keeps them valid upper bounds
_BOUND_INFLATION = 1 + 1e-9


class StrategyId(str, enum.Enum):
    S1 = "S1"
    S2 = "S2"
    S3 = "S3"
    S4 = "S4"
    S5 = "S5"

    @property
    def statistic(self):
        """Per-vehicle statistic the objective is built on."""
        return {
            StrategyId.S1: "unique",
            StrategyId.S2: "dwell",
            StrategyId.S3: "dwell",
            StrategyId.S4: "hits",
            StrategyId.S5: "unique",
        }[self]

    @classmethod
    def parse(cls, value):
        try:
            return cls(str(value).upper())
        except ValueError:
            raise PlacementError(f"unknown strategy {value!r}, expected one of S1..S5") from None


def phi_constant(model, strategy):
    strategy = StrategyId.parse(strategy)
    if strategy is StrategyId.S3:
        return model.measurement_span - 1
    if strategy in (StrategyId.S4, StrategyId.S5):
        return model.measurement_span
    return 0.0


def _increments(strategy, dwell, hits):
    if strategy.statistic == "dwell":
        return dwell
    if strategy.statistic == "hits":
        return hits.astype(np.float64)
    return np.ones(len(hits))


def _reward(strategy, stat, weights, scale):
    """Per-vehicle contribution r(s) with r(0) = 0."""
    if strategy is StrategyId.S1:
        return weights * (stat > 0)
    if strategy is StrategyId.S2:
        return weights * stat
    weighted = weights * stat
    return scale * weighted / (weighted + 1)


def _reward_gain(strategy, stat, inc, weights, scale):
    """r(s + inc) - r(s), in a form free of cancellation."""
    if strategy is StrategyId.S1:
        return weights * ((stat == 0) & (inc > 0))
    if strategy is StrategyId.S2:
        return weights * inc
    return scale * weights * inc / ((weights * (stat + inc) + 1) * (weights * stat + 1))


def _statistic_totals(model, strategy, cols):
    _, dwell, hits, unique = model.vehicle_totals([model.blocks[c] for c in cols])
    return {"unique": unique, "dwell": dwell, "hits": hits}[strategy.statistic].astype(np.float64)


def _scale(model):
    if model.n_vehicles == 0:
        return 0.0
    return model.measurement_span / model.n_vehicles


def objective_value(model, strategy, blocks, verbatim=False):
    """F(C) for C = `blocks`, which must all be placeable.

    With verbatim=True S3-S5 are evaluated literally as Phi minus the mean
    term, which loses precision to cancellation but mirrors the definition.
    """
    strategy = StrategyId.parse(strategy)
    try:
        cols = model.columns(blocks, strict=True)
    except CoverageError as error:
        raise PlacementError(str(error)) from error
    if model.n_vehicles == 0:
        return 0.0
    stat = _statistic_totals(model, strategy, cols)
    weights = model.weights
    if verbatim and strategy not in (StrategyId.S1, StrategyId.S2):
        span = model.measurement_span
        terms = span / (weights * stat + 1)
        if strategy is StrategyId.S3:
            terms = terms - 1
        return float(phi_constant(model, strategy) - np.sum(terms) / model.n_vehicles)
    return float(np.sum(_reward(strategy, stat, weights, _scale(model))))


class PlacementState:
    """Running per-vehicle statistics of a selection C, updated one block at a time."""

    def __init__(self, model, strategy):
        self.model = model
        self.strategy = StrategyId.parse(strategy)
        self.stat = np.zeros(model.n_vehicles)
        self.selected = np.zeros(model.n_blocks, dtype=bool)
        self.value = 0.0
        self._scale = _scale(model)

    def gain(self, col):
        rows, dwell, hits = self.model.vehicles_of(col)
        inc = _increments(self.strategy, dwell, hits)
        return float(
            np.sum(
                _reward_gain(
                    self.strategy, self.stat[rows], inc, self.model.weights[rows], self._scale
                )
            )
        )

    def commit(self, col):
        if self.selected[col]:
            raise PlacementError(f"block {tuple(self.model.blocks[col])} already selected")
        gain = self.gain(col)
        rows, dwell, hits = self.model.vehicles_of(col)
        self.stat[rows] += _increments(self.strategy, dwell, hits)
        self.selected[col] = True
        self.value += gain
        return gain

    def initial_gains(self):
        """Gains of every column against the empty selection, computed in bulk."""
        csc = self.model.dwell_by_block
        cols_of_entries = np.repeat(np.arange(self.model.n_blocks), np.diff(csc.indptr))
        inc = _increments(self.strategy, csc.data, self.model.hits_by_block.data)
        per_entry = _reward_gain(
            self.strategy,
            np.zeros(len(inc)),
            inc,
            self.model.weights[csc.indices],
            self._scale,
        )
        return np.bincount(cols_of_entries, weights=per_entry, minlength=self.model.n_blocks)


def marginal_gain(model, strategy, blocks, block):
    """delta_c(C) = F(C + c) - F(C), evaluated incrementally."""
    state = PlacementState(model, strategy)
    try:
        cols = model.columns(blocks, strict=True)
    except CoverageError as error:
        raise PlacementError(str(error)) from error
    col = model.column(block)
    if col is None:
        raise PlacementError(f"block {tuple(block)} is not a placeable block")
    if col in set(cols.tolist()):
        raise PlacementError(f"block {tuple(block)} is already in the selection")
    for c in cols:
        state.commit(c)
    return state.gain(col)


@dataclass
class PlacementStep:
    rank: int
    block: BlockId
    gain: float
    cumulative: float
    exact_gain: Optional[int] = None

    def to_dict(self):
        record = {
            "rank": self.rank,
            "row": self.block.row,
            "col": self.block.col,
            "gain": self.gain,
            "cumulative": self.cumulative,
        }
        if self.exact_gain is not None:
            record["exact_gain"] = self.exact_gain
        return record


@dataclass
class Placement:
    strategy: StrategyId
    budget: int
    steps: List[PlacementStep] = field(default_factory=list)
    grid: Optional[dict] = None

    @property
    def blocks(self):
        return [step.block for step in self.steps]

    @property
    def value(self):
        return self.steps[-1].cumulative if self.steps else 0.0

    def prefix(self, n):
        return self.blocks[:n]

    def to_dict(self):
        return {
            "strategy": self.strategy.value,
            "budget": self.budget,
            "grid": self.grid,
            "steps": [step.to_dict() for step in self.steps],
        }

    @classmethod
    def from_dict(cls, report):
        try:
            steps = [
                PlacementStep(
                    rank=s["rank"],
                    block=BlockId(s["row"], s["col"]),
                    gain=s["gain"],
                    cumulative=s["cumulative"],
                    exact_gain=s.get("exact_gain"),
                )
                for s in report["steps"]
            ]
            strategy, budget, grid = report["strategy"], report["budget"], report.get("grid")
        except (KeyError, TypeError, AttributeError) as error:
            raise PlacementError(f"malformed placement report: {error!r}") from error
        return cls(StrategyId.parse(strategy), budget, steps, grid)


def _exact_gain(model, strategy, gain):
    if strategy not in (StrategyId.S1, StrategyId.S2) or not model.unit_weights:
        return None
    rounded = round(gain)
    if abs(gain - rounded) > 1e-9 * max(1.0, abs(gain)):
        return None
    return int(rounded)


def greedy_place(model, strategy, budget, early_stop=True, lazy=True):
    """Greedy selection of at most `budget` blocks of R.

    Every round adds the block of largest marginal gain, ties going to the
    smallest row-major block index, and the run stops early when the best
    gain is 0. The lazy variant keeps stale gains in a priority queue and only
    re-evaluates the top entry; by submodularity it selects exactly what the
    plain re-scan (lazy=False) selects.
    """
    strategy = StrategyId.parse(strategy)
    if budget < 1:
        raise PlacementError(f"budget must be at least 1, got {budget}")
    state = PlacementState(model, strategy)
    placement = Placement(
        strategy, budget, grid=model.grid.to_dict() if model.grid is not None else None
    )
    if model.n_blocks == 0 or model.n_vehicles == 0:
        logger.info("empty coverage model, nothing to place")
        return placement

    select = _lazy_selection(state) if lazy else _naive_selection(state)
    while len(placement.steps) < budget:
        choice = select()
        if choice is None:
            break
        col, gain = choice
        if early_stop and gain <= 0:
            break
        committed = state.commit(col)
        assert committed == gain
        step = PlacementStep(
            rank=len(placement.steps) + 1,
            block=model.blocks[col],
            gain=gain,
            cumulative=state.value,
            exact_gain=_exact_gain(model, strategy, gain),
        )
        placement.steps.append(step)
        logger.debug("%s step %d: block %s gain %g", strategy.value, step.rank, tuple(step.block), gain)

    logger.info(
        "placement %s",
        json.dumps(
            {
                "strategy": strategy.value,
                "budget": budget,
                "selected": len(placement.steps),
                "value": placement.value,
            },
            sort_keys=True,
        ),
    )
    return placement


def _naive_selection(state):
    def select():
        best = None
        for col in np.flatnonzero(~state.selected):
            gain = state.gain(col)
            if best is None or gain > best[1]:
                best = (int(col), gain)
        return best

    return select


def _lazy_selection(state):
    bounds = state.initial_gains() * _BOUND_INFLATION
    # entries are (-gain, column, round the gain was computed in); -1 marks bulk bounds
    heap = [(-float(b), col, -1) for col, b in enumerate(bounds)]
    heapq.heapify(heap)

    def select():
        current_round = int(state.selected.sum())
        while heap:
            neg_gain, col, evaluated = heapq.heappop(heap)
            if evaluated == current_round:
                return col, -neg_gain
            heapq.heappush(heap, (-state.gain(col), col, current_round))
        return None

    return select


def exhaustive_place(model, strategy, budget, max_blocks=MAX_EXHAUSTIVE_BLOCKS):
    """Best F over subsets of R of size min(budget, |R|), by enumeration.

    F is monotone, so no smaller subset can do better. Returns the optimal
    value and one optimal block list.
    """
    strategy = StrategyId.parse(strategy)
    if model.n_blocks > max_blocks:
        raise PlacementError(
            f"exhaustive search limited to {max_blocks} placeable blocks, model has {model.n_blocks}"
        )
    if model.n_vehicles == 0 or model.n_blocks == 0:
        return 0.0, []
    if strategy.statistic == "dwell":
        matrix = model.dwell.toarray()
    elif strategy.statistic == "hits":
        matrix = model.hits.toarray().astype(np.float64)
    else:
        matrix = (model.hits.toarray() > 0).astype(np.float64)
    weights = model.weights
    scale = _scale(model)
    size = min(budget, model.n_blocks)
    best_value, best_cols = -np.inf, ()
    for cols in itertools.combinations(range(model.n_blocks), size):
        stat = matrix[:, list(cols)].sum(axis=1)
        value = float(np.sum(_reward(strategy, stat, weights, scale)))
        if value > best_value:
            best_value, best_cols = value, cols
    return best_value, [model.blocks[c] for c in best_cols]
