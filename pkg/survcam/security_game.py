"""Randomized camera-resolution upgrading as a Stackelberg security game.

The defender (leader) commits to a distribution `a` over J pure strategies,
each a set of cameras upgraded together (row j of the coverage matrix A).
The adversary (follower) sees the marginals x = A^T a and attacks the camera
block with the highest expected utility, breaking ties in the defender's
favour (strong Stackelberg convention). The defender's optimal commitment is
found exactly with linear programs: one LP per candidate attacked target in
general, or a single maximin LP when the game is zero-sum.
"""

import json
import logging
from dataclasses import dataclass
from typing import NamedTuple, Optional

import numpy as np

from .errors import GameError, InfeasibleError, SolverError
from .simplex import solve_lp

logger = logging.getLogger(__name__)

TIE_TOL = 1e-9
PAYOFF_MODES = ("zero_sum", "general")
METHODS = ("auto", "maximin", "multiple_lp")


class Payoffs(NamedTuple):
    defender_reward: np.ndarray
    defender_penalty: np.ndarray
    adversary_reward: np.ndarray
    adversary_penalty: np.ndarray


@dataclass(eq=False)
class GameInstance:
    """Coverage matrix (J x N, A_ij in {0, 1}) and per-target payoffs."""

    coverage: np.ndarray
    payoffs: Payoffs
    importance: Optional[np.ndarray] = None

    def __post_init__(self):
        self.coverage = np.atleast_2d(np.asarray(self.coverage, dtype=np.int8))
        self.payoffs = Payoffs(*(np.asarray(p, dtype=np.float64).ravel() for p in self.payoffs))
        n_strategies, n_targets = self.coverage.shape
        if n_strategies < 1 or n_targets < 1:
            raise GameError("a game needs at least one pure strategy and one target")
        if not np.isin(self.coverage, (0, 1)).all():
            raise GameError("coverage matrix entries must be 0 or 1")
        if np.any(self.coverage.sum(axis=0) == 0):
            raise GameError("every target must be covered by some pure strategy")
        for name, values in zip(Payoffs._fields, self.payoffs):
            if values.shape != (n_targets,):
                raise GameError(f"{name} has shape {values.shape}, expected ({n_targets},)")
        r_d, p_d, r_a, p_a = self.payoffs
        if np.any((r_d < 0) | (r_d > 1) | (r_a < 0) | (r_a > 1)):
            raise GameError("rewards must lie in [0, 1]")
        if np.any((p_d < -1) | (p_d > 0) | (p_a < -1) | (p_a > 0)):
            raise GameError("penalties must lie in [-1, 0]")
        if np.any(r_d <= p_d) or np.any(r_a <= p_a):
            raise GameError("rewards must exceed penalties for both players")
        if self.importance is None:
            self.importance = r_d.copy()
        self.importance = np.asarray(self.importance, dtype=np.float64).ravel()
        if self.importance.shape != (n_targets,):
            raise GameError("one importance value per target expected")

    @property
    def n_strategies(self):
        return self.coverage.shape[0]

    @property
    def n_targets(self):
        return self.coverage.shape[1]

    @property
    def zero_sum(self):
        r_d, p_d, r_a, p_a = self.payoffs
        return bool(np.allclose(r_d + p_a, 0, atol=1e-12) and np.allclose(r_a + p_d, 0, atol=1e-12))

    def to_dict(self):
        return {
            "payoffs": [
                {
                    "defender_reward": float(r_d),
                    "defender_penalty": float(p_d),
                    "adversary_reward": float(r_a),
                    "adversary_penalty": float(p_a),
                    "importance": float(imp),
                }
                for r_d, p_d, r_a, p_a, imp in zip(*self.payoffs, self.importance)
            ],
            "strategies": [np.flatnonzero(row).tolist() for row in self.coverage],
        }

    @classmethod
    def from_dict(cls, data):
        try:
            targets = data["payoffs"]
            coverage = np.zeros((len(data["strategies"]), len(targets)), dtype=np.int8)
            for j, members in enumerate(data["strategies"]):
                coverage[j, members] = 1
            payoffs = Payoffs(
                *(np.array([t[name] for t in targets], dtype=np.float64) for name in Payoffs._fields)
            )
            importance = None
            if targets and all("importance" in t for t in targets):
                importance = np.array([t["importance"] for t in targets], dtype=np.float64)
        except (KeyError, TypeError, IndexError, ValueError) as error:
            raise GameError(f"malformed game instance: {error!r}") from error
        return cls(coverage, payoffs, importance)

    def save(self, path):
        with open(path, "w", encoding="utf-8") as f:
            json.dump(self.to_dict(), f, sort_keys=True, indent=2)
            f.write("\n")

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as f:
            return cls.from_dict(json.load(f))


@dataclass(eq=False)
class MixedStrategy:
    probabilities: np.ndarray
    marginals: np.ndarray

    def sparse(self, tol=1e-12):
        return {str(j): float(p) for j, p in enumerate(self.probabilities) if p > tol}


class Evaluation(NamedTuple):
    defender_utility: float
    adversary_utility: float
    attacked_target: int


@dataclass(eq=False)
class GameSolution:
    mixed: MixedStrategy
    attacked_target: int
    defender_utility: float
    adversary_utility: float

    def to_dict(self):
        return {
            "a": self.mixed.sparse(),
            "x": self.mixed.marginals.tolist(),
            "attacked_target": self.attacked_target,
            "defender_utility": self.defender_utility,
            "adversary_utility": self.adversary_utility,
        }


def _block_columns(model, blocks):
    cols = []
    for block in blocks:
        col = model.column(block)
        if col is None:
            raise GameError(f"block {tuple(block)} has no traffic in the coverage model")
        cols.append(col)
    return np.array(cols, dtype=np.int64)


def _normalized(values, what):
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        raise GameError("no camera blocks given")
    if np.any(values <= 0):
        raise GameError(f"every camera block needs positive {what}")
    return values / values.max()


def importance_from_traffic(model, blocks):
    """T(c_i) / max_k T(c_k) with T(c) the total dwell of all vehicles in c."""
    cols = _block_columns(model, blocks)
    return _normalized(model.block_traffic()[cols], "traffic")


def importance_from_unique_vehicles(model, blocks):
    """Number of distinct vehicles visiting each block, normalized by its maximum."""
    cols = _block_columns(model, blocks)
    counts = np.diff(model.dwell_by_block.indptr)[cols]
    return _normalized(counts, "visiting vehicles")


def _check_importance(importance):
    importance = np.asarray(importance, dtype=np.float64).ravel()
    if np.any(~((importance > 0) & (importance <= 1))):
        raise GameError("importance values must lie in (0, 1]")
    return importance


def zero_sum_payoffs(importance):
    importance = _check_importance(importance)
    return Payoffs(importance.copy(), -importance, importance.copy(), -importance)


def general_payoffs(defender_importance, adversary_importance):
    """Defender values one importance measure, the adversary another."""
    defender_importance = _check_importance(defender_importance)
    adversary_importance = _check_importance(adversary_importance)
    if defender_importance.shape != adversary_importance.shape:
        raise GameError("importance vectors differ in length")
    return Payoffs(
        defender_importance.copy(),
        -defender_importance,
        adversary_importance.copy(),
        -adversary_importance,
    )


def generate_pure_strategies(n_targets, n_strategies, k_per_strategy, seed):
    """Random J x N coverage matrix with exactly k ones per row and no empty column.

    Rows are drawn uniformly without replacement from a seeded generator; a
    deterministic pass then swaps every uncovered target into a row, in place
    of that row's most covered member.
    """
    if n_targets < 1 or n_strategies < 1:
        raise GameError("need at least one target and one pure strategy")
    if not 1 <= k_per_strategy <= n_targets:
        raise GameError(f"strategy size {k_per_strategy} outside [1, {n_targets}]")
    if n_strategies * k_per_strategy < n_targets:
        raise GameError(
            f"{n_strategies} strategies of {k_per_strategy} cameras cannot cover {n_targets} targets"
        )
    rng = np.random.default_rng(seed)
    coverage = np.zeros((n_strategies, n_targets), dtype=np.int8)
    for j in range(n_strategies):
        coverage[j, rng.choice(n_targets, size=k_per_strategy, replace=False)] = 1

    counts = coverage.sum(axis=0).astype(np.int64)
    for target in np.flatnonzero(counts == 0):
        for offset in range(n_strategies):
            j = (target + offset) % n_strategies
            members = np.flatnonzero(coverage[j])
            donors = members[counts[members] > 1]
            if donors.size:
                donor = donors[np.argmax(counts[donors])]
                coverage[j, donor] = 0
                coverage[j, target] = 1
                counts[donor] -= 1
                counts[target] += 1
                break
    assert np.all(counts > 0)
    return coverage


def marginals(coverage, probabilities):
    """x_i = sum_j a_j A_ij."""
    coverage = np.atleast_2d(np.asarray(coverage, dtype=np.float64))
    probabilities = np.asarray(probabilities, dtype=np.float64).ravel()
    if probabilities.shape != (coverage.shape[0],):
        raise GameError(
            f"{probabilities.size} probabilities for {coverage.shape[0]} pure strategies"
        )
    if np.any(probabilities < -1e-9) or abs(probabilities.sum() - 1) > 1e-6:
        raise GameError("probabilities must be non-negative and sum to 1")
    return np.clip(coverage.T @ probabilities, 0.0, 1.0)


def expected_utilities(payoffs, x):
    """Per-target (U_d(x_i), U_a(x_i))."""
    x = np.asarray(x, dtype=np.float64)
    r_d, p_d, r_a, p_a = payoffs
    return x * r_d + (1 - x) * p_d, x * p_a + (1 - x) * r_a


def best_response(adversary_utilities, defender_utilities=None, tol=TIE_TOL):
    """Index of the attacked target.

    Targets within tol of the best adversary utility are tied; ties go to the
    target best for the defender, then to the lowest index.
    """
    adversary_utilities = np.asarray(adversary_utilities, dtype=np.float64)
    if adversary_utilities.size == 0:
        raise GameError("best response over no targets")
    tied = np.flatnonzero(adversary_utilities >= adversary_utilities.max() - tol)
    if defender_utilities is None or tied.size == 1:
        return int(tied[0])
    defender_utilities = np.asarray(defender_utilities, dtype=np.float64)
    tied_defender = defender_utilities[tied]
    return int(tied[np.flatnonzero(tied_defender >= tied_defender.max() - tol)[0]])


def _as_probabilities(game, strategy):
    if isinstance(strategy, MixedStrategy):
        return strategy.probabilities
    return np.asarray(strategy, dtype=np.float64)


def evaluate_defender(game, strategy):
    """(U_d, U_a, i*) of a mixed strategy against the best-responding adversary."""
    x = marginals(game.coverage, _as_probabilities(game, strategy))
    defender, adversary = expected_utilities(game.payoffs, x)
    target = best_response(adversary, defender)
    return Evaluation(float(defender[target]), float(adversary[target]), target)


def _mixed(game, probabilities):
    probabilities = np.clip(np.asarray(probabilities, dtype=np.float64), 0.0, None)
    probabilities = probabilities / probabilities.sum()
    return MixedStrategy(probabilities, marginals(game.coverage, probabilities))


def uniform_strategy(game):
    return _mixed(game, np.full(game.n_strategies, 1.0 / game.n_strategies))


def best_pure_strategy(game):
    """Pure strategy covering the most important block, best for the defender.

    Among the pure strategies containing a block of maximal importance the one
    with the highest defender utility wins, ties going to the lowest index.
    """
    importance = game.importance
    top = np.flatnonzero(importance >= importance.max() - 1e-12)
    rows = np.flatnonzero(game.coverage[:, top].any(axis=1))
    best_row, best_utility = None, -np.inf
    for j in rows:
        pure = np.zeros(game.n_strategies)
        pure[j] = 1.0
        utility = evaluate_defender(game, pure).defender_utility
        if utility > best_utility + 1e-12:
            best_row, best_utility = j, utility
    pure = np.zeros(game.n_strategies)
    pure[best_row] = 1.0
    return _mixed(game, pure)


def _maximin_probabilities(game):
    """Minimize the adversary's best expected utility (zero-sum games)."""
    coverage = game.coverage.astype(np.float64)
    _, _, r_a, p_a = game.payoffs
    n_strategies = game.n_strategies
    # variables (a_1..a_J, z): U_k^a(x_k) - z <= 0 for every target k
    A_ub = np.column_stack(((p_a - r_a)[:, None] * coverage.T, -np.ones(game.n_targets)))
    b_ub = -r_a
    A_eq = np.append(np.ones(n_strategies), 0.0)[None, :]
    objective = np.zeros(n_strategies + 1)
    objective[-1] = -1.0
    bounds = [(0.0, None)] * n_strategies + [(None, None)]
    result = solve_lp(objective, A_ub, b_ub, A_eq, [1.0], bounds)
    return result.x[:n_strategies]


def _target_lp(game, target):
    """Best defender commitment under which `target` is a best response."""
    coverage = game.coverage.astype(np.float64)
    r_d, p_d, r_a, p_a = game.payoffs
    objective = (r_d[target] - p_d[target]) * coverage[:, target]
    slope = (p_a - r_a)[:, None] * coverage.T
    others = np.delete(np.arange(game.n_targets), target)
    A_ub = slope[others] - slope[target]
    b_ub = r_a[target] - r_a[others]
    A_eq = np.ones((1, game.n_strategies))
    result = solve_lp(objective, A_ub, b_ub, A_eq, [1.0])
    return result.x, result.value + p_d[target]


def _multiple_lp_probabilities(game):
    r_d = game.payoffs.defender_reward
    order = sorted(range(game.n_targets), key=lambda t: (-r_d[t], t))
    best_value, best_a, solved = -np.inf, None, 0
    for target in order:
        # U_t^d can never exceed R_d,t
        if r_d[target] < best_value - 1e-12:
            break
        try:
            a, value = _target_lp(game, target)
        except InfeasibleError:
            continue
        solved += 1
        if value > best_value + 1e-12:
            best_value, best_a = value, a
    logger.debug("solved %d of %d target LPs", solved, game.n_targets)
    if best_a is None:
        raise SolverError("no target can be induced as a best response")
    return best_a


def solve_mixed_strategy(game, method="auto"):
    """Defender's optimal mixed strategy against a best-response adversary."""
    if method not in METHODS:
        raise GameError(f"unknown method {method!r}, expected one of {METHODS}")
    if method == "auto":
        method = "maximin" if game.zero_sum else "multiple_lp"
    if method == "maximin":
        if not game.zero_sum:
            raise GameError("the maximin formulation is only exact for zero-sum games")
        probabilities = _maximin_probabilities(game)
    else:
        probabilities = _multiple_lp_probabilities(game)
    mixed = _mixed(game, probabilities)
    evaluation = evaluate_defender(game, mixed)
    return GameSolution(
        mixed,
        evaluation.attacked_target,
        evaluation.defender_utility,
        evaluation.adversary_utility,
    )


def build_game(model, blocks, n_strategies, k_per_strategy, seed, payoff_mode="zero_sum"):
    """Game over the camera blocks of a placement, with traffic-based importance."""
    if payoff_mode not in PAYOFF_MODES:
        raise GameError(f"unknown payoff mode {payoff_mode!r}, expected one of {PAYOFF_MODES}")
    blocks = list(blocks)
    importance = importance_from_traffic(model, blocks)
    if payoff_mode == "zero_sum":
        payoffs = zero_sum_payoffs(importance)
    else:
        payoffs = general_payoffs(importance, importance_from_unique_vehicles(model, blocks))
    coverage = generate_pure_strategies(len(blocks), n_strategies, k_per_strategy, seed)
    return GameInstance(coverage, payoffs, importance)


def compare_strategies(game, method="auto"):
    """Optimal mixed strategy and the uniform / best-pure baselines."""
    solution = solve_mixed_strategy(game, method)
    evaluations = {
        "mixed": evaluate_defender(game, solution.mixed),
        "uniform": evaluate_defender(game, uniform_strategy(game)),
        "best": evaluate_defender(game, best_pure_strategy(game)),
    }
    logger.info(
        "game %s",
        json.dumps(
            {name: e.defender_utility for name, e in evaluations.items()}, sort_keys=True
        ),
    )
    return solution, evaluations
