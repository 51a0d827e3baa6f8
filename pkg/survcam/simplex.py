"""Dense two-phase tableau simplex with Bland's pivoting rule.

Small exact LP solver used by the security game. It maximizes c.x subject to
A_ub x <= b_ub, A_eq x = b_eq and per-variable bounds. Bland's rule (lowest
index entering column, lowest basic index among tied leaving rows) makes
every run deterministic and guarantees termination.
"""

from typing import NamedTuple

import numpy as np

from .errors import InfeasibleError, SolverError, UnboundedError

DEFAULT_TOL = 1e-9


class LPResult(NamedTuple):
    x: np.ndarray
    value: float
    iterations: int


def _as_constraints(matrix, rhs, n):
    if matrix is None or len(matrix) == 0:
        return np.zeros((0, n)), np.zeros(0)
    matrix = np.atleast_2d(np.asarray(matrix, dtype=np.float64))
    rhs = np.asarray(rhs, dtype=np.float64).ravel()
    if matrix.shape[1] != n or matrix.shape[0] != rhs.shape[0]:
        raise ValueError(
            f"constraint matrix {matrix.shape} and right-hand side {rhs.shape} do not fit {n} variables"
        )
    return matrix, rhs


def _substitution(bounds, n):
    """Write x = offset + M y with y >= 0, plus the rows y_k <= width of doubly bounded variables."""
    if bounds is None:
        bounds = [(0.0, None)] * n
    if len(bounds) != n:
        raise ValueError(f"{len(bounds)} bounds for {n} variables")
    offset = np.zeros(n)
    columns = []
    upper_rows = []
    for i, (low, high) in enumerate(bounds):
        low = None if low is None or np.isneginf(low) else float(low)
        high = None if high is None or np.isposinf(high) else float(high)
        if low is not None and high is not None and high < low:
            raise InfeasibleError(f"variable {i} has bounds [{low}, {high}]")
        if low is not None:
            offset[i] = low
            columns.append((i, 1.0))
            if high is not None:
                upper_rows.append((len(columns) - 1, high - low))
        elif high is not None:
            offset[i] = high
            columns.append((i, -1.0))
        else:
            columns.append((i, 1.0))
            columns.append((i, -1.0))
    transform = np.zeros((n, len(columns)))
    for k, (i, sign) in enumerate(columns):
        transform[i, k] = sign
    return offset, transform, upper_rows


class _Tableau:
    def __init__(self, table, basis, tol, max_iter):
        self.table = table
        self.basis = basis
        self.tol = tol
        self.max_iter = max_iter
        self.iterations = 0

    @property
    def m(self):
        return self.table.shape[0] - 1

    def pivot(self, row, col):
        table = self.table
        table[row] /= table[row, col]
        factors = table[:, col].copy()
        factors[row] = 0.0
        table -= np.outer(factors, table[row])
        table[:, col] = 0.0
        table[row, col] = 1.0
        self.basis[row] = col

    def run(self, n_columns):
        """Pivot until no reduced cost among the first n_columns is negative."""
        table = self.table
        while True:
            reduced = table[-1, :n_columns]
            entering = np.flatnonzero(reduced < -self.tol)
            if entering.size == 0:
                return
            col = int(entering[0])
            column = table[:-1, col]
            candidates = np.flatnonzero(column > self.tol)
            if candidates.size == 0:
                raise UnboundedError("objective is unbounded")
            ratios = table[candidates, -1] / column[candidates]
            best = ratios.min()
            tied = candidates[ratios <= best + self.tol * max(1.0, abs(best))]
            row = int(tied[np.argmin(self.basis[tied])])
            self.pivot(row, col)
            self.iterations += 1
            if self.iterations > self.max_iter:
                raise SolverError(f"simplex did not terminate in {self.max_iter} pivots")


def solve_lp(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None, tol=DEFAULT_TOL, max_iter=None):
    """Maximize c.x subject to A_ub x <= b_ub, A_eq x = b_eq and bounds.

    `bounds` is a list of (low, high) pairs where None means unbounded;
    it defaults to x >= 0. Raises InfeasibleError or UnboundedError.
    """
    c = np.asarray(c, dtype=np.float64).ravel()
    n = c.size
    A_ub, b_ub = _as_constraints(A_ub, b_ub, n)
    A_eq, b_eq = _as_constraints(A_eq, b_eq, n)
    offset, transform, upper_rows = _substitution(bounds, n)
    n_y = transform.shape[1]

    ub_matrix = A_ub @ transform
    ub_rhs = b_ub - A_ub @ offset
    if upper_rows:
        extra = np.zeros((len(upper_rows), n_y))
        for r, (k, width) in enumerate(upper_rows):
            extra[r, k] = 1.0
        ub_matrix = np.vstack((ub_matrix, extra))
        ub_rhs = np.concatenate((ub_rhs, [width for _, width in upper_rows]))
    eq_matrix = A_eq @ transform
    eq_rhs = b_eq - A_eq @ offset

    m_ub, m_eq = ub_matrix.shape[0], eq_matrix.shape[0]
    m = m_ub + m_eq
    n_real = n_y + m_ub
    rows = np.zeros((m, n_real))
    rows[:m_ub, :n_y] = ub_matrix
    rows[:m_ub, n_y:] = np.eye(m_ub)
    rows[m_ub:, :n_y] = eq_matrix
    rhs = np.concatenate((ub_rhs, eq_rhs))
    negative = rhs < 0
    rows[negative] *= -1
    rhs[negative] *= -1

    needs_artificial = np.ones(m, dtype=bool)
    needs_artificial[:m_ub] = negative[:m_ub]
    artificial_rows = np.flatnonzero(needs_artificial)
    n_art = artificial_rows.size
    n_total = n_real + n_art

    table = np.zeros((m + 1, n_total + 1))
    table[:m, :n_real] = rows
    table[:m, -1] = rhs
    basis = np.empty(m, dtype=np.int64)
    basis[:m_ub] = n_y + np.arange(m_ub)
    for k, r in enumerate(artificial_rows):
        table[r, n_real + k] = 1.0
        basis[r] = n_real + k

    if max_iter is None:
        max_iter = 50 * (m + n_total) + 1000
    scale = max(1.0, float(np.max(np.abs(rhs), initial=0.0)))
    tableau = _Tableau(table, basis, tol, max_iter)

    if n_art:
        table[-1, :n_real] = -table[artificial_rows, :n_real].sum(axis=0)
        table[-1, -1] = -table[artificial_rows, -1].sum()
        tableau.run(n_total)
        if -table[-1, -1] > tol * scale * max(1, n_art):
            raise InfeasibleError("constraints admit no feasible point")
        keep = np.ones(m, dtype=bool)
        for r in range(m):
            if tableau.basis[r] < n_real:
                continue
            candidates = np.flatnonzero(np.abs(table[r, :n_real]) > tol)
            if candidates.size:
                tableau.pivot(r, int(candidates[0]))
            else:
                keep[r] = False
        table = np.vstack((table[:-1][keep], table[-1:]))
        table = np.delete(table, np.s_[n_real:n_total], axis=1)
        tableau.table = table
        tableau.basis = tableau.basis[keep]

    costs = np.zeros(n_real)
    costs[:n_y] = -(transform.T @ c)
    basic_costs = costs[tableau.basis]
    table = tableau.table
    table[-1, :n_real] = costs - basic_costs @ table[:-1, :n_real]
    table[-1, -1] = -basic_costs @ table[:-1, -1]
    tableau.run(n_real)

    y = np.zeros(n_real)
    y[tableau.basis] = table[:-1, -1]
    x = offset + transform @ y[:n_y]
    return LPResult(x, float(c @ x), tableau.iterations)
