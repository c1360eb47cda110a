"""
Bounded-variable primal simplex on a dense tableau.

Variables are shifted to [0, h]. Every nonbasic variable sits at one of its
bounds, so an entering variable may simply jump to its other bound (a bound
flip) instead of pivoting. Phase I minimizes the sum of one artificial per
row; Phase II pins the artificials to zero and optimizes the real costs.
Dantzig pricing is used until a run of degenerate pivots, then Bland's rule.
"""

import logging
import time
from dataclasses import dataclass
from typing import Optional

import numpy as np

from config.solver_config import SIMPLEX, TOLERANCES
from milp.linear_model import INFEASIBLE, ITERATION_LIMIT, OPTIMAL, LinearModel, MilpSolution
from scheduling.errors import SolverError

logger = logging.getLogger(__name__)


@dataclass
class LpResult:
    status: str
    x: Optional[np.ndarray] = None
    objective: Optional[float] = None
    iterations: int = 0


class _Tableau:
    """T = B^-1 A over structural, slack and artificial columns, plus reduced costs."""

    def __init__(self, A: np.ndarray, b: np.ndarray, upper: np.ndarray, basis: np.ndarray):
        self.T = A.copy()
        self.upper = upper
        self.basis = basis
        self.x = np.zeros(A.shape[1])
        self.x[basis] = b
        self.at_upper = np.zeros(A.shape[1], dtype=bool)
        self.d = np.zeros(A.shape[1])
        self.iterations = 0

    def price(self, cost: np.ndarray):
        self.cost = cost
        self.d = cost - cost[self.basis] @ self.T

    def objective(self) -> float:
        return float(self.cost @ self.x)

    def _pivot_col(self, tol: float, bland: bool) -> tuple:
        basic = np.zeros(self.T.shape[1], dtype=bool)
        basic[self.basis] = True
        movable = self.upper > tol
        increase = ~basic & ~self.at_upper & movable & (self.d < -tol)
        decrease = ~basic & self.at_upper & (self.d > tol)
        eligible = np.flatnonzero(increase | decrease)
        if eligible.size == 0:
            return None, 0
        if bland:
            col = int(eligible[0])
        else:
            col = int(eligible[np.argmax(np.abs(self.d[eligible]))])
        return col, (1 if increase[col] else -1)

    def _pivot_row(self, col: int, direction: int, tol: float, bland: bool) -> tuple:
        alpha = direction * self.T[:, col]
        xb = self.x[self.basis]
        ub_b = self.upper[self.basis]
        ratios = np.full(alpha.shape, np.inf)
        down = alpha > tol
        ratios[down] = xb[down] / alpha[down]
        up = (alpha < -tol) & np.isfinite(ub_b)
        ratios[up] = (ub_b[up] - xb[up]) / -alpha[up]
        ratios = np.maximum(ratios, 0.0)
        step = ratios.min() if ratios.size else np.inf
        flip = self.upper[col]
        if flip <= step:
            return None, flip
        if not np.isfinite(step):
            return None, np.inf
        ties = np.flatnonzero(ratios <= step + tol)
        if bland:
            row = int(ties[np.argmin(self.basis[ties])])
        else:
            row = int(ties[np.argmax(np.abs(alpha[ties]))])
        return row, step

    def _apply(self, col: int, direction: int, row: Optional[int], step: float):
        delta = direction * step
        self.x[self.basis] -= delta * self.T[:, col]
        self.x[col] += delta
        if row is None:
            self.at_upper[col] = not self.at_upper[col]
            return
        leaving = self.basis[row]
        leaving_up = direction * self.T[row, col] < 0
        self.x[leaving] = self.upper[leaving] if leaving_up else 0.0
        self.at_upper[leaving] = leaving_up
        self.at_upper[col] = False

        pivot = self.T[row, col]
        self.T[row] /= pivot
        factor = self.T[:, col].copy()
        factor[row] = 0.0
        self.T -= np.outer(factor, self.T[row])
        self.d -= self.d[col] * self.T[row]
        self.basis[row] = col

    def run(self, max_iterations: int) -> str:
        tol = SIMPLEX["pivot_tol"]
        stall = 0
        bland = False
        while True:
            if self.iterations >= max_iterations:
                return ITERATION_LIMIT
            col, direction = self._pivot_col(tol, bland)
            if col is None:
                return OPTIMAL
            row, step = self._pivot_row(col, direction, tol, bland)
            if not np.isfinite(step):
                raise SolverError("LP relaxation is unbounded")
            self._apply(col, direction, row, step)
            self.iterations += 1
            if step <= tol:
                stall += 1
                if not bland and stall >= SIMPLEX["degeneracy_stall"]:
                    logger.debug(f"Degenerate stall after {stall} pivots, switching to Bland's rule")
                    bland = True
            else:
                stall = 0


def solve_lp(c, A, senses, b, lb, ub, max_iterations: Optional[int] = None) -> LpResult:
    """Minimize c x subject to rows of A x (senses) b and lb <= x <= ub."""
    max_iterations = max_iterations or SIMPLEX["max_iterations"]
    c = np.asarray(c, dtype=float)
    A = np.asarray(A, dtype=float).reshape(-1, c.shape[0])
    b = np.asarray(b, dtype=float)
    lb = np.asarray(lb, dtype=float)
    ub = np.asarray(ub, dtype=float)
    n, m = c.shape[0], A.shape[0]
    feas_tol = TOLERANCES["feasibility"]

    span = ub - lb
    if np.any(span < -feas_tol):
        return LpResult(INFEASIBLE)
    span = np.maximum(span, 0.0)
    rhs = b - A @ lb

    slack_cols = [row for row, sense in enumerate(senses) if sense != "="]
    n_slack = len(slack_cols)
    full = np.zeros((m, n + n_slack + m))
    full[:, :n] = A
    for pos, row in enumerate(slack_cols):
        full[row, n + pos] = 1.0 if senses[row] == "<=" else -1.0
    flip = rhs < 0
    full[flip] *= -1.0
    rhs = np.where(flip, -rhs, rhs)
    full[:, n + n_slack:] = np.eye(m)

    upper = np.concatenate((span, np.full(n_slack, np.inf), np.full(m, np.inf)))
    basis = np.arange(n + n_slack, n + n_slack + m)
    tableau = _Tableau(full, rhs, upper, basis)

    phase1 = np.zeros(full.shape[1])
    phase1[n + n_slack:] = 1.0
    tableau.price(phase1)
    status = tableau.run(max_iterations)
    if status != OPTIMAL:
        return LpResult(status, iterations=tableau.iterations)
    scale = max(1.0, float(np.abs(rhs).max()) if m else 1.0)
    if tableau.objective() > feas_tol * scale:
        logger.debug(f"Phase I ended with infeasibility {tableau.objective():.3g}")
        return LpResult(INFEASIBLE, iterations=tableau.iterations)

    upper[n + n_slack:] = 0.0
    tableau.x[n + n_slack:] = np.maximum(tableau.x[n + n_slack:], 0.0)
    phase2 = np.zeros(full.shape[1])
    phase2[:n] = c
    tableau.price(phase2)
    status = tableau.run(max_iterations)
    if status != OPTIMAL:
        return LpResult(status, iterations=tableau.iterations)

    x = np.clip(lb + tableau.x[:n], lb, ub)
    return LpResult(OPTIMAL, x=x, objective=float(c @ x), iterations=tableau.iterations)


def simplex_solve(model: LinearModel, lb=None, ub=None) -> MilpSolution:
    """Solve the continuous relaxation of `model` (binaries relaxed to [0, 1])."""
    model.validate()
    start = time.perf_counter()
    c, A, senses, b = model.to_arrays()
    model_lb, model_ub = model.bounds()
    result = solve_lp(
        c, A, senses, b,
        model_lb if lb is None else lb,
        model_ub if ub is None else ub,
    )
    objective = None if result.objective is None else result.objective + model.objective_constant
    return MilpSolution(
        status=result.status,
        objective=objective,
        values=result.x,
        names=model.names,
        solve_time=time.perf_counter() - start,
        bound=objective,
        iterations=result.iterations,
    )
