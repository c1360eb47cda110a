"""
Branch-and-bound over the binary variables of a LinearModel.

Each node carries bound overrides for the binaries fixed so far. Until an
incumbent exists the deepest node is popped (a dive); afterwards nodes are
popped in order of their parent's LP bound. The most fractional binary
(lowest index on ties) is branched on, the side its LP value rounds to first.
"""

import heapq
import itertools
import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from config.solver_config import BRANCH_AND_BOUND, TOLERANCES, get_setting
from milp.linear_model import (
    INFEASIBLE,
    ITERATION_LIMIT,
    NODE_LIMIT,
    OPTIMAL,
    TIME_LIMIT,
    LinearModel,
    MilpSolution,
)
from milp.simplex import solve_lp

logger = logging.getLogger(__name__)


@dataclass
class _Node:
    fixed: dict = field(default_factory=dict)   # variable index -> 0 or 1
    depth: int = 0


def _most_fractional(x: np.ndarray, binaries: np.ndarray, tol: float) -> Optional[int]:
    frac = np.abs(x[binaries] - np.round(x[binaries]))
    if frac.size == 0 or frac.max() <= tol:
        return None
    # closest to 0.5; argmax returns the lowest index on ties
    return int(binaries[np.argmax(np.round(frac, 12))])


def _priority(bound: float, depth: int, diving: bool) -> tuple:
    # diving: deepest node first until an incumbent exists
    return (-depth, bound) if diving else (bound, -depth)


def branch_and_bound(
    model: LinearModel,
    time_limit: Optional[float] = None,
    node_limit: Optional[int] = None,
    cutoff: Optional[float] = None,
    incumbent: Optional[np.ndarray] = None,
) -> MilpSolution:
    """
    Solve `model` to optimality over its binaries.

    `cutoff` is the objective of a known feasible solution (for example an
    ASAP schedule); nodes whose bound exceeds it are pruned. Solutions equal
    to the cutoff are still accepted so the search returns a full assignment.
    `incumbent` is a full assignment (see builders.warm_start) the search
    starts from; it is returned when nothing better is found in time.
    Without one, the search dives depth-first until the first integral
    solution and then switches to best-first.
    """
    model.validate()
    if time_limit is None:
        time_limit = get_setting(BRANCH_AND_BOUND, "time_limit")
    node_limit = node_limit or BRANCH_AND_BOUND["node_limit"]
    int_tol = TOLERANCES["integrality"]
    prune_tol = TOLERANCES["feasibility"]

    started = time.perf_counter()
    c, A, senses, b = model.to_arrays()
    base_lb, base_ub = model.bounds()
    binaries = np.flatnonzero(model.binary_mask)
    offset = model.objective_constant

    best_obj = np.inf
    best_x = None
    if incumbent is not None:
        x = np.asarray(incumbent, dtype=float).copy()
        x[binaries] = np.round(x[binaries])
        violated = model.check(x, prune_tol)
        if violated:
            logger.warning(f"Ignoring incumbent for '{model.name}': violates {violated[:3]}")
        else:
            best_obj, best_x = float(c @ x), x
            logger.debug(f"Starting from incumbent {best_obj + offset:.6f}")
    limit = np.inf if cutoff is None else cutoff - offset + prune_tol
    counter = itertools.count()
    diving = best_x is None
    heap = [(_priority(-np.inf, 0, diving), next(counter), -np.inf, _Node())]
    nodes = 0
    lp_iterations = 0
    lp_failures = 0
    status = None

    def pruned(bound: float) -> bool:
        if bound > limit:
            return True
        return best_x is not None and bound >= best_obj - prune_tol

    while heap:
        # the root LP is always solved so a bound exists
        if nodes and time_limit is not None and time.perf_counter() - started > time_limit:
            status = TIME_LIMIT
            break
        if nodes >= node_limit:
            status = NODE_LIMIT
            break
        _, _, parent_bound, node = heapq.heappop(heap)
        if pruned(parent_bound):
            continue

        lb, ub = base_lb.copy(), base_ub.copy()
        for idx, value in node.fixed.items():
            lb[idx] = ub[idx] = value
        result = solve_lp(c, A, senses, b, lb, ub)
        nodes += 1
        lp_iterations += result.iterations
        if result.status == ITERATION_LIMIT:
            lp_failures += 1
            logger.debug(f"Node {nodes}: LP hit the iteration limit, node dropped")
            continue
        if result.status == INFEASIBLE:
            continue
        bound = result.objective
        if pruned(bound):
            continue

        branch_var = _most_fractional(result.x, binaries, int_tol)
        if branch_var is None:
            x = result.x.copy()
            x[binaries] = np.round(x[binaries])
            if bound < best_obj - prune_tol:
                best_obj, best_x = bound, x
                logger.debug(f"Node {nodes}: new incumbent {best_obj + offset:.6f} at depth {node.depth}")
            if diving:
                diving = False
                heap = [(_priority(entry[2], entry[3].depth, False), entry[1], entry[2], entry[3]) for entry in heap]
                heapq.heapify(heap)
            continue

        # the side the LP leans to is explored first
        nearest = int(round(result.x[branch_var]))
        for value in (nearest, 1 - nearest):
            child = _Node(fixed={**node.fixed, branch_var: value}, depth=node.depth + 1)
            heapq.heappush(heap, (_priority(bound, child.depth, diving), next(counter), bound, child))

    elapsed = time.perf_counter() - started
    open_bound = min((entry[2] for entry in heap), default=np.inf)
    if status is None:
        if best_x is None:
            status = ITERATION_LIMIT if lp_failures else INFEASIBLE
        else:
            status = ITERATION_LIMIT if lp_failures else OPTIMAL
        open_bound = best_obj

    objective = None if best_x is None else best_obj + offset
    bound = min(open_bound, best_obj)
    bound = None if not np.isfinite(bound) else bound + offset
    logger.info(
        f"Branch-and-bound on '{model.name}': {status}, objective={objective}, "
        f"nodes={nodes}, {elapsed:.2f}s"
    )
    return MilpSolution(
        status=status,
        objective=objective,
        values=best_x,
        names=model.names,
        nodes=nodes,
        solve_time=elapsed,
        bound=bound,
        iterations=lp_iterations,
    )
