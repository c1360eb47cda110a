"""
Oracle
Brute-force references for tests and audits. Everything here is written
straight from the cost and waiting definitions: all 2^n service corners,
all show-sets, all sequences, and start times searched on a grid.
"""

import itertools
import logging
from typing import Optional

import numpy as np

from config.solver_config import ORACLE, TOLERANCES
from scheduling.errors import InvalidInputError, SizeCapError
from scheduling.model import Instance, Schedule, Sequence

logger = logging.getLogger(__name__)

OBJECTIVES = ("robust", "wsras", "saa")


def _require(n: int, cap: int, what: str):
    if n > cap:
        raise SizeCapError(f"{what} is limited to n <= {cap}, got n = {n}")


def _corners(inst: Instance) -> np.ndarray:
    """All 2^n service vectors with each customer at p_lower or p_upper (rows, by customer)."""
    picks = np.array(list(itertools.product((0, 1), repeat=inst.n)), dtype=bool)
    return np.where(picks, inst.service_ub, inst.service_lb)


def _show_sets(n: int, k: int, forced: Optional[int] = None) -> np.ndarray:
    rows = []
    for chosen in itertools.combinations(range(n), k):
        if forced is not None and forced not in chosen:
            continue
        row = np.zeros(n, dtype=int)
        row[list(chosen)] = 1
        rows.append(row)
    return np.array(rows, dtype=int).reshape(-1, n)


def _scenario_grid(inst: Instance, perm, forced: Optional[int] = None) -> tuple:
    """(service, show) matrices by appointment over corners x show-sets."""
    corners = _corners(inst)[:, list(perm)]
    shows = _show_sets(inst.n, inst.show_count, forced)
    if shows.shape[0] == 0:
        return np.zeros((0, inst.n)), np.zeros((0, inst.n), dtype=int)
    shows = shows[:, list(perm)]
    service = np.repeat(corners, shows.shape[0], axis=0)
    show = np.tile(shows, (corners.shape[0], 1))
    return service, show


def _simulate(starts: np.ndarray, service: np.ndarray, show: np.ndarray, inst: Instance,
              wait_cost: float = 0.0) -> tuple:
    """
    Run the completion recursion for P start vectors against S scenarios.
    Returns (cost P x S, wait P x S x n).
    """
    P, n = starts.shape
    S = service.shape[0]
    realized = service * show
    completion = np.zeros((P, S))
    idle_cost = np.zeros((P, S))
    wait = np.zeros((P, S, n))
    for i in range(n):
        a = starts[:, i][:, None]
        wait[:, :, i] = show[None, :, i] * np.maximum(completion - a, 0.0)
        idle_cost += inst.idle_cost[i] * np.maximum(a - completion, 0.0)
        completion = np.maximum(a, completion) + realized[None, :, i]
    gap = inst.horizon - completion
    terminal = np.maximum(np.maximum(inst.idle_cost[-1] * gap, inst.overtime_cost * -gap), 0.0)
    cost = idle_cost + terminal + wait_cost * wait.sum(axis=2)
    return cost, wait


def brute_worst_cost(schedule: Schedule, inst: Instance) -> float:
    _require(inst.n, ORACLE["max_n"], "brute_worst_cost")
    service, show = _scenario_grid(inst, schedule.perm)
    cost, _ = _simulate(schedule.start[None, :], service, show, inst)
    return float(cost.max())


def brute_worst_wait(schedule: Schedule, inst: Instance, i: int) -> float:
    """Worst wait at appointment i (0-based) with its customer forced to show."""
    _require(inst.n, ORACLE["max_n"], "brute_worst_wait")
    service, show = _scenario_grid(inst, schedule.perm, forced=schedule.perm[i])
    if service.shape[0] == 0:
        return 0.0
    _, wait = _simulate(schedule.start[None, :], service, show, inst)
    return float(wait[0, :, i].max())


def _window_maxima(inst: Instance, perm) -> dict:
    """Largest maximum-service total of at most k-1 customers in each window l..i-1."""
    ub_seq = inst.service_ub[list(perm)]
    picks = inst.show_count - 1
    maxima = {}
    for i in range(1, inst.n):
        for l in range(i):
            window = ub_seq[l:i]
            size = min(picks, len(window))
            maxima[(l, i)] = max(
                (float(sum(combo)) for combo in itertools.combinations(window, size)),
                default=0.0,
            )
    return maxima


def _grid_values(low: float, high: float, step: float, center: Optional[float] = None,
                 radius: Optional[float] = None) -> np.ndarray:
    if center is not None:
        low_c = max(low, center - radius)
        high_c = min(max(high, low), center + radius)
        first = np.ceil(round(low_c / step, 9)) * step
        values = np.arange(first, high_c + step / 2, step)
    else:
        values = np.arange(np.ceil(round(low / step, 9)) * step, max(high, low) + step / 2, step)
    values = values[(values >= low - 1e-12) & (values <= max(high, low) + 1e-12)]
    return np.unique(np.concatenate(([low], values)))


def _expand(inst: Instance, perm, objective: str, step: float, center=None, radius=None) -> np.ndarray:
    """All gridded start vectors for `perm` that meet the waiting guarantees."""
    n = inst.n
    guarded = objective != "wsras" and inst.show_count >= 1
    maxima = _window_maxima(inst, perm) if guarded else {}
    waits = inst.wait_guarantee[list(perm)]
    upper = inst.horizon if objective != "wsras" else max(inst.horizon, float(inst.service_ub.sum()))
    starts = np.zeros((1, 1))
    for i in range(1, n):
        rows = []
        for partial in starts:
            low = 0.0
            if guarded:
                low = max(max(partial[l] + maxima[(l, i)] for l in range(i)) - waits[i], 0.0)
            c = None if center is None else center[i]
            for value in _grid_values(low, max(low, upper), step, c, radius):
                rows.append(np.append(partial, value))
        starts = np.array(rows)
    return starts


def _objective_scenarios(inst: Instance, perm, objective: str, samples) -> tuple:
    perm = list(perm)
    n = inst.n
    if objective == "robust":
        return _scenario_grid(inst, perm)
    if objective == "wsras":
        lb, ub = inst.service_lb[perm], inst.service_ub[perm]
        service = np.array([np.where(np.arange(n) < b, lb, ub) for b in range(n + 1)])
        return service, np.ones_like(service, dtype=int)
    service = np.asarray(samples, dtype=float)[:, perm]
    return service, np.ones_like(service, dtype=int)


def _score(starts, inst, perm, objective, wait_cost, samples) -> np.ndarray:
    service, show = _objective_scenarios(inst, perm, objective, samples)
    cost, _ = _simulate(starts, service, show, inst, wait_cost if objective == "wsras" else 0.0)
    if objective == "saa":
        return cost.mean(axis=1)
    return cost.max(axis=1)


def brute_sequence_optimum(inst: Instance, resolution: Optional[float] = None, objective: str = "robust",
                           wait_cost: float = 0.0, samples=None, refine: bool = True):
    """
    Minimum over all sequences and gridded feasible start vectors.

    objective "robust" scores the worst case over corners and show-sets,
    "wsras" the worst breakpoint scenario of idle + wait_cost * waiting +
    overtime, "saa" the mean cost over `samples` (N x n, by customer).
    """
    from scheduling.sequencer import SolveOutcome

    _require(inst.n, ORACLE["max_sequence_n"], "brute_sequence_optimum")
    if objective not in OBJECTIVES:
        raise InvalidInputError(f"objective must be one of {OBJECTIVES}")
    if objective == "saa" and (samples is None or len(samples) == 0):
        raise InvalidInputError("the saa objective needs samples")
    coarse = resolution or ORACLE["coarse_grid"]
    fine = ORACLE["fine_grid"]

    best = (np.inf, None, None)
    explored = 0
    for perm in itertools.permutations(range(inst.n)):
        explored += 1
        starts = _expand(inst, perm, objective, coarse)
        scores = _score(starts, inst, perm, objective, wait_cost, samples)
        idx = int(np.argmin(scores))
        if refine and inst.n > 1:
            local = _expand(inst, perm, objective, fine, center=starts[idx], radius=ORACLE["refine_radius"])
            local_scores = _score(local, inst, perm, objective, wait_cost, samples)
            j = int(np.argmin(local_scores))
            if local_scores[j] < scores[idx] - TOLERANCES["kernel"]:
                starts, scores, idx = local, local_scores, j
        if scores[idx] < best[0] - TOLERANCES["kernel"]:
            best = (float(scores[idx]), perm, starts[idx])

    step = fine if refine else coarse
    gap = step * (float(inst.idle_cost.sum()) + inst.overtime_cost + wait_cost * inst.n)
    schedule = Schedule(Sequence(best[1]), best[2])
    return SolveOutcome(
        schedule=schedule,
        objective=best[0],
        optimal=False,
        sequences_explored=explored,
        method="grid",
        gap=gap,
    )


def corner_sufficiency_check(schedule: Schedule, inst: Instance, samples: Optional[int] = None,
                             seed: int = 0) -> bool:
    """True when no uniform interior scenario beats the closed-form worst case."""
    from scheduling.adversary import worst_case_cost

    _require(inst.n, ORACLE["max_sufficiency_n"], "corner_sufficiency_check")
    samples = samples or ORACLE["interior_samples"]
    rng = np.random.default_rng(seed)
    perm = list(schedule.perm)
    service = rng.uniform(inst.service_lb, inst.service_ub, size=(samples, inst.n))
    show = np.zeros((samples, inst.n), dtype=int)
    for row in range(samples):
        show[row, rng.choice(inst.n, size=inst.show_count, replace=False)] = 1
    cost, _ = _simulate(schedule.start[None, :], service[:, perm], show[:, perm], inst)
    bound = worst_case_cost(schedule, inst).value
    worst = float(cost.max())
    if worst > bound + TOLERANCES["kernel"]:
        logger.warning(f"Interior scenario cost {worst:.6f} exceeds worst case {bound:.6f}")
        return False
    return True
