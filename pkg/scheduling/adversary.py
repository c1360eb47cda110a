"""
Adversary
Worst-case scenarios for a fixed schedule, in closed form.

The cost adversary splits the appointments at a breakpoint b: appointments
before b take minimum service (idle maximization), appointments from b on
take maximum service (overtime maximization). `breakpoint` is the 0-based
index of the first maximum-service appointment; b = n means the pure-idle
scenario in which every appointment contributes to idle time.

The waiting adversary decomposes per appointment: customer perm[i] shows,
and at most k-1 of the earlier customers in any window show with maximum
service, so the worst load of a window is its top-(k-1) sum.
"""

import heapq
import logging
from dataclasses import dataclass, field

import numpy as np

from config.solver_config import TOLERANCES
from scheduling.errors import UnsupportedCaseError
from scheduling.model import Instance, Schedule, Scenario, evaluate

logger = logging.getLogger(__name__)

KERNEL_TOL = TOLERANCES["kernel"]


@dataclass(frozen=True, eq=False)
class AdversaryResult:
    value: float
    breakpoint: int
    scenario: Scenario

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "breakpoint": self.breakpoint,
            "service": self.scenario.service.tolist(),
            "show": self.scenario.show.tolist(),
        }


@dataclass(frozen=True, eq=False)
class FeasibilityReport:
    feasible: bool
    worst_wait: np.ndarray
    violations: list = field(default_factory=list)   # (appointment index, excess minutes)

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "worst_wait": self.worst_wait.tolist(),
            "violations": [{"appointment": i + 1, "excess": excess} for i, excess in self.violations],
        }


def top_window_load(start, ub_seq, i: int, budget: int) -> float:
    """
    max over l < i of start[l] + (sum of the `budget` largest ub_seq values in l..i-1).

    The window grows leftwards from i-1; a min-heap holds its current top values.
    Returns -inf when i == 0.
    """
    best = -np.inf
    heap: list = []
    heap_sum = 0.0
    for l in range(i - 1, -1, -1):
        if budget > 0:
            value = float(ub_seq[l])
            if len(heap) < budget:
                heapq.heappush(heap, value)
                heap_sum += value
            elif value > heap[0]:
                heap_sum += value - heapq.heapreplace(heap, value)
        best = max(best, float(start[l]) + heap_sum)
    return best


def worst_case_wait(schedule: Schedule, inst: Instance, i: int) -> float:
    """Worst-case waiting time of the customer at appointment i (0-based)."""
    if i < 0 or i >= inst.n:
        raise IndexError(f"appointment index {i} out of range for n={inst.n}")
    if inst.show_count == 0 or i == 0:
        return 0.0
    ub_seq = inst.service_ub[list(schedule.perm)]
    load = top_window_load(schedule.start, ub_seq, i, inst.show_count - 1)
    return max(load - schedule.start[i], 0.0)


def worst_case_waits(schedule: Schedule, inst: Instance) -> np.ndarray:
    return np.array([worst_case_wait(schedule, inst, i) for i in range(inst.n)])


def check_feasibility(schedule: Schedule, inst: Instance) -> FeasibilityReport:
    worst = worst_case_waits(schedule, inst)
    limits = inst.wait_guarantee[list(schedule.perm)]
    violations = [
        (i, float(worst[i] - limits[i]))
        for i in range(inst.n)
        if worst[i] > limits[i] + KERNEL_TOL
    ]
    return FeasibilityReport(feasible=not violations, worst_wait=worst, violations=violations)


def _suffix_overtime(inst: Instance, start_ext: np.ndarray, b: int, suffix_load: float) -> float:
    return inst.overtime_cost * max(start_ext[b] + suffix_load - inst.horizon, 0.0)


def _prefix_idle(inst: Instance, start_ext: np.ndarray, lb_seq: np.ndarray, shown: np.ndarray, b: int) -> float:
    """Idle cost of appointments 0..b with minimum service for shown prefix customers."""
    total = 0.0
    completion = 0.0
    for i in range(b + 1):
        total += inst.idle_cost[i] * max(start_ext[i] - completion, 0.0)
        if i < b:
            completion = max(start_ext[i], completion) + (lb_seq[i] if shown[i] else 0.0)
    return total


def _witness(inst: Instance, schedule: Schedule, b: int, shown_appointments) -> Scenario:
    perm = list(schedule.perm)
    service = inst.service_ub.copy()
    show = np.zeros(inst.n, dtype=int)
    for i, j in enumerate(perm):
        if i < b:
            service[j] = inst.service_lb[j]
    for i in shown_appointments:
        show[perm[i]] = 1
    return Scenario(service, show)


def worst_case_cost_zero_noshow(schedule: Schedule, inst: Instance) -> AdversaryResult:
    if not inst.zero_noshow:
        raise UnsupportedCaseError(
            f"zero-no-show adversary needs show_count = n = {inst.n}, got {inst.show_count}; "
            "use worst_case_cost"
        )
    perm = list(schedule.perm)
    lb_seq = inst.service_lb[perm]
    ub_seq = inst.service_ub[perm]
    start_ext = np.append(schedule.start, inst.horizon)

    # C_lower[i] = completion before appointment i under minimum service
    completion_lower = np.empty(inst.n + 1)
    completion_lower[0] = 0.0
    for i in range(inst.n):
        completion_lower[i + 1] = max(start_ext[i], completion_lower[i]) + lb_seq[i]
    idle_terms = inst.idle_cost * np.maximum(start_ext - completion_lower, 0.0)
    prefix_idle = np.cumsum(idle_terms)
    suffix_ub = np.concatenate((np.cumsum(ub_seq[::-1])[::-1], [0.0]))
    overtime = inst.overtime_cost * np.maximum(start_ext + suffix_ub - inst.horizon, 0.0)
    values = prefix_idle + overtime

    b = _first_argmax(values)
    scenario = _witness(inst, schedule, b, range(inst.n))
    return AdversaryResult(value=float(values[b]), breakpoint=b, scenario=scenario)


def _first_argmax(values) -> int:
    best = 0
    for idx in range(1, len(values)):
        if values[idx] > values[best] + KERNEL_TOL:
            best = idx
    return best


def _best_prefix_shows(inst: Instance, start_ext, lb_seq, b: int, m: int):
    """
    Choose exactly m shows among appointments 0..b-1 maximizing prefix idle cost.

    Dynamic program over appointments with one Pareto frontier per show count:
    a state (completion, cost) dominates another with larger completion and
    smaller cost, since later idle time never grows with the completion time.
    Returns (idle cost up to and including appointment b, chosen appointments).
    """
    # frontier[count] -> list of (completion, cost, chosen)
    frontier = {0: [(0.0, 0.0, ())]}
    for i in range(b):
        remaining = b - i - 1
        nxt: dict = {}
        for count, states in frontier.items():
            for completion, cost, chosen in states:
                cost_here = cost + inst.idle_cost[i] * max(start_ext[i] - completion, 0.0)
                begin = max(start_ext[i], completion)
                if count + remaining >= m:
                    nxt.setdefault(count, []).append((begin, cost_here, chosen))
                if count < m:
                    nxt.setdefault(count + 1, []).append((begin + lb_seq[i], cost_here, chosen + (i,)))
        frontier = {count: _pareto(states) for count, states in nxt.items()}

    best = None
    for completion, cost, chosen in frontier.get(m, []):
        total = cost + inst.idle_cost[b] * max(start_ext[b] - completion, 0.0)
        if best is None or total > best[0] + KERNEL_TOL or (
            abs(total - best[0]) <= KERNEL_TOL and chosen < best[1]
        ):
            best = (total, chosen)
    return best


def _pareto(states: list) -> list:
    states.sort(key=lambda s: (s[0], -s[1], s[2]))
    kept = []
    best_cost = -np.inf
    for state in states:
        if state[1] > best_cost + KERNEL_TOL:
            kept.append(state)
            best_cost = state[1]
    return kept


def _suffix_top(ub_seq, b: int, k: int) -> tuple:
    """Indices of the k largest ub values among appointments b..n-1, lowest index on ties."""
    order = sorted(range(b, len(ub_seq)), key=lambda i: (-ub_seq[i], i))
    return tuple(sorted(order[:k]))


def breakpoint_value(inst: Instance, start_ext, lb_seq, ub_seq, b: int, tail=()) -> tuple:
    """
    Worst cost among scenarios split at breakpoint b: minimum service before b,
    maximum service from b on, exactly k shows.

    `tail` holds maximum service times of customers not yet placed; they join
    the suffix (used for bounds on partial sequences). Returns the value and
    the shown appointment indices (tail positions numbered after ub_seq).
    """
    k = inst.show_count
    suffix_values = np.concatenate((np.asarray(ub_seq, dtype=float), np.asarray(tail, dtype=float)))
    suffix_size = len(suffix_values) - b
    if k <= suffix_size:
        shows = _suffix_top(suffix_values, b, k)
        idle = _prefix_idle(inst, start_ext, lb_seq, np.zeros(len(lb_seq), dtype=bool), b)
        load = float(sum(suffix_values[i] for i in shows))
    else:
        idle, prefix_shows = _best_prefix_shows(inst, start_ext, lb_seq, b, k - suffix_size)
        shows = prefix_shows + tuple(range(b, len(suffix_values)))
        load = float(suffix_values[b:].sum())
    return idle + _suffix_overtime(inst, start_ext, b, load), shows


def worst_case_cost(schedule: Schedule, inst: Instance) -> AdversaryResult:
    """Worst-case idle plus overtime cost over the box and all show-sets of size k."""
    if inst.zero_noshow:
        return worst_case_cost_zero_noshow(schedule, inst)

    n = inst.n
    perm = list(schedule.perm)
    lb_seq = inst.service_lb[perm]
    ub_seq = inst.service_ub[perm]
    start_ext = np.append(schedule.start, inst.horizon)

    best_value, best_b, best_shows = -np.inf, 0, ()
    for b in range(n + 1):
        value, shows = breakpoint_value(inst, start_ext, lb_seq, ub_seq, b)
        if value > best_value + KERNEL_TOL:
            best_value, best_b, best_shows = value, b, shows

    scenario = _witness(inst, schedule, best_b, best_shows)
    if logger.isEnabledFor(logging.DEBUG):
        heuristic = gamma_rule_cost(schedule, inst)
        if heuristic < best_value - TOLERANCES["witness"]:
            logger.debug(
                f"gamma-rule prefix selection under-estimates worst case: "
                f"{heuristic:.6f} < {best_value:.6f}"
            )
    return AdversaryResult(value=float(best_value), breakpoint=best_b, scenario=scenario)


def gamma_rule_cost(schedule: Schedule, inst: Instance) -> float:
    """
    Worst-case cost when the extra prefix shows are picked greedily by the
    smallest c(i) * p_lower, where c(i) is the idle cost of the next appointment
    with positive idle time under minimum service (max cost if none).

    Diagnostic only: this selection can miss the worst case.
    """
    n, k = inst.n, inst.show_count
    perm = list(schedule.perm)
    lb_seq = inst.service_lb[perm]
    ub_seq = inst.service_ub[perm]
    start_ext = np.append(schedule.start, inst.horizon)
    max_cost = float(inst.idle_cost[:-1].max())

    best = -np.inf
    for b in range(n + 1):
        suffix_size = n - b
        shown = np.zeros(n, dtype=bool)
        if k <= suffix_size:
            load = float(sum(ub_seq[i] for i in _suffix_top(ub_seq, b, k)))
        else:
            m = k - suffix_size
            completion = np.zeros(b + 1)
            for i in range(b):
                completion[i + 1] = max(start_ext[i], completion[i]) + lb_seq[i]
            positive = [i for i in range(1, b + 1) if start_ext[i] - completion[i] > KERNEL_TOL]
            weights = []
            for i in range(b):
                later = [l for l in positive if l > i]
                c_next = inst.idle_cost[later[0]] if later else max_cost
                weights.append((c_next * lb_seq[i], i))
            for _, i in sorted(weights)[:m]:
                shown[i] = True
            load = float(ub_seq[b:].sum())
        value = _prefix_idle(inst, start_ext, lb_seq, shown, b) + _suffix_overtime(inst, start_ext, b, load)
        best = max(best, value)
    return float(best)


def witness_matches(schedule: Schedule, inst: Instance, result: AdversaryResult) -> bool:
    """True when evaluating the witness scenario reproduces the reported value."""
    report = evaluate(schedule, result.scenario, inst)
    return abs(report.total_cost - result.value) <= TOLERANCES["witness"]
