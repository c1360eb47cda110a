"""
Sequencer
Exact solver over the permutation space. Each sequence is scheduled by the
ASAP rule when idle costs are non-increasing and by a fixed-assignment MILP
otherwise; above the enumeration cap the full MILP is branch-and-bounded.
"""

import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional

import numpy as np

from config.solver_config import BRANCH_AND_BOUND, ENUMERATION, FORMULATION, TOLERANCES, get_setting
from milp.branch_and_bound import branch_and_bound
from milp.builders import (
    build_raswtg0,
    build_raswtg_k,
    extract_schedule,
    fix_sequence,
    prefix_block_count,
    warm_start,
)
from milp.linear_model import INFEASIBLE, OPTIMAL, TIME_LIMIT
from scheduling.adversary import breakpoint_value, top_window_load, worst_case_cost
from scheduling.errors import InvalidInputError
from scheduling.model import Instance, Schedule, Sequence, is_constant, is_non_increasing
from scheduling.rules import asap_schedule, asap_times, pta_solve

logger = logging.getLogger(__name__)

METHODS = ("asap-enum", "milp-enum", "full-milp")


@dataclass(frozen=True, eq=False)
class SolveOutcome:
    schedule: Schedule
    objective: float
    optimal: bool
    sequences_explored: int
    method: str
    status: str = OPTIMAL
    gap: float = 0.0
    solve_time: float = 0.0
    bound: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "schedule": self.schedule.to_dict(),
            "objective": self.objective,
            "optimal": self.optimal,
            "status": self.status,
            "method": self.method,
            "sequences_explored": self.sequences_explored,
            "gap": self.gap,
            "bound": self.bound,
            "solve_time": round(self.solve_time, 4),
        }


class _Incumbent:
    """Best schedule found so far; writes only improve it (ties go to the smaller permutation)."""

    def __init__(self, schedule: Schedule, objective: float):
        self._lock = threading.Lock()
        self.schedule = schedule
        self.objective = objective

    def offer(self, schedule: Schedule, objective: float) -> bool:
        tol = TOLERANCES["witness"]
        with self._lock:
            better = objective < self.objective - tol
            tie = abs(objective - self.objective) <= tol and schedule.perm < self.schedule.perm
            if better or tie:
                self.schedule, self.objective = schedule, objective
                return True
        return False

    def snapshot(self) -> tuple:
        with self._lock:
            return self.objective, self.schedule.perm


def symmetry_classes(inst: Instance) -> list:
    """Class id per customer; customers with identical (p_lower, p_upper, W) share a class."""
    keys = {}
    classes = []
    for j in range(inst.n):
        key = (float(inst.service_lb[j]), float(inst.service_ub[j]), float(inst.wait_guarantee[j]))
        classes.append(keys.setdefault(key, len(keys)))
    return classes


def sequence_lower_bound(prefix, inst: Instance) -> float:
    """
    Lower bound on the worst-case cost of every ASAP schedule whose sequence
    starts with `prefix` (customers of the first m appointments).

    ASAP times of the prefix do not depend on later customers, so the worst
    breakpoint scenarios that split inside the prefix are already fixed;
    unplaced customers only join their maximum-service suffix. For a full
    prefix the pure-idle breakpoint is added and the bound is exact.
    """
    prefix = list(prefix)
    m, n, k = len(prefix), inst.n, inst.show_count
    unplaced = [j for j in range(n) if j not in set(prefix)]
    top = np.sort(inst.service_ub)[::-1][:k].sum() if k else 0.0
    floor = inst.overtime_cost * max(float(top) - inst.horizon, 0.0)
    if m == 0:
        return floor

    start = asap_times(inst, prefix)
    start_ext = np.append(start, inst.horizon) if m == n else start
    lb_seq = inst.service_lb[prefix]
    ub_seq = inst.service_ub[prefix]
    tail = inst.service_ub[unplaced]
    breakpoints = range(n + 1) if m == n else range(m)
    best = floor
    for b in breakpoints:
        value, _ = breakpoint_value(inst, start_ext, lb_seq, ub_seq, b, tail)
        best = max(best, value)
    return float(best)


def repair_schedule(inst: Instance, schedule: Schedule) -> Schedule:
    """Raise start times by rounding noise so every waiting guarantee holds exactly."""
    perm = list(schedule.perm)
    start = schedule.start.copy()
    if inst.show_count >= 1:
        ub_seq = inst.service_ub[perm]
        for i in range(1, inst.n):
            need = top_window_load(start, ub_seq, i, inst.show_count - 1) - inst.wait_guarantee[perm[i]]
            start[i] = max(start[i], need, 0.0)
    return Schedule(schedule.sequence, start)


def _prefer_asap(inst: Instance, schedule: Schedule, objective: float) -> tuple:
    """Report ASAP times whenever they are at least as good for the same sequence."""
    asap = asap_schedule(inst, schedule.sequence)
    asap_value = worst_case_cost(asap, inst).value
    if asap_value <= objective + TOLERANCES["witness"]:
        return asap, asap_value
    return schedule, objective


def _worst_case_model(inst: Instance):
    """Exact model when it fits, else the ordered general-k model; returns (model, exact)."""
    if inst.zero_noshow:
        return build_raswtg0(inst), True
    if prefix_block_count(inst) <= FORMULATION["max_prefix_blocks"]:
        return build_raswtg_k(inst, prefix="enumerated"), True
    return build_raswtg_k(inst), False


def _initial_incumbent(inst: Instance) -> _Incumbent:
    if is_constant(inst.idle_cost) and inst.zero_noshow:
        schedule = pta_solve(inst)
    else:
        schedule = asap_schedule(inst, Sequence.identity(inst.n))
    return _Incumbent(schedule, worst_case_cost(schedule, inst).value)


class _Enumerator:
    """Depth-first search over sequences in lexicographic order."""

    def __init__(self, inst: Instance, method: str, incumbent: _Incumbent, deadline: Optional[float]):
        self.inst = inst
        self.method = method
        self.incumbent = incumbent
        self.deadline = deadline
        self.classes = symmetry_classes(inst)
        self.explored = 0
        self.timed_out = False
        self.inexact = False
        self._count_lock = threading.Lock()
        self._base_model = None
        self._exact_model = True
        if method == "milp-enum":
            self._base_model, self._exact_model = _worst_case_model(inst)

    def _allowed(self, prefix: list, customer: int) -> bool:
        # a customer may only follow its lower-indexed twins
        cls = self.classes[customer]
        return all(j in prefix for j in range(customer) if self.classes[j] == cls)

    def _prunable(self, prefix: list) -> bool:
        if self.method != "asap-enum":
            return False
        bound = sequence_lower_bound(prefix, self.inst)
        objective, perm = self.incumbent.snapshot()
        tol = TOLERANCES["witness"]
        if bound > objective + tol:
            return True
        return bound >= objective - tol and tuple(perm[:len(prefix)]) < tuple(prefix)

    def _evaluate(self, perm: tuple):
        seq = Sequence(perm)
        asap = asap_schedule(self.inst, seq)
        value = worst_case_cost(asap, self.inst).value
        if self.method == "asap-enum":
            return asap, value
        model = fix_sequence(self._base_model.copy(), seq)
        remaining = None if self.deadline is None else max(self.deadline - time.perf_counter(), 0.0)
        solution = branch_and_bound(model, time_limit=remaining, cutoff=value)
        if not solution.has_solution:
            return asap, value
        schedule = repair_schedule(self.inst, extract_schedule(solution, self.inst))
        milp_value = worst_case_cost(schedule, self.inst).value
        if not self._exact_model and min(milp_value, value) > solution.objective + TOLERANCES["witness"]:
            self.inexact = True
        if milp_value < value - TOLERANCES["witness"]:
            return schedule, milp_value
        return asap, value

    def search(self, prefix: list):
        if self.deadline is not None and time.perf_counter() > self.deadline:
            self.timed_out = True
            return
        n = self.inst.n
        if len(prefix) == n:
            with self._count_lock:
                self.explored += 1
            schedule, value = self._evaluate(tuple(prefix))
            self.incumbent.offer(schedule, value)
            return
        if prefix and self._prunable(prefix):
            return
        for customer in range(n):
            if customer in prefix or not self._allowed(prefix, customer):
                continue
            self.search(prefix + [customer])


def _choose_method(inst: Instance, method: Optional[str], max_enum_n: int) -> str:
    if method is not None:
        if method not in METHODS:
            raise InvalidInputError(f"unknown method '{method}', expected one of {METHODS}")
        return method
    if inst.n > max_enum_n:
        return "full-milp"
    return "asap-enum" if is_non_increasing(inst.idle_cost) else "milp-enum"


def _full_milp(inst: Instance, incumbent: _Incumbent, time_limit: Optional[float], started: float) -> SolveOutcome:
    model, exact = _worst_case_model(inst)
    warm = warm_start(model, incumbent.schedule)
    remaining = None if time_limit is None else max(time_limit - (time.perf_counter() - started), 0.0)
    solution = branch_and_bound(model, time_limit=remaining, cutoff=incumbent.objective,
                                incumbent=None if warm is None else warm.values)
    if solution.has_solution:
        schedule = repair_schedule(inst, extract_schedule(solution, inst))
        value = worst_case_cost(schedule, inst).value
        schedule, value = _prefer_asap(inst, schedule, value)
        incumbent.offer(schedule, value)
    # infeasible under the cutoff means nothing beats the incumbent;
    # ordered-model values are lower bounds only
    optimal = solution.status == INFEASIBLE or (
        solution.status == OPTIMAL
        and (exact or incumbent.objective <= solution.objective + TOLERANCES["witness"])
    )
    gap = 0.0 if optimal or solution.bound is None else max(incumbent.objective - solution.bound, 0.0)
    return SolveOutcome(
        schedule=incumbent.schedule,
        objective=incumbent.objective,
        optimal=optimal,
        sequences_explored=0,
        method="full-milp",
        status=OPTIMAL if solution.status == INFEASIBLE else solution.status,
        gap=gap,
        solve_time=time.perf_counter() - started,
        bound=solution.bound,
    )


def exact_solve(inst: Instance, method: Optional[str] = None, time_limit: Optional[float] = None,
                threads: Optional[int] = None, max_enum_n: Optional[int] = None) -> SolveOutcome:
    """Minimum worst-case-cost schedule meeting every waiting guarantee."""
    started = time.perf_counter()
    max_enum_n = max_enum_n or ENUMERATION["max_enum_n"]
    threads = threads or get_setting(ENUMERATION, "threads")
    if time_limit is None:
        time_limit = get_setting(BRANCH_AND_BOUND, "time_limit")
    method = _choose_method(inst, method, max_enum_n)
    incumbent = _initial_incumbent(inst)
    logger.info(f"Exact solve: n={inst.n}, k={inst.show_count}, method={method}, threads={threads}")

    if method == "full-milp":
        outcome = _full_milp(inst, incumbent, time_limit, started)
        logger.info(f"Exact solve finished: objective={outcome.objective:.6f}, status={outcome.status}")
        return outcome

    deadline = None if time_limit is None else started + time_limit
    enumerator = _Enumerator(inst, method, incumbent, deadline)
    first = [j for j in range(inst.n) if enumerator._allowed([], j)]
    if threads > 1 and len(first) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda j: enumerator.search([j]), first))
    else:
        for j in first:
            enumerator.search([j])

    objective, _ = incumbent.snapshot()
    status = TIME_LIMIT if enumerator.timed_out else OPTIMAL
    outcome = SolveOutcome(
        schedule=incumbent.schedule,
        objective=objective,
        optimal=not (enumerator.timed_out or enumerator.inexact),
        sequences_explored=enumerator.explored,
        method=method,
        status=status,
        solve_time=time.perf_counter() - started,
    )
    logger.info(
        f"Exact solve finished: objective={objective:.6f}, sequences={enumerator.explored}, "
        f"status={status}, {outcome.solve_time:.2f}s"
    )
    return outcome
