"""
Scheduling Rules
Polynomial-time constructions:

    asap_schedule     earliest start times meeting every worst-case waiting
                      guarantee for a fixed sequence (optimal when idle costs
                      are non-increasing)
    svf_wtg_sequence  order by (p_upper - p_lower) + (1 + c_o) * W
                      (optimal with constant idle costs and no no-shows)
    pta_solve         the two combined
"""

import logging

import numpy as np

from config.solver_config import TOLERANCES
from milp.linear_model import LinearModel
from milp.simplex import simplex_solve
from scheduling.adversary import check_feasibility, top_window_load
from scheduling.errors import RegimeError
from scheduling.model import Instance, Schedule, Sequence, is_constant, is_non_increasing

logger = logging.getLogger(__name__)


def regime_warnings(inst: Instance, rule: str) -> list:
    """Conditions under which `rule` ("asap", "svf-wtg" or "pta") loses its optimality guarantee."""
    warnings = []
    if rule == "asap" and not is_non_increasing(inst.idle_cost):
        warnings.append("idle costs are not non-increasing: ASAP times are feasible but may be suboptimal")
    if rule in ("svf-wtg", "pta"):
        if not is_constant(inst.idle_cost):
            warnings.append("idle costs are not constant")
        if not inst.zero_noshow:
            warnings.append(f"show_count {inst.show_count} < n = {inst.n}")
    return warnings


def _window_lp_load(start, ub_seq, i: int, budget: int) -> float:
    """Line-5 form of the window load: solve min budget*alpha + sum z, z + alpha >= p_upper."""
    best = -np.inf
    p_max = float(max(ub_seq[:i])) if i else 0.0
    for l in range(i):
        if i - l <= budget:
            load = float(np.sum(ub_seq[l:i]))
        else:
            model = LinearModel(f"window[{l},{i}]")
            model.add_var("alpha", 0.0, p_max)
            for s in range(l, i):
                model.add_var(f"z{s}", 0.0, p_max)
                model.add_constraint({"alpha": 1, f"z{s}": 1}, ">=", float(ub_seq[s]))
            model.set_objective({"alpha": budget, **{f"z{s}": 1 for s in range(l, i)}})
            load = simplex_solve(model).objective
        best = max(best, float(start[l]) + load)
    return best


def asap_times(inst: Instance, customers, use_lp: bool = False) -> np.ndarray:
    """ASAP start times of the appointments taken by `customers` (a full or partial sequence)."""
    customers = list(customers)
    ub_seq = inst.service_ub[customers]
    start = np.zeros(len(customers))
    if inst.show_count == 0:
        return start
    budget = inst.show_count - 1
    for i in range(1, len(customers)):
        if use_lp:
            load = _window_lp_load(start, ub_seq, i, budget)
        else:
            load = top_window_load(start, ub_seq, i, budget)
        start[i] = max(load - inst.wait_guarantee[customers[i]], 0.0)
    return start


def asap_schedule(inst: Instance, seq: Sequence, use_lp: bool = False, with_warnings: bool = False):
    """
    A_1 = 0 and A_i = (max_{l<i} A_l + U_l - W_{perm[i]})^+, where U_l is the
    worst-case load of appointments l..i-1 with at most k-1 shows.

    use_lp solves each window load as a small LP on the internal simplex
    instead of the closed-form top-(k-1) sum; both give the same times.
    with_warnings returns (schedule, regime warnings) instead of the schedule.
    """
    warnings = regime_warnings(inst, "asap")
    for message in warnings:
        logger.debug(message)
    schedule = Schedule(seq, asap_times(inst, seq.perm, use_lp))
    return (schedule, warnings) if with_warnings else schedule


def full_load_schedule(inst: Instance, seq: Sequence) -> Schedule:
    """Closed-form feasible times A_i = (sum_{s<i} p_upper - W_{perm[i]})^+, valid for any k."""
    perm = list(seq.perm)
    prefix = np.concatenate(([0.0], np.cumsum(inst.service_ub[perm])[:-1]))
    start = np.maximum(prefix - inst.wait_guarantee[perm], 0.0)
    start[0] = 0.0
    return Schedule(seq, start)


def svf_wtg_key(inst: Instance) -> np.ndarray:
    return (inst.service_ub - inst.service_lb) + (1.0 + inst.overtime_cost) * inst.wait_guarantee


def svf_wtg_sequence(inst: Instance, with_warnings: bool = False):
    """Customers by non-decreasing key, ties by customer index; with_warnings as in asap_schedule."""
    warnings = regime_warnings(inst, "svf-wtg")
    for message in warnings:
        logger.warning(f"SVF-WTG outside its optimality regime: {message}")
    key = svf_wtg_key(inst)
    order = sorted(range(inst.n), key=lambda j: (round(float(key[j]), 9), j))
    sequence = Sequence(tuple(order))
    return (sequence, warnings) if with_warnings else sequence


def pta_solve(inst: Instance) -> Schedule:
    """Globally optimal schedule for constant idle costs and no no-shows."""
    problems = regime_warnings(inst, "pta")
    if problems:
        raise RegimeError(f"pta requires constant idle costs and show_count = n: {'; '.join(problems)}")
    return asap_schedule(inst, svf_wtg_sequence(inst))


def start_is_minimal(inst: Instance, schedule: Schedule, eps: float = 1e-3) -> bool:
    """True when lowering any positive A_i by eps breaks a waiting guarantee."""
    tol = TOLERANCES["kernel"]
    for i in range(1, inst.n):
        if schedule.start[i] <= tol:
            continue
        lowered = schedule.start.copy()
        lowered[i] = max(lowered[i] - eps, 0.0)
        if check_feasibility(Schedule(schedule.sequence, lowered), inst).feasible:
            return False
    return True
