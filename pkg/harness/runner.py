"""
Runner
Method dispatch and safe execution with friendly errors and exit codes.
"""

import logging
import os
import time
import traceback
from dataclasses import dataclass
from typing import Optional

import numpy as np

from config.solver_config import EXIT_CODES, TOLERANCES
from milp.branch_and_bound import branch_and_bound
from milp.builders import build_raswtg0, build_raswtg_k, build_saa_rwtg, build_wsras, extract_schedule, warm_start
from milp.linear_model import NODE_LIMIT, OPTIMAL, TIME_LIMIT
from scheduling.adversary import worst_case_cost
from scheduling.errors import (
    InfeasibleScheduleError,
    InvalidInputError,
    RegimeError,
    SchedulingError,
    SizeCapError,
    SolverError,
    UnsupportedCaseError,
)
from scheduling.model import Instance, Schedule
from scheduling.rules import asap_schedule, pta_solve, svf_wtg_sequence
from scheduling.sequencer import exact_solve, repair_schedule

logger = logging.getLogger(__name__)

METHODS = ("pta", "asap", "milp0", "milp", "wsras", "saa", "exact")


@dataclass(frozen=True, eq=False)
class MethodResult:
    """A schedule from any method, with its worst-case cost and the method's own objective."""
    method: str
    schedule: Schedule
    objective: float                  # worst-case idle + overtime cost
    optimal: bool
    status: str = OPTIMAL
    model_objective: Optional[float] = None
    solve_time: float = 0.0
    details: Optional[dict] = None

    def to_dict(self) -> dict:
        return {
            "method": self.method,
            "schedule": self.schedule.to_dict(),
            "objective": self.objective,
            "model_objective": self.model_objective,
            "optimal": self.optimal,
            "status": self.status,
            "solve_time": round(self.solve_time, 4),
            "details": self.details or {},
        }


def _seed_schedule(inst: Instance) -> Schedule:
    """ASAP times on the SVF-WTG order: feasible for every model."""
    return asap_schedule(inst, svf_wtg_sequence(inst))


def _from_milp(method: str, model, inst: Instance, time_limit: Optional[float], started: float) -> MethodResult:
    seed = _seed_schedule(inst)
    warm = warm_start(model, seed)
    remaining = None if time_limit is None else max(time_limit - (time.perf_counter() - started), 0.0)
    solution = branch_and_bound(model, time_limit=remaining, incumbent=None if warm is None else warm.values)
    details = solution.to_dict()
    if not solution.has_solution:
        if solution.status not in (TIME_LIMIT, NODE_LIMIT):
            raise SolverError(f"{method} found no feasible schedule (status {solution.status})")
        logger.warning(f"{method} stopped at {solution.status} without a solution; returning the ASAP schedule")
        return MethodResult(
            method=method,
            schedule=seed,
            objective=worst_case_cost(seed, inst).value,
            optimal=False,
            status=TIME_LIMIT,
            solve_time=time.perf_counter() - started,
            details={**details, "fallback": "asap"},
        )
    schedule = extract_schedule(solution, inst)
    if method != "wsras":
        schedule = repair_schedule(inst, schedule)
    objective = worst_case_cost(schedule, inst).value
    optimal = solution.status == OPTIMAL
    if method == "milp" and optimal:
        # the ordered general-k model can sit below the true worst case
        optimal = objective <= solution.objective + TOLERANCES["witness"]
    return MethodResult(
        method=method,
        schedule=schedule,
        objective=objective,
        optimal=optimal,
        status=TIME_LIMIT if solution.status == NODE_LIMIT else solution.status,
        model_objective=solution.objective,
        solve_time=time.perf_counter() - started,
        details=details,
    )


def solve_method(inst: Instance, method: str, wait_cost: float = 0.0, samples=None,
                 time_limit: Optional[float] = None) -> MethodResult:
    """Solve `inst` with one named method."""
    started = time.perf_counter()
    if method not in METHODS:
        raise InvalidInputError(f"unknown method '{method}', expected one of {', '.join(METHODS)}")
    logger.info(f"Solving n={inst.n}, k={inst.show_count} with {method}")

    if method in ("pta", "asap"):
        details = None
        if method == "pta":
            schedule = pta_solve(inst)
        else:
            sequence, order_warnings = svf_wtg_sequence(inst, with_warnings=True)
            schedule, time_warnings = asap_schedule(inst, sequence, with_warnings=True)
            details = {"regime_warnings": order_warnings + time_warnings}
        return MethodResult(
            method=method,
            schedule=schedule,
            objective=worst_case_cost(schedule, inst).value,
            optimal=method == "pta",
            solve_time=time.perf_counter() - started,
            details=details,
        )
    if method == "milp0":
        return _from_milp(method, build_raswtg0(inst), inst, time_limit, started)
    if method == "milp":
        return _from_milp(method, build_raswtg_k(inst), inst, time_limit, started)
    if method == "wsras":
        return _from_milp(method, build_wsras(inst, wait_cost), inst, time_limit, started)
    if method == "saa":
        if samples is None or len(samples) == 0:
            raise InvalidInputError("saa needs service-time samples (--samples)")
        return _from_milp(method, build_saa_rwtg(inst, np.asarray(samples, dtype=float)), inst, time_limit, started)

    outcome = exact_solve(inst, time_limit=time_limit)
    return MethodResult(
        method=method,
        schedule=outcome.schedule,
        objective=outcome.objective,
        optimal=outcome.optimal,
        status=outcome.status,
        model_objective=outcome.objective,
        solve_time=outcome.solve_time,
        details={"method": outcome.method, "sequences_explored": outcome.sequences_explored,
                 "gap": outcome.gap, "bound": outcome.bound},
    )


def exit_code_for(error: BaseException) -> int:
    if isinstance(error, InfeasibleScheduleError):
        return EXIT_CODES["infeasible"]
    if isinstance(error, RegimeError):
        return EXIT_CODES["regime"]
    if isinstance(error, (InvalidInputError, SizeCapError)):
        return EXIT_CODES["validation"]
    if isinstance(error, UnsupportedCaseError):
        return EXIT_CODES["regime"]
    return EXIT_CODES["error"]


def _friendly(error: BaseException) -> str:
    if isinstance(error, InfeasibleScheduleError):
        return f"Infeasible schedule: {error}"
    if isinstance(error, RegimeError):
        return f"Method outside its regime: {error}"
    if isinstance(error, UnsupportedCaseError):
        return f"Unsupported case: {error}"
    if isinstance(error, (InvalidInputError, SizeCapError)):
        return f"Invalid input: {error}"
    if isinstance(error, SolverError):
        return f"Solver failure: {error}"
    if isinstance(error, SchedulingError):
        return f"Scheduling error: {error}"
    return f"An error occurred: {error}"


def run_safe(fn, *args, **kwargs) -> dict:
    """
    Run fn(*args, **kwargs) with full error handling.

    Returns:
        {
            "success": bool,
            "result": fn's return value, or a friendly error message,
            "duration_seconds": float,
            "error": str or None,
            "exit_code": int
        }
    """
    start = time.perf_counter()
    try:
        result = fn(*args, **kwargs)
        status = getattr(result, "status", OPTIMAL)
        return {
            "success": True,
            "result": result,
            "duration_seconds": time.perf_counter() - start,
            "error": None,
            "exit_code": EXIT_CODES["time_limit"] if status == TIME_LIMIT else EXIT_CODES["success"],
        }
    except Exception as e:
        if os.getenv("DEBUG"):
            logger.error(traceback.format_exc())
        return {
            "success": False,
            "result": _friendly(e),
            "duration_seconds": time.perf_counter() - start,
            "error": f"{type(e).__name__}: {e}",
            "exit_code": exit_code_for(e),
        }
