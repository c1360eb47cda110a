"""
Verify
Case-table smoke runner: hand-checked instances against the closed forms,
plus instance-level cross-checks of the adversary against brute force.
"""

import logging
from typing import Optional

import numpy as np

from config.solver_config import TOLERANCES
from harness.runner import run_safe
from scheduling.adversary import worst_case_cost, worst_case_waits
from scheduling.errors import InvalidInputError
from scheduling.model import Instance, Schedule, Sequence, interappointment_times
from scheduling.oracle import brute_worst_cost, brute_worst_wait, corner_sufficiency_check
from scheduling.rules import asap_schedule, pta_solve

logger = logging.getLogger(__name__)


def plateau_instance(show_count: int = 10) -> Instance:
    return Instance(
        service_lb=[15.0] * 10,
        service_ub=[25.0] * 10,
        wait_guarantee=[30.0] * 10,
        idle_cost=[1.0] * 11,
        overtime_cost=1.25,
        horizon=220.0,
        show_count=show_count,
    )


def nonmonotone_instance() -> Instance:
    return Instance(
        service_lb=[10.0] * 3,
        service_ub=[10.0] * 3,
        wait_guarantee=[0.0, 0.0, 30.0],
        idle_cost=[1.0] * 4,
        overtime_cost=1.25,
        horizon=30.0,
        show_count=3,
    )


def _plateau_gaps() -> list:
    return interappointment_times(pta_solve(plateau_instance())).tolist()


def _nonmonotone_start() -> list:
    return asap_schedule(nonmonotone_instance(), Sequence.identity(3)).start.tolist()


def _single_customer_cost() -> float:
    inst = Instance([5.0], [10.0], [0.0], [1.0, 1.0], 1.25, 10.0, 1)
    return worst_case_cost(Schedule(Sequence((0,)), [0.0]), inst).value


def _no_show_cost() -> float:
    inst = Instance([1.0, 1.0], [2.0, 2.0], [0.0, 0.0], [1.0, 1.0, 1.0], 1.25, 10.0, 0)
    return worst_case_cost(Schedule(Sequence.identity(2), [0.0, 5.0]), inst).value


def _invalid_instance():
    return Instance([10.0], [5.0], [0.0], [1.0, 1.0], 1.25, 10.0, 1)


# Case table: name, callable, expected value (None when the case must fail cleanly)
TEST_CASES = [
    {"name": "Plateau gaps, ten identical customers", "run": _plateau_gaps,
     "expected": [0.0, 20.0] + [25.0] * 7},
    {"name": "Non-monotone start times", "run": _nonmonotone_start, "expected": [0.0, 10.0, 0.0]},
    {"name": "Single customer worst case", "run": _single_customer_cost, "expected": 5.0},
    {"name": "Nobody shows", "run": _no_show_cost, "expected": 10.0},
    {"name": "Inverted service interval", "run": _invalid_instance, "expected": None},
]


def _matches(value, expected) -> bool:
    return bool(np.allclose(np.asarray(value, dtype=float), np.asarray(expected, dtype=float),
                            atol=TOLERANCES["witness"]))


def run_cases(cases: Optional[list] = None) -> list:
    logger.info("═" * 60)
    logger.info("  ROBUST APPOINTMENT SCHEDULING CASE TABLE")
    logger.info("═" * 60)

    results = []
    for i, case in enumerate(cases or TEST_CASES, 1):
        outcome = run_safe(case["run"])
        if case["expected"] is None:
            status = "HANDLED" if not outcome["success"] else "FAIL"
        elif outcome["success"] and _matches(outcome["result"], case["expected"]):
            status = "PASS"
        else:
            status = "FAIL"
        logger.info("Test %d: %s ... %s (%.3fs)", i, case["name"], status, outcome["duration_seconds"])
        if status == "FAIL":
            logger.warning("  got %s, expected %s", outcome["result"], case["expected"])
        results.append({"test": case["name"], "status": status, "duration": outcome["duration_seconds"],
                        "error": outcome["error"]})

    passed = sum(1 for r in results if r["status"] == "PASS")
    handled = sum(1 for r in results if r["status"] == "HANDLED")
    failed = sum(1 for r in results if r["status"] == "FAIL")
    logger.info("═" * 60)
    logger.info("  Passed: %d/%d", passed, len(results))
    logger.info("  Gracefully handled: %d/%d", handled, len(results))
    logger.info("  Failures: %d/%d", failed, len(results))
    return results


def verify_instance(inst: Instance, schedule: Optional[Schedule] = None, samples: int = 2000) -> dict:
    """Closed-form worst cases of `schedule` (default: ASAP on the identity) against brute force."""
    if schedule is None:
        schedule = asap_schedule(inst, Sequence.identity(inst.n))
    if len(schedule.sequence) != inst.n:
        raise InvalidInputError("schedule and instance sizes differ")
    tol = TOLERANCES["witness"]
    closed = worst_case_cost(schedule, inst).value
    brute = brute_worst_cost(schedule, inst)
    waits = worst_case_waits(schedule, inst)
    brute_waits = np.array([brute_worst_wait(schedule, inst, i) for i in range(inst.n)])
    report = {
        "worst_case_cost": closed,
        "brute_worst_cost": brute,
        "cost_agrees": abs(closed - brute) <= tol,
        "worst_waits": waits.tolist(),
        "brute_worst_waits": brute_waits.tolist(),
        "waits_agree": bool(np.all(np.abs(waits - brute_waits) <= tol)),
        "interior_scenarios_bounded": corner_sufficiency_check(schedule, inst, samples=samples),
    }
    report["ok"] = report["cost_agrees"] and report["waits_agree"] and report["interior_scenarios_bounded"]
    logger.info(f"Instance verification {'passed' if report['ok'] else 'FAILED'}")
    return report
