"""
Benchmark
Compare the robust schedule against weighted-sum (one leg per waiting cost)
and sample-average schedules on the same evaluation scenarios. A failing leg
is recorded and the run continues.

sweep solves a directory of generated instances with a set of methods on a
thread pool and summarizes runtime and guarantee share per cell of the
(wait, no-show rate, cost structure) grid.
"""

import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from typing import Any, Optional

import pandas as pd

from config.solver_config import ENUMERATION, get_setting
from data.scenarios import in_box_scenarios
from harness.audit import scenario_metrics
from harness.io import load_instance
from harness.runner import run_safe, solve_method
from scheduling.adversary import check_feasibility
from scheduling.model import Instance

logger = logging.getLogger(__name__)

COLUMNS = [
    "leg", "method", "wait_cost", "status", "guarantee_met_share", "idle_to_last",
    "total_idle", "overtime", "total_cost", "worst_case_cost", "max_worst_wait", "error",
]

SWEEP_COLUMNS = [
    "instance", "method", "n", "show_count", "wait", "noshow_rate", "cost_tag", "status",
    "exit_code", "objective", "optimal", "runtime_seconds", "guarantee_met_share", "error",
]

SWEEP_KEYS = ["method", "wait", "noshow_rate", "cost_tag"]


@dataclass
class LegResult:
    leg: str
    method: str
    status: str  # "success" | "failed"
    wait_cost: Optional[float] = None
    result: Any = None
    error: Optional[str] = None
    error_source: Optional[str] = None  # "error_dict" | "exception" | None
    duration_seconds: float = 0.0

    def to_dict(self) -> dict:
        return asdict(self)

    def row(self) -> dict:
        metrics = self.result or {}
        return {
            "leg": self.leg,
            "method": self.method,
            "wait_cost": self.wait_cost,
            "status": self.status,
            "guarantee_met_share": metrics.get("guarantee_met_share"),
            "idle_to_last": metrics.get("mean_idle_to_last"),
            "total_idle": metrics.get("mean_total_idle"),
            "overtime": metrics.get("mean_overtime"),
            "total_cost": metrics.get("mean_total_cost"),
            "worst_case_cost": metrics.get("worst_case_cost"),
            "max_worst_wait": metrics.get("max_worst_wait"),
            "error": self.error,
        }


def _legs(wait_costs, samples, robust_method: str) -> list:
    legs = [("raswtg", robust_method, None)]
    legs += [(f"wsras[cw={cw:g}]", "wsras", float(cw)) for cw in wait_costs]
    if samples is not None and len(samples):
        legs.append(("saa", "saa", None))
    return legs


def compare(inst: Instance, scenarios, wait_costs=(), samples=None, robust_method: str = "exact",
            time_limit: Optional[float] = None) -> list:
    """Run every leg and evaluate its schedule on `scenarios`."""
    scenarios = list(scenarios)
    results = []
    for leg, method, wait_cost in _legs(wait_costs, samples, robust_method):
        start = time.time()
        outcome = run_safe(solve_method, inst, method, wait_cost=wait_cost or 0.0,
                           samples=samples, time_limit=time_limit)
        if not outcome["success"]:
            results.append(LegResult(
                leg=leg,
                method=method,
                status="failed",
                wait_cost=wait_cost,
                error=outcome["error"],
                error_source="error_dict",
                duration_seconds=round(time.time() - start, 2),
            ))
            logger.error(f"Leg {leg} failed: {outcome['error']}")
            continue

        try:
            solved = outcome["result"]
            metrics = scenario_metrics(solved.schedule, inst, scenarios)
            summary = metrics.to_dict() if metrics else {}
            summary["worst_case_cost"] = solved.objective
            summary["max_worst_wait"] = float(check_feasibility(solved.schedule, inst).worst_wait.max())
            summary["schedule"] = solved.schedule.to_dict()
            results.append(LegResult(
                leg=leg,
                method=method,
                status="success",
                wait_cost=wait_cost,
                result=summary,
                duration_seconds=round(time.time() - start, 2),
            ))
            logger.info(f"Completed leg {leg} in {time.time() - start:.2f}s")
        except Exception as e:
            results.append(LegResult(
                leg=leg,
                method=method,
                status="failed",
                wait_cost=wait_cost,
                error=f"{type(e).__name__}: {str(e)}",
                error_source="exception",
                duration_seconds=round(time.time() - start, 2),
            ))
            logger.error(f"Failed leg {leg}: {type(e).__name__}: {e}")
    return results


def comparison_rows(results: list) -> list:
    return [r.row() for r in results]


def _sweep_row(path: str, method: str, scenarios: int, time_limit: Optional[float], seed: int) -> dict:
    row = dict.fromkeys(SWEEP_COLUMNS)
    row.update(instance=path, method=method, status="failed")
    loaded = run_safe(load_instance, path)
    if not loaded["success"]:
        row.update(exit_code=loaded["exit_code"], error=loaded["error"])
        return row
    inst, generated = loaded["result"]
    row.update(
        n=inst.n,
        show_count=inst.show_count,
        wait=generated.wait if generated else None,
        noshow_rate=generated.noshow_rate if generated else round(1.0 - inst.show_count / inst.n, 6),
        cost_tag=generated.cost_tag if generated else "custom",
    )
    outcome = run_safe(solve_method, inst, method, time_limit=time_limit)
    row.update(exit_code=outcome["exit_code"], runtime_seconds=round(outcome["duration_seconds"], 4))
    if not outcome["success"]:
        row["error"] = outcome["error"]
        logger.error(f"Sweep {path} [{method}] failed: {outcome['error']}")
        return row
    solved = outcome["result"]
    row.update(status=solved.status, objective=solved.objective, optimal=solved.optimal)
    metrics = scenario_metrics(solved.schedule, inst, in_box_scenarios(inst, scenarios, seed=seed))
    if metrics is not None:
        row["guarantee_met_share"] = metrics.guarantee_met_share
    return row


def sweep(paths, methods=("exact",), scenarios: int = 100, time_limit: Optional[float] = None,
          threads: Optional[int] = None, seed: int = 42) -> pd.DataFrame:
    """One row per (instance file, method); instances run concurrently on `threads` workers."""
    threads = threads or get_setting(ENUMERATION, "threads")
    jobs = [(str(path), method) for path in paths for method in methods]
    logger.info(f"Sweeping {len(jobs)} runs on {threads} thread(s)")
    with ThreadPoolExecutor(max_workers=max(threads, 1)) as pool:
        rows = list(pool.map(lambda job: _sweep_row(*job, scenarios, time_limit, seed), jobs))
    return pd.DataFrame(rows, columns=SWEEP_COLUMNS)


def sweep_summary(frame: pd.DataFrame) -> pd.DataFrame:
    """Runtime and guarantee share per (method, wait, no-show rate, cost structure)."""
    frame = frame.assign(solved=frame["status"] != "failed")
    summary = frame.groupby(SWEEP_KEYS, dropna=False).agg(
        instances=("instance", "count"),
        solved=("solved", "sum"),
        mean_runtime=("runtime_seconds", "mean"),
        max_runtime=("runtime_seconds", "max"),
        mean_objective=("objective", "mean"),
        min_guarantee_share=("guarantee_met_share", "min"),
    )
    return summary.reset_index()
