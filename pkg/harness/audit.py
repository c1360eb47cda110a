"""
Audit
Worst-case and empirical assessment of a schedule: guarantee feasibility,
worst-case cost, and waiting/idle/overtime metrics over realized scenarios.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from config.solver_config import TOLERANCES
from scheduling.adversary import check_feasibility, worst_case_cost
from scheduling.model import Instance, Schedule, evaluate

logger = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class ScenarioMetrics:
    scenarios: int
    mean_wait: np.ndarray          # per appointment, over scenarios where its customer shows
    mean_idle: np.ndarray          # per appointment, plus the idle before the horizon end
    guarantee_met_share: float
    mean_overtime: float
    mean_idle_to_last: float       # idle before appointments 1..n
    mean_total_idle: float
    mean_total_cost: float

    def to_dict(self) -> dict:
        return {
            "scenarios": self.scenarios,
            "mean_wait": self.mean_wait.tolist(),
            "mean_idle": self.mean_idle.tolist(),
            "guarantee_met_share": self.guarantee_met_share,
            "mean_overtime": self.mean_overtime,
            "mean_idle_to_last": self.mean_idle_to_last,
            "mean_total_idle": self.mean_total_idle,
            "mean_total_cost": self.mean_total_cost,
        }


@dataclass(frozen=True, eq=False)
class AuditReport:
    feasible: bool
    worst_case_cost: float
    feasibility: dict
    witness: dict
    metrics: Optional[ScenarioMetrics] = None

    def to_dict(self) -> dict:
        return {
            "feasible": self.feasible,
            "worst_case_cost": self.worst_case_cost,
            "feasibility": self.feasibility,
            "witness": self.witness,
            "metrics": self.metrics.to_dict() if self.metrics else None,
        }


def scenario_metrics(schedule: Schedule, inst: Instance, scenarios) -> Optional[ScenarioMetrics]:
    """Empirical metrics over realized scenarios (None for an empty list)."""
    scenarios = list(scenarios)
    if not scenarios:
        return None
    n = inst.n
    perm = np.asarray(schedule.perm)
    guarantee = inst.wait_guarantee[perm]
    waits = np.full((len(scenarios), n), np.nan)
    idles = np.zeros((len(scenarios), n + 1))
    overtime = np.zeros(len(scenarios))
    cost = np.zeros(len(scenarios))
    met = shown = 0
    for row, scenario in enumerate(scenarios):
        report = evaluate(schedule, scenario, inst)
        show = scenario.show[perm].astype(bool)
        waits[row, show] = report.wait[show]
        idles[row] = report.idle
        overtime[row] = report.overtime
        cost[row] = report.total_cost
        shown += int(show.sum())
        met += int(np.sum(report.wait[show] <= guarantee[show] + TOLERANCES["feasibility"]))

    counts = np.sum(~np.isnan(waits), axis=0)
    mean_wait = np.where(counts > 0, np.nansum(waits, axis=0) / np.maximum(counts, 1), 0.0)
    share = met / shown if shown else 1.0
    if share < 1.0:
        logger.info(f"Waiting guarantee met for {share:.2%} of shown customers")
    return ScenarioMetrics(
        scenarios=len(scenarios),
        mean_wait=mean_wait,
        mean_idle=idles.mean(axis=0),
        guarantee_met_share=float(share),
        mean_overtime=float(overtime.mean()),
        mean_idle_to_last=float(idles[:, :n].sum(axis=1).mean()),
        mean_total_idle=float(idles.sum(axis=1).mean()),
        mean_total_cost=float(cost.mean()),
    )


def audit_schedule(schedule: Schedule, inst: Instance, scenarios=None) -> AuditReport:
    feasibility = check_feasibility(schedule, inst)
    if not feasibility.feasible:
        logger.warning(f"Schedule violates {len(feasibility.violations)} waiting guarantees")
    adversary = worst_case_cost(schedule, inst)
    return AuditReport(
        feasible=feasibility.feasible,
        worst_case_cost=adversary.value,
        feasibility=feasibility.to_dict(),
        witness=adversary.to_dict(),
        metrics=scenario_metrics(schedule, inst, scenarios or []),
    )
