"""
Scenarios
Realized service times and show-sets for out-of-sample evaluation. Draws
come from held-out durations per exam type and may leave the estimated box.
"""

import logging
from typing import Optional

import numpy as np

from data.instances import GeneratedInstance
from data.records import records_frame
from scheduling.errors import InvalidInputError
from scheduling.model import Instance, Scenario

logger = logging.getLogger(__name__)


def durations_by_type(records) -> dict:
    """exam_type -> array of observed durations (minutes)."""
    if not records:
        return {}
    frame = records_frame(records)
    return {name: group["duration"].to_numpy() for name, group in frame.groupby("exam_type")}


def _show_vector(rng: np.random.Generator, n: int, k: int) -> np.ndarray:
    show = np.zeros(n, dtype=int)
    if k == n:
        show[:] = 1
    else:
        show[rng.choice(n, size=k, replace=False)] = 1
    return show


def sample_scenarios(generated: GeneratedInstance, held_out: dict, count: int, seed: int = 42) -> list:
    """
    `count` scenarios: each customer's service drawn i.i.d. from its exam type's
    held-out durations, show-set uniform among size-k subsets.
    """
    inst = generated.instance
    if count < 0:
        raise InvalidInputError("scenario count must be non-negative")
    if len(generated.exam_types) != inst.n:
        raise InvalidInputError("generated instance carries no exam type per customer")
    rng = np.random.default_rng(seed)

    pools = []
    for j, exam_type in enumerate(generated.exam_types):
        pool = held_out.get(exam_type)
        if pool is None or len(pool) == 0:
            midpoint = 0.5 * (inst.service_lb[j] + inst.service_ub[j])
            logger.warning(f"No held-out durations for '{exam_type}'; using interval midpoint {midpoint:.2f}")
            pool = np.array([midpoint])
        pools.append(np.asarray(pool, dtype=float))

    scenarios = []
    for _ in range(count):
        service = np.array([rng.choice(pool) for pool in pools])
        scenarios.append(Scenario(service, _show_vector(rng, inst.n, inst.show_count)))

    outside = sum(not s.in_box(inst) for s in scenarios)
    if outside:
        logger.info(f"{outside}/{count} sampled scenarios leave the estimated service box")
    return scenarios


def replay_scenario(generated: GeneratedInstance, records, seed: Optional[int] = None) -> Scenario:
    """The recorded durations of the instance's own source records."""
    by_id = {r.record_id: r for r in records}
    missing = [rid for rid in generated.record_ids if rid not in by_id]
    if missing or len(generated.record_ids) != generated.instance.n:
        raise InvalidInputError(f"records missing for replay: {missing}")
    service = np.array([by_id[rid].duration for rid in generated.record_ids])
    rng = np.random.default_rng(seed)
    inst = generated.instance
    scenario = Scenario(service, _show_vector(rng, inst.n, inst.show_count))
    if not scenario.in_box(inst):
        logger.info("Replay scenario leaves the estimated service box")
    return scenario


def in_box_scenarios(inst: Instance, count: int, seed: int = 42) -> list:
    """Uniform draws inside [p_lower, p_upper] with exactly k shows."""
    rng = np.random.default_rng(seed)
    service = rng.uniform(inst.service_lb, inst.service_ub, size=(count, inst.n))
    return [Scenario(row, _show_vector(rng, inst.n, inst.show_count)) for row in service]
