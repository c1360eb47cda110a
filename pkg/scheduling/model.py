"""
Scheduling Model
Domain types and the deterministic evaluation kernel: completion times,
waiting times, idle times, overtime and total cost of a fixed schedule
under one realized scenario.

Customers and appointments are 0-based internally. JSON files use 1-based
permutations, converted in to_dict/from_dict.
"""

import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from config.solver_config import TOLERANCES
from scheduling.errors import InvalidInputError

logger = logging.getLogger(__name__)

KERNEL_TOL = TOLERANCES["kernel"]

COST_TAGS = ("constant", "decreasing", "increasing")


def _as_vector(values, name: str, length: Optional[int] = None) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if arr.ndim != 1:
        raise InvalidInputError(f"{name} must be a one-dimensional vector")
    if length is not None and arr.shape[0] != length:
        raise InvalidInputError(f"{name} has length {arr.shape[0]}, expected {length}")
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class Instance:
    service_lb: np.ndarray
    service_ub: np.ndarray
    wait_guarantee: np.ndarray
    idle_cost: np.ndarray          # c_1..c_{n+1}
    overtime_cost: float
    horizon: float
    show_count: int

    def __post_init__(self):
        lb = _as_vector(self.service_lb, "service_lb")
        n = lb.shape[0]
        if n < 1:
            raise InvalidInputError("an instance needs at least one customer")
        ub = _as_vector(self.service_ub, "service_ub", n)
        wait = _as_vector(self.wait_guarantee, "wait_guarantee", n)
        costs = _as_vector(self.idle_cost, "idle_cost", n + 1)
        object.__setattr__(self, "service_lb", lb)
        object.__setattr__(self, "service_ub", ub)
        object.__setattr__(self, "wait_guarantee", wait)
        object.__setattr__(self, "idle_cost", costs)
        object.__setattr__(self, "overtime_cost", float(self.overtime_cost))
        object.__setattr__(self, "horizon", float(self.horizon))
        object.__setattr__(self, "show_count", int(self.show_count))

        if np.any(lb < 0):
            raise InvalidInputError("service_lb must be non-negative")
        bad = np.flatnonzero(lb > ub)
        if bad.size:
            raise InvalidInputError(f"service_lb > service_ub for customers {(bad + 1).tolist()}")
        if np.any(wait < 0):
            raise InvalidInputError("wait_guarantee must be non-negative")
        if np.any(costs < 0) or self.overtime_cost < 0:
            raise InvalidInputError("cost entries must be non-negative")
        if self.horizon < 0:
            raise InvalidInputError("horizon must be non-negative")
        if not 0 <= self.show_count <= n:
            raise InvalidInputError(f"show_count must lie in [0, {n}], got {self.show_count}")

    @property
    def n(self) -> int:
        return self.service_lb.shape[0]

    @property
    def zero_noshow(self) -> bool:
        return self.show_count == self.n

    def with_changes(self, **changes) -> "Instance":
        values = {
            "service_lb": self.service_lb,
            "service_ub": self.service_ub,
            "wait_guarantee": self.wait_guarantee,
            "idle_cost": self.idle_cost,
            "overtime_cost": self.overtime_cost,
            "horizon": self.horizon,
            "show_count": self.show_count,
        }
        values.update(changes)
        return Instance(**values)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "service_lb": self.service_lb.tolist(),
            "service_ub": self.service_ub.tolist(),
            "wait_guarantee": self.wait_guarantee.tolist(),
            "idle_cost": self.idle_cost.tolist(),
            "overtime_cost": self.overtime_cost,
            "horizon": self.horizon,
            "show_count": self.show_count,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Instance":
        required = ["service_lb", "service_ub", "wait_guarantee", "idle_cost",
                    "overtime_cost", "horizon", "show_count"]
        missing = [key for key in required if key not in data]
        if missing:
            raise InvalidInputError(f"instance is missing fields: {', '.join(missing)}")
        inst = cls(**{key: data[key] for key in required})
        if "n" in data and int(data["n"]) != inst.n:
            raise InvalidInputError(f"n={data['n']} disagrees with vector length {inst.n}")
        return inst


@dataclass(frozen=True)
class Sequence:
    """perm[i] is the customer assigned to appointment i (both 0-based)."""

    perm: tuple

    def __post_init__(self):
        perm = tuple(int(j) for j in self.perm)
        if sorted(perm) != list(range(len(perm))):
            raise InvalidInputError(f"not a permutation of 0..{len(perm) - 1}: {perm}")
        object.__setattr__(self, "perm", perm)

    def __len__(self) -> int:
        return len(self.perm)

    @classmethod
    def identity(cls, n: int) -> "Sequence":
        return cls(tuple(range(n)))

    def matrix(self) -> np.ndarray:
        """Assignment matrix with pi[i, j] = 1 iff customer j takes appointment i."""
        pi = np.zeros((len(self.perm), len(self.perm)), dtype=int)
        pi[np.arange(len(self.perm)), self.perm] = 1
        return pi


@dataclass(frozen=True, eq=False)
class Schedule:
    sequence: Sequence
    start: np.ndarray

    def __post_init__(self):
        start = _as_vector(self.start, "start", len(self.sequence))
        if abs(start[0]) > KERNEL_TOL:
            raise InvalidInputError(f"the first appointment must start at 0, got {start[0]}")
        if np.any(start < -KERNEL_TOL):
            raise InvalidInputError("appointment times must be non-negative")
        start = np.maximum(start, 0.0)
        start[0] = 0.0
        start.setflags(write=False)
        object.__setattr__(self, "start", start)

    @property
    def perm(self) -> tuple:
        return self.sequence.perm

    def to_dict(self) -> dict:
        return {"perm": [j + 1 for j in self.perm], "start": self.start.tolist()}

    @classmethod
    def from_dict(cls, data: dict) -> "Schedule":
        if "perm" not in data or "start" not in data:
            raise InvalidInputError("schedule needs 'perm' and 'start'")
        return cls(Sequence(tuple(int(j) - 1 for j in data["perm"])), data["start"])


@dataclass(frozen=True, eq=False)
class Scenario:
    """Service times and show indicators, both indexed by customer."""

    service: np.ndarray
    show: np.ndarray

    def __post_init__(self):
        service = _as_vector(self.service, "service")
        show = np.array(self.show, dtype=int)
        if show.shape != service.shape:
            raise InvalidInputError("service and show must have the same length")
        if np.any((show != 0) & (show != 1)):
            raise InvalidInputError("show must be a binary vector")
        if np.any(service < 0):
            raise InvalidInputError("service times must be non-negative")
        show.setflags(write=False)
        object.__setattr__(self, "service", service)
        object.__setattr__(self, "show", show)

    @property
    def shown(self) -> int:
        return int(self.show.sum())

    def in_box(self, inst: Instance, tol: float = KERNEL_TOL) -> bool:
        """True when every service time lies in its customer's interval."""
        return bool(np.all(self.service >= inst.service_lb - tol)
                    and np.all(self.service <= inst.service_ub + tol))

    @classmethod
    def all_show(cls, service) -> "Scenario":
        service = np.asarray(service, dtype=float)
        return cls(service, np.ones(service.shape[0], dtype=int))


@dataclass(frozen=True, eq=False)
class EvaluationReport:
    completion: np.ndarray
    wait: np.ndarray
    idle: np.ndarray              # length n+1, the last entry is idle before the horizon end
    overtime: float
    total_cost: float
    idle_cost: float = 0.0

    def to_dict(self) -> dict:
        return {
            "completion": self.completion.tolist(),
            "wait": self.wait.tolist(),
            "idle": self.idle.tolist(),
            "overtime": self.overtime,
            "total_cost": self.total_cost,
        }


def _check_dimensions(schedule: Schedule, scenario: Scenario, inst: Instance):
    n = inst.n
    if len(schedule.sequence) != n:
        raise InvalidInputError(f"schedule has {len(schedule.sequence)} appointments, instance has {n}")
    if scenario.service.shape[0] != n:
        raise InvalidInputError(f"scenario has {scenario.service.shape[0]} customers, instance has {n}")


def realized_service(schedule: Schedule, scenario: Scenario) -> np.ndarray:
    """Service of appointment i, zero when its customer does not show."""
    perm = np.asarray(schedule.perm)
    return scenario.service[perm] * scenario.show[perm]


def completion_times(schedule: Schedule, scenario: Scenario, inst: Instance) -> np.ndarray:
    _check_dimensions(schedule, scenario, inst)
    service = realized_service(schedule, scenario)
    completion = np.empty(inst.n)
    previous = 0.0
    for i in range(inst.n):
        previous = max(schedule.start[i], previous) + service[i]
        completion[i] = previous
    return completion


def completion_times_closed(schedule: Schedule, scenario: Scenario, inst: Instance) -> np.ndarray:
    """C_i as the maximum over l <= i of A_l plus the realized service of l..i."""
    _check_dimensions(schedule, scenario, inst)
    service = realized_service(schedule, scenario)
    cum = np.concatenate(([0.0], np.cumsum(service)))
    # candidates[l, i] = A_l + cum[i+1] - cum[l], valid for l <= i
    candidates = schedule.start[:, None] + cum[None, 1:] - cum[:-1, None]
    candidates[np.tril_indices(inst.n, k=-1)] = -np.inf
    return candidates.max(axis=0)


def terminal_cost(inst: Instance, last_completion: float) -> float:
    gap = inst.horizon - last_completion
    return max(inst.idle_cost[-1] * gap, inst.overtime_cost * -gap, 0.0)


def evaluate(schedule: Schedule, scenario: Scenario, inst: Instance) -> EvaluationReport:
    completion = completion_times(schedule, scenario, inst)
    perm = np.asarray(schedule.perm)
    previous = np.concatenate(([0.0], completion[:-1]))
    wait = scenario.show[perm] * np.maximum(previous - schedule.start, 0.0)

    starts = np.append(schedule.start, inst.horizon)
    idle = np.maximum(starts - np.concatenate(([0.0], completion)), 0.0)
    overtime = max(completion[-1] - inst.horizon, 0.0)
    idle_cost = float(np.dot(inst.idle_cost[:-1], idle[:-1]))
    total = idle_cost + terminal_cost(inst, completion[-1])
    return EvaluationReport(
        completion=completion,
        wait=wait,
        idle=idle,
        overtime=overtime,
        total_cost=total,
        idle_cost=idle_cost,
    )


def idle_cost_block_form(schedule: Schedule, scenario: Scenario, inst: Instance) -> float:
    """
    Idle cost of appointments 1..n+1 rewritten over the blocks that start
    after a positive idle time.

    With i_1 < ... < i_r the appointments preceded by positive idle time
    (A_{n+1} = L included) and b_l the start of the block ending before i_l,
    the cost telescopes to
        sum_l (c_{i_l} - c_{i_{l+1}}) A_{i_l} + c_{i_r} A_{i_r}
        - c_{i_1} A_1 - sum_l c_{i_l} S(b_l, i_l - 1)
    where S is the realized service of the block.
    """
    completion = completion_times(schedule, scenario, inst)
    service = realized_service(schedule, scenario)
    starts = np.append(schedule.start, inst.horizon)
    cum = np.concatenate(([0.0], np.cumsum(service)))
    costs = inst.idle_cost

    positive = [
        i for i in range(inst.n + 1)
        if starts[i] - (completion[i - 1] if i > 0 else 0.0) > KERNEL_TOL
    ]
    if not positive:
        return 0.0

    total = 0.0
    for pos, i in enumerate(positive):
        nxt = costs[positive[pos + 1]] if pos + 1 < len(positive) else 0.0
        total += (costs[i] - nxt) * starts[i]
    total -= costs[positive[0]] * starts[0]

    block_start = 0
    for i in positive:
        total -= costs[i] * (cum[i] - cum[block_start])
        block_start = i
    return float(total)


def cost_structure(tag: str, n: int) -> np.ndarray:
    """Idle cost vector c_1..c_{n+1} for a named cost structure."""
    i = np.arange(1, n + 2, dtype=float)
    if tag == "constant":
        return np.ones(n + 1)
    if tag == "decreasing":
        return 1.0 - (i - 1.0) / (2.0 * n)
    if tag == "increasing":
        return (n + i - 1.0) / (2.0 * n)
    raise InvalidInputError(f"unknown cost structure '{tag}', expected one of {COST_TAGS}")


def is_non_increasing(costs, tol: float = KERNEL_TOL) -> bool:
    return bool(np.all(np.diff(np.asarray(costs, dtype=float)) <= tol))


def is_constant(costs, tol: float = KERNEL_TOL) -> bool:
    costs = np.asarray(costs, dtype=float)
    return bool(np.all(np.abs(costs - costs[0]) <= tol))


def interappointment_times(schedule: Schedule) -> np.ndarray:
    """(A_{i+1} - A_i) for consecutive appointments."""
    return np.diff(schedule.start)
