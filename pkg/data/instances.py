"""
Instance Generation
Service-time intervals from empirical percentiles, and instances built from
n consecutive exams of one historical day.
"""

import logging
import math
from dataclasses import dataclass, field
from datetime import date
from typing import Optional

import numpy as np

from config.solver_config import DATA
from data.records import records_frame
from scheduling.errors import InvalidInputError
from scheduling.model import COST_TAGS, Instance, cost_structure

logger = logging.getLogger(__name__)


def nearest_rank(values, pct: float) -> float:
    """Nearest-rank percentile: the ceil(pct/100 * N)-th smallest value (at least the first)."""
    ordered = np.sort(np.asarray(values, dtype=float))
    if ordered.size == 0:
        raise InvalidInputError("percentile of an empty sample")
    rank = max(1, math.ceil(round(pct * ordered.size / 100.0, 9)))
    return float(ordered[min(rank, ordered.size) - 1])


@dataclass
class IntervalTable:
    intervals: dict = field(default_factory=dict)     # exam_type -> (lo, hi) in minutes
    counts: dict = field(default_factory=dict)        # exam_type -> estimation sample size
    lo_pct: float = DATA["lo_pct"]
    hi_pct: float = DATA["hi_pct"]

    def __contains__(self, exam_type: str) -> bool:
        return exam_type in self.intervals

    def interval(self, exam_type: str) -> tuple:
        try:
            return self.intervals[exam_type]
        except KeyError:
            raise InvalidInputError(f"no service interval for exam type '{exam_type}'") from None

    def to_dict(self) -> dict:
        return {
            "lo_pct": self.lo_pct,
            "hi_pct": self.hi_pct,
            "intervals": {
                name: {"lo": lo, "hi": hi, "count": self.counts.get(name, 0)}
                for name, (lo, hi) in sorted(self.intervals.items())
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "IntervalTable":
        try:
            entries = data["intervals"]
            intervals = {name: (float(e["lo"]), float(e["hi"])) for name, e in entries.items()}
            counts = {name: int(e.get("count", 0)) for name, e in entries.items()}
        except (KeyError, TypeError, ValueError) as e:
            raise InvalidInputError(f"malformed interval table: {e}") from e
        bad = [name for name, (lo, hi) in intervals.items() if lo > hi]
        if bad:
            raise InvalidInputError(f"intervals with lo > hi: {', '.join(bad)}")
        return cls(intervals, counts, data.get("lo_pct", DATA["lo_pct"]), data.get("hi_pct", DATA["hi_pct"]))


def estimate_intervals(records, lo_pct: float = DATA["lo_pct"], hi_pct: float = DATA["hi_pct"]) -> IntervalTable:
    """Per exam type, nearest-rank lo/hi percentiles of observed durations."""
    if not records:
        raise InvalidInputError("cannot estimate intervals from zero records")
    if not 0 <= lo_pct <= hi_pct <= 100:
        raise InvalidInputError(f"need 0 <= lo <= hi <= 100, got ({lo_pct}, {hi_pct})")
    frame = records_frame(records)
    table = IntervalTable(lo_pct=lo_pct, hi_pct=hi_pct)
    for exam_type, group in frame.groupby("exam_type", sort=True):
        durations = group["duration"].to_numpy()
        table.intervals[exam_type] = (nearest_rank(durations, lo_pct), nearest_rank(durations, hi_pct))
        table.counts[exam_type] = int(durations.size)
    logger.info(f"Estimated intervals for {len(table.intervals)} exam types from {len(records)} records")
    return table


def split_by_date(records, boundary: date) -> tuple:
    """(estimation, evaluation): records strictly before `boundary`, and the rest."""
    estimation = [r for r in records if r.day < boundary]
    evaluation = [r for r in records if r.day >= boundary]
    return estimation, evaluation


def day_windows(records, intervals: Optional[IntervalTable] = None) -> dict:
    """Records per day in start order, keeping only exam types with an interval."""
    windows: dict = {}
    for r in sorted(records, key=lambda r: (r.day, r.start, r.record_id)):
        if intervals is not None and r.exam_type not in intervals:
            continue
        windows.setdefault(r.day, []).append(r)
    return windows


def eligible_days(records, n: int, intervals: Optional[IntervalTable] = None) -> list:
    """Days with at least n usable records."""
    return sorted(day for day, window in day_windows(records, intervals).items() if len(window) >= n)


def show_count_for(n: int, noshow_rate: float) -> int:
    return int(math.floor(round((1.0 - noshow_rate) * n, 9)))


@dataclass(frozen=True, eq=False)
class GeneratedInstance:
    instance: Instance
    source_day: Optional[date]
    record_ids: tuple
    exam_types: tuple
    cost_tag: str
    wait: float
    noshow_rate: float
    seed: Optional[int] = None

    def to_dict(self) -> dict:
        return {
            "instance": self.instance.to_dict(),
            "provenance": {
                "source_day": self.source_day.isoformat() if self.source_day else None,
                "record_ids": list(self.record_ids),
                "exam_types": list(self.exam_types),
                "cost_tag": self.cost_tag,
                "wait": self.wait,
                "noshow_rate": self.noshow_rate,
                "seed": self.seed,
            },
        }

    @classmethod
    def from_dict(cls, data: dict) -> "GeneratedInstance":
        inst = Instance.from_dict(data["instance"])
        prov = data.get("provenance", {})
        day = prov.get("source_day")
        return cls(
            instance=inst,
            source_day=date.fromisoformat(day) if day else None,
            record_ids=tuple(prov.get("record_ids", ())),
            exam_types=tuple(prov.get("exam_types", ())),
            cost_tag=prov.get("cost_tag", "constant"),
            wait=float(prov.get("wait", 0.0)),
            noshow_rate=float(prov.get("noshow_rate", 0.0)),
            seed=prov.get("seed"),
        )


def generate_instance(window, intervals: IntervalTable, n: int, noshow_rate: float, wait: float,
                      cost_tag: str, rng: Optional[np.random.Generator] = None,
                      overtime_cost: float = DATA["overtime_cost"], seed: Optional[int] = None) -> GeneratedInstance:
    """
    Instance from n consecutive records of `window` (one day, in start order)
    at a random offset. Horizon L = sum of p_upper minus the last customer's W.
    """
    if cost_tag not in COST_TAGS:
        raise InvalidInputError(f"unknown cost structure '{cost_tag}', expected one of {COST_TAGS}")
    if not 0.0 <= noshow_rate < 1.0:
        raise InvalidInputError(f"noshow_rate must lie in [0, 1), got {noshow_rate}")
    if wait < 0:
        raise InvalidInputError("wait guarantee must be non-negative")
    window = list(window)
    if n < 1 or len(window) < n:
        raise InvalidInputError(f"window holds {len(window)} records, need n = {n}")
    rng = rng if rng is not None else np.random.default_rng(seed)

    offset = int(rng.integers(0, len(window) - n + 1))
    chosen = window[offset:offset + n]
    bounds = np.array([intervals.interval(r.exam_type) for r in chosen])
    lb, ub = bounds[:, 0], bounds[:, 1]
    waits = np.full(n, float(wait))
    horizon = float(ub.sum() - waits[-1])
    if horizon < 0:
        logger.warning(f"Horizon rule gives {horizon:.3f} < 0; clamping to 0")
        horizon = 0.0

    inst = Instance(
        service_lb=lb,
        service_ub=ub,
        wait_guarantee=waits,
        idle_cost=cost_structure(cost_tag, n),
        overtime_cost=overtime_cost,
        horizon=horizon,
        show_count=show_count_for(n, noshow_rate),
    )
    return GeneratedInstance(
        instance=inst,
        source_day=chosen[0].day,
        record_ids=tuple(r.record_id for r in chosen),
        exam_types=tuple(r.exam_type for r in chosen),
        cost_tag=cost_tag,
        wait=float(wait),
        noshow_rate=float(noshow_rate),
        seed=seed,
    )


def generate_batch(records, intervals: IntervalTable, n: int, waits=(30.0,), cost_tags=("constant",),
                   noshow_rates=(0.0,), seed: int = 42, days: Optional[list] = None) -> list:
    """One instance per eligible day and parameter combination, from a single seeded stream."""
    rng = np.random.default_rng(seed)
    windows = day_windows(records, intervals)
    days = days if days is not None else eligible_days(records, n, intervals)
    batch = []
    for day in days:
        for wait in waits:
            for tag in cost_tags:
                for rate in noshow_rates:
                    batch.append(generate_instance(windows[day], intervals, n, rate, wait, tag, rng, seed=seed))
    logger.info(f"Generated {len(batch)} instances over {len(days)} days")
    return batch
