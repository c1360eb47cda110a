import logging
import math

import numpy as np
import pytest

from scheduling.adversary import (
    breakpoint_value,
    check_feasibility,
    gamma_rule_cost,
    top_window_load,
    worst_case_cost,
    worst_case_cost_zero_noshow,
    worst_case_wait,
    worst_case_waits,
    witness_matches,
)
from scheduling.errors import UnsupportedCaseError
from scheduling.model import Instance, Schedule, Sequence, evaluate
from scheduling.oracle import brute_worst_cost, brute_worst_wait
from scheduling.rules import asap_schedule, full_load_schedule
from tests.conftest import random_instance


def _random_schedule(rng, inst):
    perm = tuple(int(j) for j in rng.permutation(inst.n))
    start = np.concatenate(([0.0], np.sort(rng.uniform(0, float(inst.service_ub.sum()), size=inst.n - 1))))
    if rng.random() < 0.3:
        rng.shuffle(start[1:])
    return Schedule(Sequence(perm), start)


def test_single_customer_worst_case(single_instance):
    result = worst_case_cost(Schedule(Sequence((0,)), [0.0]), single_instance)
    assert result.value == pytest.approx(5.0)
    assert result.breakpoint == 1
    assert result.scenario.service.tolist() == [5.0]


def test_degenerate_box_equals_deterministic_cost():
    inst = Instance([10.0, 10.0], [10.0, 10.0], [0.0, 0.0], [1.0] * 3, 1.25, 15.0, 2)
    for start in ([0.0, 0.0], [0.0, 12.0], [0.0, 30.0]):
        schedule = Schedule(Sequence.identity(2), start)
        deterministic = evaluate(schedule, worst_case_cost(schedule, inst).scenario, inst).total_cost
        assert worst_case_cost(schedule, inst).value == pytest.approx(deterministic)


def test_nobody_shows():
    inst = Instance([1.0, 1.0], [2.0, 2.0], [0.0, 0.0], [1.0, 1.0, 1.0], 1.25, 10.0, 0)
    result = worst_case_cost(Schedule(Sequence.identity(2), [0.0, 5.0]), inst)
    assert result.value == pytest.approx(10.0)
    assert result.scenario.shown == 0


def test_zero_noshow_adversary_rejects_no_shows():
    inst = Instance([1.0, 1.0], [2.0, 2.0], [0.0, 0.0], [1.0] * 3, 1.25, 4.0, 1)
    with pytest.raises(UnsupportedCaseError):
        worst_case_cost_zero_noshow(Schedule(Sequence.identity(2), [0.0, 1.0]), inst)


def test_top_window_load():
    assert top_window_load(np.zeros(4), np.array([5.0, 3.0, 7.0, 1.0]), 3, 2) == pytest.approx(12.0)
    assert top_window_load(np.zeros(2), np.array([5.0, 3.0]), 0, 2) == -math.inf
    # budget 0: only the start times count
    assert top_window_load(np.array([0.0, 4.0, 1.0]), np.array([9.0, 9.0, 9.0]), 3, 0) == pytest.approx(4.0)


def test_worst_case_wait_hand_case():
    inst = Instance([10.0] * 3, [10.0] * 3, [0.0] * 3, [1.0] * 4, 1.25, 30.0, 3)
    schedule = Schedule(Sequence.identity(3), [0.0, 0.0, 20.0])
    assert worst_case_wait(schedule, inst, 0) == 0.0
    assert worst_case_wait(schedule, inst, 1) == pytest.approx(10.0)
    assert worst_case_wait(schedule, inst, 2) == pytest.approx(0.0)
    with pytest.raises(IndexError):
        worst_case_wait(schedule, inst, 3)


def test_nobody_waits_without_shows():
    inst = Instance([5.0] * 3, [9.0] * 3, [0.0] * 3, [1.0] * 4, 1.25, 20.0, 0)
    schedule = Schedule(Sequence.identity(3), [0.0, 0.0, 0.0])
    assert worst_case_waits(schedule, inst).tolist() == [0.0, 0.0, 0.0]
    assert check_feasibility(schedule, inst).feasible


def test_forced_violation_is_reported():
    inst = Instance([5.0, 5.0], [12.0, 5.0], [0.0, 10.0], [1.0] * 3, 1.25, 17.0, 2)
    report = check_feasibility(Schedule(Sequence.identity(2), [0.0, 0.0]), inst)
    assert not report.feasible
    assert report.violations == [(1, pytest.approx(2.0))]
    assert report.to_dict()["violations"][0]["appointment"] == 2


@pytest.mark.parametrize("tag", ["constant", "decreasing", "increasing"])
@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_cost_matches_brute_force(rng, tag, n):
    for k in sorted({n, n - 1, int(0.8 * n)}):
        if k < 0:
            continue
        inst = random_instance(rng, n, show_count=k, cost_tag=tag)
        for _ in range(4):
            schedule = _random_schedule(rng, inst)
            result = worst_case_cost(schedule, inst)
            assert result.value == pytest.approx(brute_worst_cost(schedule, inst), abs=1e-6)
            assert witness_matches(schedule, inst, result)
            assert result.scenario.shown == k
            assert result.scenario.in_box(inst)


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_waits_match_brute_force(rng, n):
    for k in sorted({n, n - 1, max(int(0.8 * n), 1)}):
        inst = random_instance(rng, n, show_count=k)
        schedule = _random_schedule(rng, inst)
        waits = worst_case_waits(schedule, inst)
        brute = [brute_worst_wait(schedule, inst, i) for i in range(n)]
        assert waits == pytest.approx(brute, abs=1e-6)


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(20))
def test_cost_matches_brute_force_extended(seed):
    rng = np.random.default_rng(seed)
    for _ in range(50):
        n = int(rng.integers(1, 8))
        k = int(rng.choice(sorted({n, n - 1, int(0.8 * n)})))
        tag = str(rng.choice(["constant", "decreasing", "increasing"]))
        inst = random_instance(rng, n, show_count=max(k, 0), cost_tag=tag, integral=False)
        schedule = _random_schedule(rng, inst)
        assert worst_case_cost(schedule, inst).value == pytest.approx(brute_worst_cost(schedule, inst), abs=1e-6)
        i = int(rng.integers(0, n))
        assert worst_case_wait(schedule, inst, i) == pytest.approx(brute_worst_wait(schedule, inst, i), abs=1e-6)


def test_zero_noshow_path_agrees_with_breakpoint_scan(rng):
    for _ in range(30):
        n = int(rng.integers(1, 7))
        inst = random_instance(rng, n, cost_tag="increasing")
        schedule = _random_schedule(rng, inst)
        perm = list(schedule.perm)
        start_ext = np.append(schedule.start, inst.horizon)
        scan = max(
            breakpoint_value(inst, start_ext, inst.service_lb[perm], inst.service_ub[perm], b)[0]
            for b in range(n + 1)
        )
        assert worst_case_cost_zero_noshow(schedule, inst).value == pytest.approx(scan)


def test_gamma_rule_never_exceeds_exact(rng, caplog):
    for _ in range(40):
        n = int(rng.integers(2, 7))
        inst = random_instance(rng, n, show_count=int(rng.integers(1, n)), cost_tag="increasing")
        schedule = _random_schedule(rng, inst)
        with caplog.at_level(logging.DEBUG, logger="scheduling.adversary"):
            exact = worst_case_cost(schedule, inst).value
        assert gamma_rule_cost(schedule, inst) <= exact + 1e-9


def test_prefix_shows_on_uneven_costs():
    inst = Instance([1.0, 4.0, 1.0], [1.0, 4.0, 1.0], [100.0] * 3, [1.0, 0.1, 10.0, 1.0], 1.25, 20.0, 2)
    schedule = Schedule(Sequence.identity(3), [0.0, 1.0, 5.0])
    exact = worst_case_cost(schedule, inst).value
    assert exact == pytest.approx(54.0)
    assert exact == pytest.approx(brute_worst_cost(schedule, inst))
    assert gamma_rule_cost(schedule, inst) <= exact


def test_asap_and_full_load_schedules_are_feasible(rng):
    for _ in range(30):
        n = int(rng.integers(1, 7))
        inst = random_instance(rng, n, show_count=int(rng.integers(0, n + 1)))
        seq = Sequence(tuple(int(j) for j in rng.permutation(n)))
        assert check_feasibility(asap_schedule(inst, seq), inst).feasible
        assert check_feasibility(full_load_schedule(inst, seq), inst).feasible


def test_worst_wait_grows_with_show_count(rng):
    for _ in range(20):
        n = int(rng.integers(2, 7))
        inst = random_instance(rng, n)
        schedule = _random_schedule(rng, inst)
        waits = [worst_case_waits(schedule, inst.with_changes(show_count=k)) for k in range(n + 1)]
        for fewer, more in zip(waits, waits[1:]):
            assert np.all(more >= fewer - 1e-12)
