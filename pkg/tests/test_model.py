import numpy as np
import pytest

from scheduling.errors import InvalidInputError
from scheduling.model import (
    Instance,
    Scenario,
    Schedule,
    Sequence,
    completion_times,
    completion_times_closed,
    cost_structure,
    evaluate,
    idle_cost_block_form,
    interappointment_times,
    is_constant,
    is_non_increasing,
)


def _inst(n, lb=10.0, ub=10.0, horizon=10.0, show_count=None):
    return Instance([lb] * n, [ub] * n, [0.0] * n, [1.0] * (n + 1), 1.25, horizon,
                    n if show_count is None else show_count)


@pytest.mark.parametrize("start, service, show, expected", [
    ((0,), (10,), (1,), (10,)),
    ((0, 5), (10, 10), (1, 1), (10, 20)),
    ((0, 10, 0), (10, 10, 10), (1, 1, 1), (10, 20, 30)),
    ((0, 0, 20), (5, 5, 5), (1, 1, 1), (5, 10, 25)),
    ((0, 30), (10, 10), (1, 0), (10, 30)),
])
def test_completion_times(start, service, show, expected):
    n = len(start)
    inst = _inst(n)
    schedule = Schedule(Sequence.identity(n), start)
    scenario = Scenario(service, show)
    assert completion_times(schedule, scenario, inst) == pytest.approx(expected)
    assert completion_times_closed(schedule, scenario, inst) == pytest.approx(expected)


def test_closed_form_matches_recursion_on_random_schedules(rng):
    for _ in range(50):
        n = int(rng.integers(1, 7))
        inst = _inst(n)
        perm = tuple(rng.permutation(n))
        start = np.concatenate(([0.0], rng.uniform(0, 40, size=n - 1)))
        scenario = Scenario(rng.uniform(0, 15, size=n), rng.integers(0, 2, size=n))
        schedule = Schedule(Sequence(perm), start)
        assert completion_times_closed(schedule, scenario, inst) == pytest.approx(
            completion_times(schedule, scenario, inst))


def test_evaluate_exact_fit():
    inst = Instance([10.0], [10.0], [0.0], [1.0, 1.0], 1.25, 10.0, 1)
    report = evaluate(Schedule(Sequence((0,)), [0.0]), Scenario.all_show([10.0]), inst)
    assert report.wait.tolist() == [0.0]
    assert report.idle.tolist() == [0.0, 0.0]
    assert report.overtime == 0.0
    assert report.total_cost == 0.0


def test_evaluate_trailing_idle():
    inst = Instance([10.0], [10.0], [0.0], [1.0, 1.0], 1.25, 15.0, 1)
    report = evaluate(Schedule(Sequence((0,)), [0.0]), Scenario.all_show([10.0]), inst)
    assert report.idle.tolist() == [0.0, 5.0]
    assert report.total_cost == pytest.approx(5.0)


def test_evaluate_overtime_and_wait():
    inst = Instance([10.0] * 2, [10.0] * 2, [0.0] * 2, [1.0] * 3, 1.25, 15.0, 2)
    report = evaluate(Schedule(Sequence.identity(2), [0.0, 0.0]), Scenario.all_show([10.0, 10.0]), inst)
    assert report.wait.tolist() == [0.0, 10.0]
    assert report.overtime == pytest.approx(5.0)
    assert report.total_cost == pytest.approx(6.25)


def test_block_form_matches_direct_idle_cost():
    inst = Instance([10.0] * 2, [10.0] * 2, [0.0] * 2, [1.0] * 3, 1.25, 30.0, 2)
    schedule = Schedule(Sequence.identity(2), [0.0, 20.0])
    scenario = Scenario.all_show([10.0, 10.0])
    assert idle_cost_block_form(schedule, scenario, inst) == pytest.approx(10.0)


@pytest.mark.parametrize("tag", ["constant", "decreasing", "increasing"])
def test_block_form_on_random_schedules(rng, tag):
    for _ in range(30):
        n = int(rng.integers(1, 6))
        inst = Instance([1.0] * n, [9.0] * n, [0.0] * n, cost_structure(tag, n), 1.25,
                        float(rng.uniform(0, 60)), n)
        schedule = Schedule(Sequence(tuple(rng.permutation(n))),
                            np.concatenate(([0.0], rng.uniform(0, 40, size=n - 1))))
        scenario = Scenario(rng.uniform(1, 9, size=n), rng.integers(0, 2, size=n))
        report = evaluate(schedule, scenario, inst)
        direct = float(np.dot(inst.idle_cost, report.idle))
        assert idle_cost_block_form(schedule, scenario, inst) == pytest.approx(direct)


def test_cost_structures():
    assert cost_structure("constant", 5).tolist() == [1.0] * 6
    decreasing = cost_structure("decreasing", 10)
    increasing = cost_structure("increasing", 10)
    assert decreasing[0] == pytest.approx(1.0) and decreasing[-1] == pytest.approx(0.5)
    assert increasing[0] == pytest.approx(0.5) and increasing[-1] == pytest.approx(1.0)
    assert is_non_increasing(decreasing) and not is_non_increasing(increasing)
    assert is_constant(cost_structure("constant", 3)) and not is_constant(decreasing)
    with pytest.raises(InvalidInputError):
        cost_structure("quadratic", 3)


@pytest.mark.parametrize("kwargs, message", [
    ({"service_lb": [10.0], "service_ub": [5.0]}, "service_lb > service_ub"),
    ({"idle_cost": [1.0]}, "idle_cost has length"),
    ({"show_count": 2}, "show_count"),
    ({"wait_guarantee": [-1.0]}, "wait_guarantee"),
    ({"service_lb": []}, "at least one customer"),
])
def test_instance_validation(kwargs, message):
    values = {"service_lb": [5.0], "service_ub": [10.0], "wait_guarantee": [0.0],
              "idle_cost": [1.0, 1.0], "overtime_cost": 1.25, "horizon": 10.0, "show_count": 1}
    values.update(kwargs)
    with pytest.raises(InvalidInputError, match=message):
        Instance(**values)


def test_instance_is_immutable_and_copies_input():
    lb = np.array([5.0, 6.0])
    inst = Instance(lb, [10.0, 10.0], [0.0, 0.0], [1.0] * 3, 1.25, 20.0, 2)
    lb[0] = 99.0
    assert inst.service_lb[0] == 5.0
    with pytest.raises(ValueError):
        inst.service_lb[0] = 1.0


def test_instance_round_trip(single_instance):
    data = single_instance.to_dict()
    again = Instance.from_dict(data)
    assert again.to_dict() == data
    with pytest.raises(InvalidInputError, match="n=3"):
        Instance.from_dict({**data, "n": 3})
    with pytest.raises(InvalidInputError, match="missing"):
        Instance.from_dict({"n": 1})


def test_schedule_json_is_one_based():
    schedule = Schedule(Sequence((2, 0, 1)), [0.0, 5.0, 7.5])
    data = schedule.to_dict()
    assert data["perm"] == [3, 1, 2]
    again = Schedule.from_dict(data)
    assert again.perm == (2, 0, 1)
    assert again.start.tolist() == [0.0, 5.0, 7.5]


@pytest.mark.parametrize("perm, start", [
    ((0, 0), (0.0, 1.0)),
    ((0, 1), (1.0, 2.0)),
    ((0, 1), (0.0, -3.0)),
    ((0, 1), (0.0,)),
])
def test_schedule_validation(perm, start):
    with pytest.raises(InvalidInputError):
        Schedule(Sequence(perm), start)


def test_scenario_validation_and_box(single_instance):
    with pytest.raises(InvalidInputError):
        Scenario([5.0, 6.0], [1])
    with pytest.raises(InvalidInputError):
        Scenario([5.0], [2])
    assert Scenario([7.0], [1]).in_box(single_instance)
    assert not Scenario([12.0], [1]).in_box(single_instance)


def test_dimension_mismatch_is_rejected(single_instance):
    schedule = Schedule(Sequence.identity(2), [0.0, 1.0])
    with pytest.raises(InvalidInputError):
        evaluate(schedule, Scenario.all_show([5.0, 5.0]), single_instance)


def test_interappointment_times():
    schedule = Schedule(Sequence.identity(3), [0.0, 10.0, 0.0])
    assert interappointment_times(schedule).tolist() == [10.0, -10.0]
    assert interappointment_times(Schedule(Sequence((0,)), [0.0])).size == 0


def test_longer_service_never_shortens_completions(rng):
    for _ in range(30):
        n = int(rng.integers(1, 6))
        inst = _inst(n)
        schedule = Schedule(Sequence(tuple(rng.permutation(n))),
                            np.concatenate(([0.0], rng.uniform(0, 40, size=n - 1))))
        service = rng.uniform(0, 15, size=n)
        show = np.ones(n, dtype=int)
        base = completion_times(schedule, Scenario(service, show), inst)
        j = int(rng.integers(0, n))
        longer = service.copy()
        longer[j] += float(rng.uniform(0.1, 10))
        assert np.all(completion_times(schedule, Scenario(longer, show), inst) >= base - 1e-12)


def test_no_show_service_is_ignored():
    inst = _inst(3)
    schedule = Schedule(Sequence((2, 0, 1)), [0.0, 4.0, 9.0])
    first = evaluate(schedule, Scenario([6.0, 50.0, 7.0], [1, 0, 1]), inst)
    second = evaluate(schedule, Scenario([6.0, 0.0, 7.0], [1, 0, 1]), inst)
    assert first.completion.tolist() == pytest.approx(second.completion.tolist())
    assert first.total_cost == pytest.approx(second.total_cost)
    # customer 1 sits at appointment 2
    assert first.wait[2] == 0.0
