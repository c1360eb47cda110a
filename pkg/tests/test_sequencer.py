from itertools import permutations

import pytest

from config.solver_config import FORMULATION
from milp.linear_model import TIME_LIMIT
from scheduling.adversary import check_feasibility, worst_case_cost
from scheduling.errors import InvalidInputError
from scheduling.model import Instance, Schedule, Sequence
from scheduling.rules import asap_schedule, pta_solve
from scheduling.sequencer import (
    _Incumbent,
    exact_solve,
    repair_schedule,
    sequence_lower_bound,
    symmetry_classes,
)
from tests.conftest import random_instance


def _asap_optimum(inst):
    return min(worst_case_cost(asap_schedule(inst, Sequence(p)), inst).value
               for p in permutations(range(inst.n)))


def test_constant_costs_match_pta(rng):
    for _ in range(5):
        inst = random_instance(rng, 4)
        outcome = exact_solve(inst)
        assert outcome.optimal
        pta = worst_case_cost(pta_solve(inst), inst).value
        assert outcome.objective == pytest.approx(pta, abs=1e-6)


def test_nonmonotone_instance_reaches_zero(nonmonotone_instance):
    outcome = exact_solve(nonmonotone_instance)
    assert outcome.objective == pytest.approx(0.0, abs=1e-6)
    assert check_feasibility(outcome.schedule, nonmonotone_instance).feasible


@pytest.mark.parametrize("tag", ["constant", "decreasing"])
@pytest.mark.parametrize("k_offset", [0, 1, 2])
def test_asap_enumeration_matches_exhaustive(rng, tag, k_offset):
    inst = random_instance(rng, 5, show_count=5 - k_offset, cost_tag=tag)
    outcome = exact_solve(inst, method="asap-enum")
    assert outcome.method == "asap-enum"
    assert outcome.objective == pytest.approx(_asap_optimum(inst), abs=1e-6)
    assert worst_case_cost(outcome.schedule, inst).value == pytest.approx(outcome.objective, abs=1e-6)


def test_milp_enumeration_on_increasing_costs(rng):
    inst = random_instance(rng, 3, cost_tag="increasing")
    enum = exact_solve(inst, method="milp-enum")
    full = exact_solve(inst, method="full-milp")
    assert enum.method == "milp-enum"
    assert 1 <= enum.sequences_explored <= 6
    assert enum.objective == pytest.approx(full.objective, abs=1e-5)
    assert enum.objective <= _asap_optimum(inst) + 1e-6
    assert check_feasibility(enum.schedule, inst).feasible


def test_default_method_follows_cost_structure(rng):
    assert exact_solve(random_instance(rng, 2, cost_tag="decreasing")).method == "asap-enum"
    assert exact_solve(random_instance(rng, 2, cost_tag="increasing")).method == "milp-enum"
    assert exact_solve(random_instance(rng, 3), max_enum_n=2).method == "full-milp"


@pytest.mark.parametrize("k", [3, 2])
def test_full_milp_agrees_with_enumeration(rng, k):
    inst = random_instance(rng, 3, show_count=k, cost_tag="decreasing")
    full = exact_solve(inst, method="full-milp")
    assert full.optimal
    assert full.objective == pytest.approx(exact_solve(inst, method="asap-enum").objective, abs=1e-5)


def test_ordered_model_never_claims_a_worse_optimum(rng, monkeypatch):
    inst = random_instance(rng, 3, show_count=2, cost_tag="increasing")
    reference = exact_solve(inst, method="full-milp")
    assert reference.optimal
    monkeypatch.setitem(FORMULATION, "max_prefix_blocks", 0)
    ordered = exact_solve(inst, method="full-milp")
    assert ordered.objective >= reference.objective - 1e-5
    assert check_feasibility(ordered.schedule, inst).feasible
    if ordered.optimal:
        assert ordered.objective == pytest.approx(reference.objective, abs=1e-5)
    else:
        assert ordered.bound <= reference.objective + 1e-5


def test_lower_bound_is_admissible(rng):
    for _ in range(10):
        inst = random_instance(rng, 4, show_count=int(rng.integers(1, 5)), cost_tag="decreasing")
        assert sequence_lower_bound([], inst) <= _asap_optimum(inst) + 1e-9
        perm = tuple(int(j) for j in rng.permutation(4))
        exact = worst_case_cost(asap_schedule(inst, Sequence(perm)), inst).value
        assert sequence_lower_bound(perm, inst) == pytest.approx(exact, abs=1e-9)
        for m in range(1, 4):
            assert sequence_lower_bound(perm[:m], inst) <= exact + 1e-9


def test_threads_do_not_change_the_answer(rng):
    inst = random_instance(rng, 5, show_count=4, cost_tag="decreasing")
    single = exact_solve(inst, threads=1)
    pooled = exact_solve(inst, threads=2)
    assert pooled.objective == pytest.approx(single.objective, abs=1e-9)
    assert pooled.schedule.perm == single.schedule.perm


def test_identical_customers_explore_one_sequence(plateau_instance):
    outcome = exact_solve(plateau_instance)
    assert outcome.sequences_explored == 1
    assert outcome.schedule.perm == tuple(range(10))


def test_symmetry_classes(plateau_instance):
    assert symmetry_classes(plateau_instance) == [0] * 10
    inst = Instance([1.0, 2.0, 1.0], [3.0, 4.0, 3.0], [0.0, 0.0, 0.0], [1.0] * 4, 1.25, 5.0, 3)
    assert symmetry_classes(inst) == [0, 1, 0]


def test_zero_time_limit(rng):
    outcome = exact_solve(random_instance(rng, 4, cost_tag="decreasing"), time_limit=0.0)
    assert outcome.status == TIME_LIMIT
    assert not outcome.optimal
    assert outcome.to_dict()["optimal"] is False


def test_unknown_method():
    inst = Instance([1.0], [2.0], [0.0], [1.0, 1.0], 1.25, 2.0, 1)
    with pytest.raises(InvalidInputError, match="unknown method"):
        exact_solve(inst, method="greedy")


def test_incumbent_ties_prefer_smaller_permutation():
    first = Schedule(Sequence((1, 0)), [0.0, 1.0])
    second = Schedule(Sequence((0, 1)), [0.0, 1.0])
    incumbent = _Incumbent(first, 5.0)
    assert not incumbent.offer(first, 6.0)
    assert incumbent.offer(second, 5.0)
    assert incumbent.snapshot() == (5.0, (0, 1))
    assert not incumbent.offer(first, 5.0)


def test_repair_lifts_start_times():
    inst = Instance([5.0, 5.0], [10.0, 10.0], [0.0, 0.0], [1.0] * 3, 1.25, 20.0, 2)
    repaired = repair_schedule(inst, Schedule(Sequence.identity(2), [0.0, 9.9999]))
    assert repaired.start.tolist() == pytest.approx([0.0, 10.0])
    assert check_feasibility(repaired, inst).feasible
