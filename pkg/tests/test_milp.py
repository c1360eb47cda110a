import logging

import numpy as np
import pytest

from milp.branch_and_bound import branch_and_bound
from milp.linear_model import INFEASIBLE, NODE_LIMIT, OPTIMAL, TIME_LIMIT, LinearModel
from milp.simplex import simplex_solve, solve_lp
from scheduling.errors import SolverError


def _subset_sum() -> LinearModel:
    model = LinearModel("subset-sum")
    weights = {"y1": 3, "y2": 5, "y3": 7}
    for name in weights:
        model.add_var(name, binary=True)
    model.add_constraint(weights, ">=", 8, "reach")
    model.set_objective(weights)
    return model


def _half_knapsack() -> LinearModel:
    model = LinearModel("half")
    model.add_var("x1", binary=True)
    model.add_var("x2", binary=True)
    model.add_constraint({"x1": 2, "x2": 2}, "<=", 3, "cap")
    model.set_objective({"x1": -1, "x2": -1})
    return model


def test_single_bound_lp():
    model = LinearModel()
    model.add_var("x", 0.0, 10.0)
    model.add_constraint({"x": 1}, ">=", 3)
    model.set_objective({"x": 1})
    solution = simplex_solve(model)
    assert solution.status == OPTIMAL
    assert solution.value("x") == pytest.approx(3.0)


def test_two_variable_lp():
    model = LinearModel()
    model.add_var("x", 0.0, 1.0)
    model.add_var("y", 0.0, 1.0)
    model.add_constraint({"x": 1, "y": 1}, "<=", 1)
    model.set_objective({"x": -1, "y": -1})
    assert simplex_solve(model).objective == pytest.approx(-1.0)


def test_equality_and_objective_constant():
    model = LinearModel()
    model.add_var("x", 0.0, 3.0)
    model.add_var("y", 0.0, 3.0)
    model.add_constraint({"x": 1, "y": 1}, "=", 2)
    model.set_objective({"x": 1, "y": -1}, constant=10.0)
    solution = simplex_solve(model)
    assert solution.objective == pytest.approx(8.0)
    assert solution.as_dict() == pytest.approx({"x": 0.0, "y": 2.0})


def test_negative_lower_bounds():
    model = LinearModel()
    model.add_var("x", -5.0, 5.0)
    model.add_constraint({"x": 1}, ">=", -2)
    model.set_objective({"x": 1})
    assert simplex_solve(model).value("x") == pytest.approx(-2.0)


def test_infeasible_lp():
    model = LinearModel()
    model.add_var("x", 0.0, 1.0)
    model.add_constraint({"x": 1}, ">=", 5)
    model.set_objective({"x": 1})
    solution = simplex_solve(model)
    assert solution.status == INFEASIBLE
    assert not solution.has_solution


def test_unbounded_lp_raises():
    with pytest.raises(SolverError, match="unbounded"):
        solve_lp([-1.0], [[1.0]], [">="], [0.0], [0.0], [np.inf])


def test_degenerate_lp_terminates():
    # many redundant constraints through the same vertex
    c = [-1.0, -1.0]
    A = [[1.0, 1.0]] * 12 + [[1.0, 0.0], [0.0, 1.0]]
    result = solve_lp(c, A, ["<="] * 14, [1.0] * 14, [0.0, 0.0], [1.0, 1.0])
    assert result.status == OPTIMAL
    assert result.objective == pytest.approx(-1.0)


def test_random_lps_satisfy_their_constraints(rng):
    for _ in range(20):
        n, m = 4, 5
        A = rng.uniform(-1, 1, size=(m, n))
        x0 = rng.uniform(0, 1, size=n)
        b = A @ x0 + rng.uniform(0, 0.5, size=m)
        model = LinearModel()
        for j in range(n):
            model.add_var(f"x{j}", 0.0, 1.0)
        for row in range(m):
            model.add_constraint({f"x{j}": A[row, j] for j in range(n)}, "<=", float(b[row]), f"r{row}")
        c = rng.uniform(-1, 1, size=n)
        model.set_objective({f"x{j}": c[j] for j in range(n)})
        solution = simplex_solve(model)
        assert solution.status == OPTIMAL
        assert model.check(solution.values) == []
        assert solution.objective <= float(c @ x0) + 1e-9


def test_single_binary():
    model = LinearModel()
    model.add_var("b", binary=True)
    model.add_constraint({"b": 1}, ">=", 0.5)
    model.set_objective({"b": 1})
    solution = branch_and_bound(model)
    assert solution.status == OPTIMAL
    assert solution.value("b") == 1.0
    assert solution.objective == pytest.approx(1.0)


def test_subset_sum_toy():
    solution = branch_and_bound(_subset_sum())
    assert solution.status == OPTIMAL
    assert solution.objective == pytest.approx(8.0)
    assert solution.gap == pytest.approx(0.0)


def test_fractional_relaxation_needs_branching():
    model = _half_knapsack()
    assert simplex_solve(model).objective == pytest.approx(-1.5)
    solution = branch_and_bound(model)
    assert solution.objective == pytest.approx(-1.0)
    assert solution.nodes > 1


def test_node_limit_reports_bound():
    solution = branch_and_bound(_half_knapsack(), node_limit=1)
    assert solution.status == NODE_LIMIT
    assert solution.bound == pytest.approx(-1.5)


def test_time_limit_without_incumbent():
    solution = branch_and_bound(_half_knapsack(), time_limit=0.0)
    assert solution.status == TIME_LIMIT
    assert not solution.has_solution
    assert solution.bound == pytest.approx(-1.5)


def test_incumbent_survives_time_limit_with_bound():
    solution = branch_and_bound(_half_knapsack(), time_limit=0.0, incumbent=np.array([1.0, 0.0]))
    assert solution.status == TIME_LIMIT
    assert solution.objective == pytest.approx(-1.0)
    assert solution.bound == pytest.approx(-1.5)
    assert solution.values.tolist() == [1.0, 0.0]


def test_invalid_incumbent_is_ignored(caplog):
    with caplog.at_level(logging.WARNING, logger="milp.branch_and_bound"):
        solution = branch_and_bound(_half_knapsack(), incumbent=np.array([1.0, 1.0]))
    assert "Ignoring incumbent" in caplog.text
    assert solution.status == OPTIMAL
    assert solution.objective == pytest.approx(-1.0)


def test_dive_reaches_an_incumbent_early():
    solution = branch_and_bound(_half_knapsack(), node_limit=2)
    assert solution.status == NODE_LIMIT
    assert solution.objective == pytest.approx(-1.0)
    assert solution.bound == pytest.approx(-1.5)


def test_cutoff_below_optimum_prunes_everything():
    assert branch_and_bound(_subset_sum(), cutoff=7.0).status == INFEASIBLE
    assert branch_and_bound(_subset_sum(), cutoff=8.0).objective == pytest.approx(8.0)


def test_infeasible_milp():
    model = LinearModel()
    model.add_var("a", binary=True)
    model.add_var("b", binary=True)
    model.add_constraint({"a": 1, "b": 1}, ">=", 3)
    model.set_objective({"a": 1})
    assert branch_and_bound(model).status == INFEASIBLE


def test_fixed_binaries_are_respected():
    model = _subset_sum()
    model.fix("y1", 0.0)
    solution = branch_and_bound(model)
    assert solution.objective == pytest.approx(12.0)
    assert solution.value("y1") == 0.0


def test_model_errors():
    model = LinearModel()
    model.add_var("x", 0.0, 1.0)
    with pytest.raises(SolverError, match="duplicate"):
        model.add_var("x")
    with pytest.raises(SolverError, match="unknown variable"):
        model.add_constraint({"y": 1}, "<=", 1)
    with pytest.raises(SolverError, match="sense"):
        model.add_constraint({"x": 1}, "<", 1)
    model.add_var("free", 0.0)
    with pytest.raises(SolverError, match="finite bounds"):
        model.validate()


def test_copy_is_independent():
    model = _subset_sum()
    clone = model.copy()
    clone.fix("y2", 1.0)
    assert model.bounds()[0].tolist() == [0.0, 0.0, 0.0]
    assert clone.bounds()[0].tolist() == [0.0, 1.0, 0.0]


def test_lp_format_export():
    model = _subset_sum()
    model.fix("y3", 0.0)
    text = model.to_lp_format()
    assert text.startswith("\\ subset-sum\nMinimize\n obj: 3 y1 + 5 y2 + 7 y3")
    assert " reach: 3 y1 + 5 y2 + 7 y3 >= 8" in text
    assert " y3 = 0" in text
    assert "Binaries\n y1 y2 y3" in text
    assert text.endswith("End\n")


def test_solution_serialization():
    solution = branch_and_bound(_subset_sum())
    data = solution.to_dict()
    assert data["status"] == OPTIMAL
    assert data["objective"] == pytest.approx(8.0)
    with pytest.raises(SolverError):
        branch_and_bound(_subset_sum(), time_limit=0.0).value("y1")
