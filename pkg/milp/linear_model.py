"""
Linear Model
Bounded-variable mixed-integer linear programs: the carrier between the
formulation builders and the internal simplex / branch-and-bound engine.
"""

import copy
import logging
from dataclasses import dataclass
from typing import Optional

import numpy as np

from scheduling.errors import SolverError

logger = logging.getLogger(__name__)

SENSES = ("<=", "=", ">=")

# Solution statuses
OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
ITERATION_LIMIT = "iteration-limit"
TIME_LIMIT = "time-limit"
NODE_LIMIT = "node-limit"


@dataclass
class Variable:
    name: str
    lb: float = 0.0
    ub: float = np.inf
    binary: bool = False


@dataclass
class Constraint:
    coeffs: dict          # variable index -> coefficient
    sense: str
    rhs: float
    name: Optional[str] = None


@dataclass
class MilpSolution:
    status: str
    objective: Optional[float] = None
    values: Optional[np.ndarray] = None
    names: tuple = ()
    nodes: int = 0
    solve_time: float = 0.0
    bound: Optional[float] = None
    iterations: int = 0

    @property
    def has_solution(self) -> bool:
        return self.values is not None

    @property
    def gap(self) -> Optional[float]:
        if self.objective is None or self.bound is None:
            return None
        return max(self.objective - self.bound, 0.0)

    def value(self, name: str) -> float:
        if self.values is None:
            raise SolverError(f"no solution values (status {self.status})")
        return float(self.values[self.names.index(name)])

    def as_dict(self) -> dict:
        """Variable name -> value."""
        if self.values is None:
            return {}
        return dict(zip(self.names, self.values.tolist()))

    def to_dict(self) -> dict:
        return {
            "status": self.status,
            "objective": self.objective,
            "bound": self.bound,
            "gap": self.gap,
            "nodes": self.nodes,
            "solve_time": round(self.solve_time, 4),
        }


class LinearModel:
    """Minimization model with named variables and finite bounds."""

    def __init__(self, name: str = "model"):
        self.name = name
        self.variables: list = []
        self.constraints: list = []
        self.objective: dict = {}
        self.objective_constant = 0.0
        self._index: dict = {}

    def __len__(self) -> int:
        return len(self.variables)

    def add_var(self, name: str, lb: float = 0.0, ub: float = np.inf, binary: bool = False) -> int:
        if name in self._index:
            raise SolverError(f"duplicate variable '{name}'")
        if binary:
            lb, ub = max(lb, 0.0), min(ub, 1.0)
        self._index[name] = len(self.variables)
        self.variables.append(Variable(name, float(lb), float(ub), binary))
        return self._index[name]

    def has_var(self, name: str) -> bool:
        return name in self._index

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise SolverError(f"unknown variable '{name}'") from None

    def _resolve(self, coeffs: dict) -> dict:
        resolved: dict = {}
        for key, coef in coeffs.items():
            idx = key if isinstance(key, int) else self.index(key)
            if coef:
                resolved[idx] = resolved.get(idx, 0.0) + float(coef)
        return resolved

    def add_constraint(self, coeffs: dict, sense: str, rhs: float, name: Optional[str] = None):
        if sense not in SENSES:
            raise SolverError(f"unknown constraint sense '{sense}'")
        self.constraints.append(Constraint(self._resolve(coeffs), sense, float(rhs), name))

    def set_objective(self, coeffs: dict, constant: float = 0.0):
        self.objective = self._resolve(coeffs)
        self.objective_constant = float(constant)

    def copy(self) -> "LinearModel":
        return copy.deepcopy(self)

    def fix(self, name: str, value: float):
        var = self.variables[self.index(name)]
        var.lb = var.ub = float(value)

    def validate(self):
        for var in self.variables:
            if not (np.isfinite(var.lb) and np.isfinite(var.ub)):
                raise SolverError(f"variable '{var.name}' needs finite bounds")
            if var.lb > var.ub:
                raise SolverError(f"variable '{var.name}' has lb > ub")
            if var.binary and (var.lb < 0 or var.ub > 1):
                raise SolverError(f"binary variable '{var.name}' outside [0, 1]")
        n = len(self.variables)
        for con in self.constraints:
            if any(not 0 <= idx < n for idx in con.coeffs):
                raise SolverError(f"constraint '{con.name}' references undeclared variables")

    @property
    def names(self) -> tuple:
        return tuple(var.name for var in self.variables)

    @property
    def binary_mask(self) -> np.ndarray:
        return np.array([var.binary for var in self.variables], dtype=bool)

    def bounds(self) -> tuple:
        lb = np.array([var.lb for var in self.variables])
        ub = np.array([var.ub for var in self.variables])
        return lb, ub

    def to_arrays(self) -> tuple:
        """(c, A, senses, b) with a dense constraint matrix."""
        n = len(self.variables)
        c = np.zeros(n)
        for idx, coef in self.objective.items():
            c[idx] = coef
        A = np.zeros((len(self.constraints), n))
        b = np.empty(len(self.constraints))
        senses = []
        for row, con in enumerate(self.constraints):
            for idx, coef in con.coeffs.items():
                A[row, idx] = coef
            b[row] = con.rhs
            senses.append(con.sense)
        return c, A, senses, b

    def check(self, values, tol: float = 1e-6) -> list:
        """Names (or row numbers) of constraints and bounds violated by `values`."""
        values = np.asarray(values, dtype=float)
        violated = []
        for row, con in enumerate(self.constraints):
            lhs = sum(coef * values[idx] for idx, coef in con.coeffs.items())
            scale = tol * max(1.0, abs(con.rhs))
            if (con.sense == "<=" and lhs > con.rhs + scale) or \
               (con.sense == ">=" and lhs < con.rhs - scale) or \
               (con.sense == "=" and abs(lhs - con.rhs) > scale):
                violated.append(con.name or f"row{row}")
        for idx, var in enumerate(self.variables):
            if values[idx] < var.lb - tol or values[idx] > var.ub + tol:
                violated.append(f"bound:{var.name}")
        return violated

    def to_lp_format(self) -> str:
        """Export in the CPLEX LP text format for cross-checking with external solvers."""

        def term_list(coeffs: dict) -> str:
            parts = []
            for idx, coef in sorted(coeffs.items()):
                sign = "-" if coef < 0 else "+"
                parts.append(f"{sign} {abs(coef):.12g} {_lp_name(self.variables[idx].name)}")
            text = " ".join(parts) if parts else "0"
            return text[2:] if text.startswith("+ ") else text

        lines = [f"\\ {self.name}", "Minimize", f" obj: {term_list(self.objective)}", "Subject To"]
        for row, con in enumerate(self.constraints):
            label = _lp_name(con.name or f"c{row}")
            lines.append(f" {label}: {term_list(con.coeffs)} {con.sense} {con.rhs:.12g}")
        lines.append("Bounds")
        for var in self.variables:
            if not var.binary:
                lines.append(f" {var.lb:.12g} <= {_lp_name(var.name)} <= {var.ub:.12g}")
            elif var.lb == var.ub:
                lines.append(f" {_lp_name(var.name)} = {var.lb:.12g}")
        binaries = [_lp_name(var.name) for var in self.variables if var.binary]
        if binaries:
            lines.append("Binaries")
            lines.append(" " + " ".join(binaries))
        lines.append("End")
        return "\n".join(lines) + "\n"


def _lp_name(name: str) -> str:
    return "".join(ch if ch.isalnum() or ch in "_." else "_" for ch in name)
