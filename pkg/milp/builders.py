"""
Formulation builders
Translate scheduling instances into LinearModel instances:

    build_raswtg0   worst-case idle + overtime cost, every customer shows
    build_raswtg_k  the same with exactly k shows chosen by the adversary
    build_wsras     weighted sum of worst-case idle, waiting and overtime cost
    build_saa_rwtg  sample-average cost under robust waiting guarantees

Appointments and customers are 0-based. pi[i,j] = 1 assigns customer j to
appointment i; A[i] is the start of appointment i and A[n] stands for the
horizon L. Breakpoint b means appointments before b take minimum service
and appointments from b on take maximum service.

warm_start completes a known schedule into a full assignment so
branch-and-bound starts from an incumbent.
"""

import itertools
import logging
import math
from typing import Optional

import numpy as np

from config.solver_config import BRANCH_AND_BOUND, FORMULATION
from milp.branch_and_bound import branch_and_bound
from milp.linear_model import LinearModel, MilpSolution
from scheduling.errors import InvalidInputError, SizeCapError, UnsupportedCaseError
from scheduling.model import Instance, Schedule, Sequence

logger = logging.getLogger(__name__)

PREFIX_MODES = ("ordered", "enumerated")


def _combine(*terms) -> dict:
    """Sum (scale, expression) pairs into one coefficient map."""
    out: dict = {}
    for scale, expr in terms:
        for name, coef in expr.items():
            out[name] = out.get(name, 0.0) + scale * coef
    return out


class _Formulation:
    """Shared pieces: assignment, start times, per-appointment parameters."""

    def __init__(self, inst: Instance, name: str, service_cap: Optional[float] = None):
        self.inst = inst
        self.n = inst.n
        self.model = LinearModel(name)
        total_ub = float(inst.service_ub.sum())
        self.service_cap = max(total_ub, service_cap or 0.0)
        self.a_bound = inst.horizon + total_ub
        self.big_m = self.a_bound + self.service_cap
        self.p_max = float(inst.service_ub.max())

        n = self.n
        for i in range(n):
            for j in range(n):
                self.model.add_var(f"pi[{i},{j}]", binary=True)
        for i in range(n):
            self.model.add_constraint({f"pi[{i},{j}]": 1 for j in range(n)}, "=", 1, f"assign_slot[{i}]")
        for j in range(n):
            self.model.add_constraint({f"pi[{i},{j}]": 1 for i in range(n)}, "=", 1, f"assign_customer[{j}]")
        for i in range(n):
            self.model.add_var(f"A[{i}]", 0.0, 0.0 if i == 0 else self.a_bound)

    def start(self, i: int) -> tuple:
        """(expression, constant) for A_i, with A_n = L."""
        if i == self.n:
            return {}, self.inst.horizon
        return {f"A[{i}]": 1.0}, 0.0

    def param(self, values, i: int) -> dict:
        """sum_j values[j] * pi[i,j], the value of the customer at appointment i."""
        return {f"pi[{i},{j}]": float(values[j]) for j in range(self.n) if values[j]}

    def completion_block(self, tag: str, service_of, length: int):
        """
        Completion times C[tag][0..length-1] pinned to
        C_i = max(A_i, C_{i-1}) + service_of(i), with one binary per appointment.
        """
        model = self.model
        for i in range(length):
            c_name = f"C[{tag}][{i}]"
            model.add_var(c_name, 0.0, self.big_m)
            service = service_of(i)
            if i == 0:
                model.add_constraint(_combine((1, {c_name: 1}), (-1, service)), "=", 0, f"{c_name}:first")
                continue
            prev = f"C[{tag}][{i - 1}]"
            z_name = f"z[{tag}][{i}]"
            model.add_var(z_name, binary=True)
            a_expr = {f"A[{i}]": 1.0}
            model.add_constraint(_combine((1, {c_name: 1}), (-1, a_expr), (-1, service)), ">=", 0, f"{c_name}:ge_start")
            model.add_constraint(_combine((1, {c_name: 1}), (-1, {prev: 1}), (-1, service)), ">=", 0, f"{c_name}:ge_prev")
            model.add_constraint(
                _combine((1, {c_name: 1}), (-1, a_expr), (-1, service), (-self.big_m, {z_name: 1})),
                "<=", 0, f"{c_name}:le_start",
            )
            model.add_constraint(
                _combine((1, {c_name: 1}), (-1, {prev: 1}), (-1, service), (self.big_m, {z_name: 1})),
                "<=", self.big_m, f"{c_name}:le_prev",
            )

    def idle_vars(self, tag: str, upto: int) -> list:
        """D[tag][i] >= A_i - C[tag][i-1] for i = 1..upto (A_n = L); returns names."""
        names = []
        for i in range(1, upto + 1):
            d_name = f"D[{tag}][{i}]"
            self.model.add_var(d_name, 0.0, self.a_bound)
            a_expr, a_const = self.start(i)
            self.model.add_constraint(
                _combine((1, {d_name: 1}), (-1, a_expr), (1, {f"C[{tag}][{i - 1}]": 1})),
                ">=", a_const, f"{d_name}:idle",
            )
            names.append(d_name)
        return names

    def idle_cost_terms(self, idle_names: list) -> dict:
        # idle_names[t] is the idle before appointment t+1
        return {name: float(self.inst.idle_cost[t + 1]) for t, name in enumerate(idle_names)}

    def waiting_constraints(self, budget: Optional[int]):
        """
        Worst-case waiting of appointment i over windows l..i-1: the full
        maximum-service sum while the window holds at most `budget` appointments,
        otherwise the dual of the top-`budget` sum. budget=None means every
        customer shows.
        """
        model, inst, n = self.model, self.inst, self.n
        for i in range(1, n):
            wait_limit = self.param(inst.wait_guarantee, i)
            for l in range(i):
                size = i - l
                lhs = _combine((1, {f"A[{l}]": 1}), (-1, {f"A[{i}]": 1}), (-1, wait_limit))
                if budget is None or size <= budget:
                    for sigma in range(l, i):
                        lhs = _combine((1, lhs), (1, self.param(inst.service_ub, sigma)))
                else:
                    alpha = f"alpha[{i},{l}]"
                    model.add_var(alpha, 0.0, self.p_max)
                    lhs = _combine((1, lhs), (budget, {alpha: 1}))
                    for sigma in range(l, i):
                        q = f"q[{i},{l},{sigma}]"
                        model.add_var(q, 0.0, self.p_max)
                        lhs = _combine((1, lhs), (1, {q: 1}))
                        model.add_constraint(
                            _combine((1, {alpha: 1}), (1, {q: 1}), (-1, self.param(inst.service_ub, sigma))),
                            ">=", 0, f"{q}:dual",
                        )
                model.add_constraint(lhs, "<=", 0, f"wait[{i},{l}]")

    def suffix_ub(self, b: int) -> dict:
        return _combine(*[(1, self.param(self.inst.service_ub, s)) for s in range(b, self.n)])

    def overtime_var(self, name: str, b: int, load: dict, load_const: float = 0.0) -> Optional[str]:
        """sigma >= A_b + load - L; None for the pure-idle breakpoint."""
        if b == self.n:
            return None
        self.model.add_var(name, 0.0, self.big_m)
        self.model.add_constraint(
            _combine((1, {name: 1}), (-1, {f"A[{b}]": 1}), (-1, load)),
            ">=", load_const - self.inst.horizon, f"{name}:overtime",
        )
        return name

    def cost_cap(self, extra: float = 0.0) -> float:
        inst = self.inst
        return (float(inst.idle_cost.sum()) + inst.overtime_cost + extra) * (self.big_m + inst.horizon) + 1.0

    def add_worst_case_bound(self, idle_names: list, overtime: Optional[str], tag: str):
        terms = [(1, {"U": 1}), (-1, self.idle_cost_terms(idle_names))]
        if overtime is not None:
            terms.append((-self.inst.overtime_cost, {overtime: 1}))
        self.model.add_constraint(_combine(*terms), ">=", 0, f"U>={tag}")

    def exact_idle(self, tag: str, upto: int) -> list:
        """Like idle_vars, but D[tag][i] is pinned to max(A_i - C[tag][i-1], 0) by h[tag][i]."""
        names = self.idle_vars(tag, upto)
        for i, d_name in enumerate(names, start=1):
            h_name = f"h[{tag}][{i}]"
            self.model.add_var(h_name, binary=True)
            a_expr, a_const = self.start(i)
            self.model.add_constraint({d_name: 1, h_name: -self.a_bound}, "<=", 0, f"{d_name}:off")
            self.model.add_constraint(
                _combine((1, {d_name: 1}), (-1, a_expr), (1, {f"C[{tag}][{i - 1}]": 1}), (self.big_m, {h_name: 1})),
                "<=", a_const + self.big_m, f"{d_name}:on",
            )
        return names

    def ordered_prefix(self, b: int, shows: int, lo_idle: list) -> list:
        """
        Prefix block of breakpoint b when `shows` of appointments 0..b-1 show
        with minimum service. lam[b,i] marks a show; the shows are forced onto
        the appointments with the smallest c(i) * p_lower, where c(i) is the
        idle cost of the next appointment after i with positive idle when the
        whole prefix shows with minimum service (lo_idle, pinned by
        exact_idle). gamma[b,i,l] = 1 selects that appointment; l = b + 1
        means none and is priced at the largest appointment idle cost.
        Returns the idle variable names before appointments 1..b.
        """
        model, inst = self.model, self.inst
        tag = f"b{b}"
        eps = FORMULATION["idle_epsilon"]
        lo_max = float(inst.service_lb.max())
        costs = inst.idle_cost
        no_idle_cost = float(costs[:-1].max())
        key_cap = float(costs.max()) * lo_max

        show_sum = {}
        for i in range(b):
            y, v = f"lam[{b},{i}]", f"v[{b},{i}]"
            model.add_var(y, binary=True)
            model.add_var(v, 0.0, lo_max)
            lower = self.param(inst.service_lb, i)
            model.add_constraint({v: 1, y: -lo_max}, "<=", 0, f"{v}:off")
            model.add_constraint(_combine((1, {v: 1}), (-1, lower)), "<=", 0, f"{v}:cap")
            model.add_constraint(_combine((1, {v: 1}), (-1, lower), (-lo_max, {y: 1})), ">=", -lo_max, f"{v}:on")
            show_sum[y] = 1.0
        model.add_constraint(show_sum, "=", shows, f"shows[{b}]")

        self.completion_block(tag, lambda i: {f"v[{b},{i}]": 1.0}, b)
        idle = self.idle_vars(tag, b)

        keys = []
        for i in range(b):
            choice, share, key = {}, {}, {}
            for l in range(i + 1, b + 2):
                g, pc = f"gamma[{b},{i},{l}]", f"pc[{b},{i},{l}]"
                model.add_var(g, binary=True)
                model.add_var(pc, 0.0, lo_max)
                choice[g] = 1.0
                share[pc] = 1.0
                key[pc] = float(costs[l]) if l <= b else no_idle_cost
                model.add_constraint({pc: 1, g: -lo_max}, "<=", 0, f"{pc}:off")
                if l <= b:
                    model.add_constraint({g: 1, lo_idle[l - 1]: -1.0 / eps}, "<=", 0, f"{g}:idle")
                between = range(i + 1, min(l, b + 1))
                if between:
                    model.add_constraint(
                        _combine((1, {lo_idle[a - 1]: 1 for a in between}), (self.big_m, {g: 1})),
                        "<=", self.big_m + eps * len(between), f"{g}:quiet",
                    )
            model.add_constraint(choice, "=", 1, f"gamma[{b},{i}]:one")
            model.add_constraint(_combine((1, share), (-1, self.param(inst.service_lb, i))), "=", 0, f"pc[{b},{i}]:split")
            keys.append(key)

        for i1 in range(b):
            for i2 in range(b):
                if i1 == i2:
                    continue
                # a show at i2 next to a no-show at i1 needs key(i2) <= key(i1)
                model.add_constraint(
                    _combine((1, keys[i2]), (-1, keys[i1]),
                             (key_cap, {f"lam[{b},{i2}]": 1}), (-key_cap, {f"lam[{b},{i1}]": 1})),
                    "<=", key_cap, f"order[{b},{i1},{i2}]",
                )
        return idle


def build_raswtg0(inst: Instance) -> LinearModel:
    """Worst-case cost minimization with waiting guarantees when every customer shows."""
    if not inst.zero_noshow:
        raise UnsupportedCaseError(
            f"build_raswtg0 needs show_count = n = {inst.n}, got {inst.show_count}; use build_raswtg_k"
        )
    f = _Formulation(inst, "raswtg0")
    model, n = f.model, f.n
    model.add_var("U", 0.0, f.cost_cap())

    f.completion_block("lo", lambda i: f.param(inst.service_lb, i), n)
    idle = f.idle_vars("lo", n)
    for b in range(n + 1):
        overtime = f.overtime_var(f"sigma[{b}]", b, f.suffix_ub(b))
        f.add_worst_case_bound(idle[:b], overtime, f"b{b}")

    f.waiting_constraints(None)
    model.set_objective({"U": 1})
    logger.debug(f"raswtg0: {len(model)} variables, {len(model.constraints)} constraints")
    return model


def prefix_block_count(inst: Instance) -> int:
    """Number of show-set blocks the enumerated general-k model would need."""
    n, k = inst.n, inst.show_count
    return sum(math.comb(b, k - (n - b)) for b in range(n + 1) if k > n - b)


def build_raswtg_k(inst: Instance, prefix: str = "ordered") -> LinearModel:
    """
    Worst-case cost minimization with exactly k shows.

    For breakpoint b with s = n - b suffix appointments: if k <= s nobody in
    the prefix shows and the suffix load is the top-k maximum service,
    written through its dual (k*beta + sum r, beta + r >= p_upper). Otherwise
    the whole suffix shows and k - s prefix appointments show with minimum
    service. prefix="ordered" picks them inside the model by the c(i) * p_lower
    ordering; its size is polynomial in n and its objective is a lower bound
    on the true optimum.
    prefix="enumerated" adds one completion block per show-set and is exact,
    for instances within FORMULATION["max_prefix_blocks"].
    """
    if prefix not in PREFIX_MODES:
        raise InvalidInputError(f"unknown prefix mode '{prefix}', expected one of {PREFIX_MODES}")
    if prefix == "enumerated":
        blocks = prefix_block_count(inst)
        cap = FORMULATION["max_prefix_blocks"]
        if blocks > cap:
            raise SizeCapError(f"enumerated general-k model needs {blocks} show-set blocks, cap is {cap}")

    f = _Formulation(inst, f"raswtg_k[{prefix}]")
    model, n, k = f.model, f.n, inst.show_count
    model.add_var("U", 0.0, f.cost_cap())

    zero_idle = None
    full_idle = None
    if prefix == "ordered" and 0 < k < n:
        # shared all-show pattern that locates the next positive idle
        f.completion_block("lo", lambda i: f.param(inst.service_lb, i), n)
        full_idle = f.exact_idle("lo", n)
    for b in range(n + 1):
        suffix = n - b
        if k <= suffix:
            if zero_idle is None:
                f.completion_block("none", lambda i: {}, n)
                zero_idle = f.idle_vars("none", n)
            load = {}
            if k > 0:
                beta = f"beta[{b}]"
                model.add_var(beta, 0.0, f.p_max)
                load = {beta: float(k)}
                for s in range(b, n):
                    r = f"r[{b},{s}]"
                    model.add_var(r, 0.0, f.p_max)
                    load[r] = 1.0
                    model.add_constraint(
                        _combine((1, {beta: 1, r: 1}), (-1, f.param(inst.service_ub, s))),
                        ">=", 0, f"{r}:dual",
                    )
            overtime = f.overtime_var(f"sigma[{b}]", b, load)
            f.add_worst_case_bound(zero_idle[:b], overtime, f"b{b}")
            continue

        shows = k - suffix
        overtime = f.overtime_var(f"sigma[{b}]", b, f.suffix_ub(b))
        if shows == b:
            # the whole prefix shows
            if full_idle is None:
                f.completion_block("lo", lambda i: f.param(inst.service_lb, i), n)
                full_idle = f.idle_vars("lo", n)
            f.add_worst_case_bound(full_idle[:b], overtime, f"b{b}")
            continue
        if prefix == "ordered":
            f.add_worst_case_bound(f.ordered_prefix(b, shows, full_idle), overtime, f"b{b}")
            continue
        for shown in itertools.combinations(range(b), shows):
            tag = f"b{b}s" + "-".join(str(i) for i in shown)
            members = set(shown)
            f.completion_block(
                tag,
                lambda i, members=members: f.param(inst.service_lb, i) if i in members else {},
                b,
            )
            f.add_worst_case_bound(f.idle_vars(tag, b), overtime, tag)

    if k >= 1:
        f.waiting_constraints(None if k == n else k - 1)
    model.set_objective({"U": 1})
    logger.debug(f"raswtg_k (k={k}, {prefix}): {len(model)} variables, {len(model.constraints)} constraints")
    return model


def build_wsras(inst: Instance, wait_cost: float) -> LinearModel:
    """Weighted sum of idle, waiting and overtime cost over the breakpoint scenarios."""
    if not inst.zero_noshow:
        raise UnsupportedCaseError(f"build_wsras needs show_count = n = {inst.n}, got {inst.show_count}")
    if wait_cost < 0:
        raise InvalidInputError("wait_cost must be non-negative")
    f = _Formulation(inst, "wsras")
    model, n = f.model, f.n
    model.add_var("U", 0.0, f.cost_cap(extra=wait_cost * n))

    for b in range(n + 1):
        tag = f"b{b}"
        f.completion_block(
            tag,
            lambda i, b=b: f.param(inst.service_lb if i < b else inst.service_ub, i),
            n,
        )
        idle = f.idle_vars(tag, n)
        terms = [(1, {"U": 1}), (-1, f.idle_cost_terms(idle))]
        for i in range(1, n):
            w_name = f"w[{tag}][{i}]"
            model.add_var(w_name, 0.0, f.big_m)
            model.add_constraint(
                _combine((1, {w_name: 1}), (-1, {f"C[{tag}][{i - 1}]": 1}), (1, {f"A[{i}]": 1})),
                ">=", 0, f"{w_name}:wait",
            )
            terms.append((-wait_cost, {w_name: 1}))
        o_name = f"sigma[{tag}]"
        model.add_var(o_name, 0.0, f.big_m)
        model.add_constraint(
            _combine((1, {o_name: 1}), (-1, {f"C[{tag}][{n - 1}]": 1})),
            ">=", -inst.horizon, f"{o_name}:overtime",
        )
        terms.append((-inst.overtime_cost, {o_name: 1}))
        model.add_constraint(_combine(*terms), ">=", 0, f"U>={tag}")

    model.set_objective({"U": 1})
    return model


def build_saa_rwtg(inst: Instance, samples) -> LinearModel:
    """Average realized cost over sampled service times, with robust waiting guarantees."""
    samples = np.asarray(samples, dtype=float)
    if samples.ndim != 2 or samples.shape[0] == 0:
        raise InvalidInputError("samples must be a non-empty N x n matrix")
    if samples.shape[1] != inst.n:
        raise InvalidInputError(f"samples have {samples.shape[1]} columns, instance has {inst.n} customers")
    if not inst.zero_noshow:
        raise UnsupportedCaseError(f"build_saa_rwtg needs show_count = n = {inst.n}, got {inst.show_count}")
    if np.any(samples < 0):
        raise InvalidInputError("sampled service times must be non-negative")

    f = _Formulation(inst, "saa_rwtg", service_cap=float(samples.sum(axis=1).max()))
    model, n = f.model, f.n
    count = samples.shape[0]
    objective = {}
    for l in range(count):
        tag = f"s{l}"
        f.completion_block(tag, lambda i, l=l: f.param(samples[l], i), n)
        idle = f.idle_vars(tag, n)
        o_name = f"sigma[{tag}]"
        model.add_var(o_name, 0.0, f.big_m)
        model.add_constraint(
            _combine((1, {o_name: 1}), (-1, {f"C[{tag}][{n - 1}]": 1})),
            ">=", -inst.horizon, f"{o_name}:overtime",
        )
        u_name = f"U[{l}]"
        model.add_var(u_name, 0.0, f.cost_cap())
        model.add_constraint(
            _combine((1, {u_name: 1}), (-1, f.idle_cost_terms(idle)), (-inst.overtime_cost, {o_name: 1})),
            "=", 0, f"{u_name}:cost",
        )
        objective[u_name] = 1.0 / count

    f.waiting_constraints(None)
    model.set_objective(objective)
    return model


def fix_sequence(model: LinearModel, sequence: Sequence) -> LinearModel:
    """Fix the assignment binaries of a built model to `sequence` (in place)."""
    n = len(sequence)
    for i in range(n):
        for j in range(n):
            model.fix(f"pi[{i},{j}]", 1.0 if sequence.perm[i] == j else 0.0)
    return model


def extract_schedule(solution: MilpSolution, inst: Instance) -> Schedule:
    """Read the assignment and appointment times out of a solved model."""
    values = solution.as_dict()
    n = inst.n
    perm = []
    for i in range(n):
        row = [values[f"pi[{i},{j}]"] for j in range(n)]
        perm.append(int(np.argmax(row)))
    start = [0.0] + [max(values[f"A[{i}]"], 0.0) for i in range(1, n)]
    return Schedule(Sequence(tuple(perm)), start)


def warm_start(model: LinearModel, schedule: Schedule) -> Optional[MilpSolution]:
    """
    Complete `schedule` into a full assignment of `model`: the assignment and
    start times are fixed and the remaining variables solved. None when the
    schedule does not fit the model.
    """
    fixed = fix_sequence(model.copy(), schedule.sequence)
    for i in range(1, len(schedule.start)):
        name = f"A[{i}]"
        start = float(schedule.start[i])
        if start > fixed.variables[fixed.index(name)].ub:
            logger.debug(f"Warm start rejected: {name}={start:.4f} above its bound")
            return None
        fixed.fix(name, start)
    solution = branch_and_bound(fixed, node_limit=BRANCH_AND_BOUND["seed_node_limit"])
    if not solution.has_solution:
        logger.debug(f"Warm start for '{model.name}' not completed ({solution.status})")
        return None
    return solution
