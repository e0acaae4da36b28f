"""Worst-case evaluation and solvers for the p-selection problem with
queryable item failures.

After querying a set I, an adversary splits its deviation budget between the
observed items (where failures are revealed) and the rest; the decision maker
then picks p items keeping at most b failures among them.  This module holds
the feasibility test, exact combinatorial and LP evaluators of the worst-case
cost, the closed-form solver for cardinality-bounded query families, and the
mixed-integer model that optimizes over a whole query family at once.

Item indices in public inputs and outputs are 0-based positions into the
instance cost vector; model variables use 1-based rank suffixes after the
cost sort, with the rank-to-index permutation kept in the model metadata.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Mapping

import numpy as np

from . import kernels, oracle
from .core import (
    CuInstance,
    ExplicitFamily,
    KnapsackFamily,
    Permutation,
    QueryFamily,
    SelectionFamily,
    SplitBudget,
    canonicalize,
    family_contains,
)
from .errors import (
    BackendError,
    CapacityError,
    ConsistencyError,
    SolveTimeout,
    UnsupportedFamilyError,
)
from .milp import BnbParams, LpStatus, MilpModel, bnb_solve, read_solution, write_lp

_SCAN_MAX_N = 26
_FALLBACK_ORACLE_N = 12


class CuStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    # the closed-form solver's hypotheses do not cover the input and the
    # instance is too large for enumeration; the reported set is best-effort
    UNDETERMINED = "undetermined"


@dataclass(frozen=True)
class CuSolution:
    """Query set (original indices), its worst-case value, and how much the
    solver could prove.  ``per_split`` maps each in-set deviation count to
    the worst case under that split, when the solver computed them."""

    query_set: frozenset[int]
    value: float
    status: CuStatus
    per_split: Mapping[int, float] | None = None


@dataclass(frozen=True)
class RestrictedSelectionProblem:
    """Pick exactly ``p`` items at minimum cost with at most ``cap`` of them
    from the marked set."""

    costs: tuple[float, ...]
    marked: frozenset[int]
    p: int
    cap: int

    def __post_init__(self):
        costs = tuple(float(c) for c in self.costs)
        marked = frozenset(int(i) for i in self.marked)
        n = len(costs)
        if any(not math.isfinite(c) for c in costs):
            raise ValueError("costs must be finite")
        if any(not 0 <= i < n for i in marked):
            raise ValueError("marked indices out of range")
        if self.p < 0:
            raise ValueError("p must be nonnegative")
        if self.cap < 0:
            raise ValueError("cap must be nonnegative")
        object.__setattr__(self, "costs", costs)
        object.__setattr__(self, "marked", marked)
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "cap", int(self.cap))


def restricted_selection(prob: RestrictedSelectionProblem) -> float:
    """Exact optimum of the restricted pick: +inf when no feasible count of
    marked picks exists.

    Sorting each side once and sweeping the number of marked picks k over
    its feasible window makes every candidate a pair of prefix sums.
    """
    n = len(prob.costs)
    marked = sorted(prob.marked)
    rest = [i for i in range(n) if i not in prob.marked]
    cm = np.sort(np.asarray([prob.costs[i] for i in marked]))
    cr = np.sort(np.asarray([prob.costs[i] for i in rest]))
    pm = np.concatenate(([0.0], np.cumsum(cm)))
    pr = np.concatenate(([0.0], np.cumsum(cr)))
    lo = max(0, prob.p - len(rest))
    hi = min(prob.cap, len(marked), prob.p)
    if lo > hi:
        return math.inf
    ks = np.arange(lo, hi + 1)
    return float(np.min(pm[ks] + pr[prob.p - ks]))


def _members_array(inst: CuInstance, members: Iterable[int]) -> np.ndarray:
    idx = np.fromiter((int(i) for i in members), dtype=np.int64)
    if idx.size != np.unique(idx).size:
        raise ValueError("query set contains duplicates")
    if idx.size and (idx.min() < 0 or idx.max() >= inst.n):
        raise ValueError("query set indices out of range")
    return idx


def _attacked_prefix(inst: CuInstance, members: np.ndarray, count: int) -> frozenset[int]:
    """The ``count`` members the adversary deviates: cheapest first, ties to
    the lower index."""
    if count == 0:
        return frozenset()
    sub = members[np.lexsort((members, inst.c[members]))]
    return frozenset(int(i) for i in sub[:count])


def phi_split(inst: CuInstance, members: Iterable[int], split: SplitBudget) -> float:
    """Worst case when exactly ``split.gamma_i`` queried items fail.

    The revealed failures are the cheapest queried items.  The decision maker
    either tolerates unobserved failures too (at most b bad picks among the
    failed-or-unobserved pool) or banks on the residual budget being spent
    outside the selection (at most b - gamma_rest picks from the revealed
    failures, everything else clean); the adversary gets the worse branch, so
    the value is the better of the two for the decision maker.
    """
    idx = _members_array(inst, members)
    if split.total != inst.gamma:
        raise ValueError("split must spend exactly the instance budget")
    g_i = split.gamma_i
    if not 0 <= g_i <= min(idx.size, inst.gamma):
        raise ValueError("in-set deviation count out of range")
    costs = tuple(float(c) for c in inst.c)
    attacked = _attacked_prefix(inst, idx, g_i)
    outside = frozenset(range(inst.n)) - frozenset(int(i) for i in idx)
    branch_one = restricted_selection(
        RestrictedSelectionProblem(costs, attacked | outside, inst.p, inst.b)
    )
    cap_two = inst.b - inst.gamma + g_i
    if cap_two < 0:
        branch_two = math.inf
    else:
        branch_two = restricted_selection(
            RestrictedSelectionProblem(costs, attacked, inst.p, cap_two)
        )
    return min(branch_one, branch_two)


def split_range(inst: CuInstance, members: Iterable[int]) -> range:
    """Admissible in-set deviation counts for the given query set."""
    idx = _members_array(inst, members)
    return range(0, min(idx.size, inst.gamma) + 1)


def phi_eval(inst: CuInstance, members: Iterable[int]) -> float:
    """Worst case over every admissible budget split; +inf as soon as one
    split leaves no tolerable selection."""
    idx = _members_array(inst, members)
    perm = canonicalize(inst.c)
    ranks = perm.ranks_of(idx)
    c_sorted = inst.c[perm.order]
    return float(kernels.phi_on_mask(c_sorted, ranks, inst.p, inst.b, inst.gamma))


def check_feasibility(n: int, p: int, b: int, gamma: int, q: int) -> bool | None:
    """Whether some query set of size at most q makes the problem solvable.

    Valid under the hypotheses n >= p + q, p > b, gamma > b; outside them
    the characterization is silent and None is returned.
    """
    for name, v in (("n", n), ("p", p), ("b", b), ("gamma", gamma), ("q", q)):
        if int(v) != v or (v < 0):
            raise ValueError(f"{name} must be a nonnegative integer")
    if not (n >= p + q and p > b and gamma > b):
        return None
    return gamma <= b + q and p <= 2 * b + q - gamma + 1


def _p_cheapest_value(inst: CuInstance) -> float:
    return float(kernels.sum_smallest(inst.c, inst.p))


def solve_selection_cu(inst: CuInstance, q: int) -> CuSolution:
    """Closed-form solver for the at-most-q query family.

    When the failure allowance covers the whole budget or the whole
    selection, querying is pointless and the p cheapest items are optimal.
    Otherwise, under the feasibility hypotheses, the best query is the q
    items ranked just after the b cheapest, and the value is a fixed pair of
    order-statistic sums; everything is rank arithmetic, no full sort.
    Inputs outside the covered regimes fall back to enumeration when small
    enough and are otherwise answered best-effort with an undetermined
    status.
    """
    if int(q) != q or q < 0:
        raise ValueError("q must be a nonnegative integer")
    q = int(q)
    n, p, b, gamma = inst.n, inst.p, inst.b, inst.gamma
    if p <= b or gamma <= b:
        return CuSolution(frozenset(), _p_cheapest_value(inst), CuStatus.OPTIMAL)
    if n >= p + q:
        feasible = check_feasibility(n, p, b, gamma, q)
        assert feasible is not None
        if not feasible:
            return CuSolution(frozenset(), math.inf, CuStatus.INFEASIBLE)
        head = float(kernels.sum_smallest(inst.c, b))
        tail = float(kernels.sum_smallest(inst.c, p - b + gamma)) - float(
            kernels.sum_smallest(inst.c, gamma)
        )
        inner = kernels.smallest_mask(inst.c, b)
        outer = kernels.smallest_mask(inst.c, b + q)
        members = frozenset(int(i) for i in np.flatnonzero(outer & ~inner))
        return CuSolution(members, head + tail, CuStatus.OPTIMAL)
    # not covered by the closed form
    if n <= _FALLBACK_ORACLE_N:
        best_set, best_val = oracle.cu_bruteforce(inst, SelectionFamily(q))
        if best_set is None:
            return CuSolution(frozenset(), math.inf, CuStatus.INFEASIBLE)
        return CuSolution(best_set, best_val, CuStatus.OPTIMAL)
    best_set, best_val = frozenset(), math.inf
    take = min(q, n)
    ordered = np.argsort(inst.c, kind="stable")
    for cand in (
        frozenset(),
        frozenset(int(i) for i in ordered[:take]),
        frozenset(int(i) for i in ordered[min(b, n) : min(b + take, n)]),
    ):
        v = phi_eval(inst, cand)
        if v < best_val:
            best_set, best_val = cand, v
    return CuSolution(best_set, best_val, CuStatus.UNDETERMINED)


# ---------------------------------------------------------------------------
# linear models
#
# Both emitters work in rank space: items are sorted by cost (stable) and
# model variables carry 1-based rank suffixes.  Per deviation count ghat the
# variable block holds convex weights e0/e1 for the two branches and scaled
# selections f (revealed failures), g (clean queried), h (unobserved).


def _block_rows(model: MilpModel, inst: CuInstance, c_sorted, ghat: int, names):
    """Rows shared by the LP and MILP emitters.

    ``names`` maps the symbols eta,e0,e1,f0,f1,g0,g1,h0,h1 to variable names
    (vectors as lists); the caller has already created the variables.
    """
    n = inst.n
    tag = f"g{ghat}"
    coeffs = {names["eta"]: 1.0}
    for sup in ("0", "1"):
        for sym in ("f", "g", "h"):
            for i in range(n):
                coeffs[names[sym + sup][i]] = -float(c_sorted[i])
    model.add_constraint(coeffs, ">=", 0.0, name=f"value_{tag}")
    model.add_constraint({names["e0"]: 1.0, names["e1"]: 1.0}, "=", 1.0, name=f"convex_{tag}")
    # picks are exact: with costs of arbitrary sign, a looser >= here would
    # let a block undercut its true value by over-selecting cheap items
    for sup in ("0", "1"):
        pick = {names["e" + sup]: -float(inst.p)}
        for sym in ("f", "g", "h"):
            for i in range(n):
                pick[names[sym + sup][i]] = 1.0
        model.add_constraint(pick, "=", 0.0, name=f"pick{sup}_{tag}")
    cap0 = {names["e0"]: float(inst.b)}
    for i in range(n):
        cap0[names["f0"][i]] = -1.0
        cap0[names["h0"][i]] = -1.0
    model.add_constraint(cap0, ">=", 0.0, name=f"cap0_{tag}")
    cap1 = {names["e1"]: float(inst.b + ghat - inst.gamma)}
    for i in range(n):
        cap1[names["f1"][i]] = -1.0
    model.add_constraint(cap1, ">=", 0.0, name=f"cap1_{tag}")


def _scale_rows_fixed(model, inst, ghat, names, in_attacked, in_query):
    """Branch-weight caps of the LP variant: membership is data."""
    n = inst.n
    tag = f"g{ghat}"
    for sup in ("0", "1"):
        e = names["e" + sup]
        for i in range(n):
            u = 1.0 if in_attacked[i] else 0.0
            w = 1.0 if in_query[i] else 0.0
            model.add_constraint(
                {e: 1.0, names["f" + sup][i]: -1.0}, ">=", u - 1.0, name=f"ubf{sup}_{tag}_{i+1}"
            )
            model.add_constraint(
                {e: 1.0, names["g" + sup][i]: -1.0}, ">=", w - u - 1.0, name=f"ubg{sup}_{tag}_{i+1}"
            )
            model.add_constraint(
                {e: 1.0, names["h" + sup][i]: -1.0}, ">=", -w, name=f"ubh{sup}_{tag}_{i+1}"
            )


def build_phi_lp(inst: CuInstance, members: Iterable[int]) -> MilpModel:
    """All-continuous model whose optimum is the worst case of ``members``.

    One block per admissible in-set deviation count; the objective variable
    is pushed up to every block's branch-convexified value, so the minimum
    is exactly the adversary's best split.  Infeasible model means +inf.
    """
    idx = _members_array(inst, members)
    perm = canonicalize(inst.c)
    c_sorted = inst.c[perm.order]
    ranks = perm.ranks_of(idx)
    in_query = np.zeros(inst.n, dtype=bool)
    in_query[ranks] = True
    model = MilpModel(name=f"phi_n{inst.n}")
    model.metadata["order"] = [int(i) for i in perm.order]
    model.metadata["query_ranks"] = [int(r) for r in ranks]
    model.add_variable("eta", -math.inf, math.inf)
    model.set_objective({"eta": 1.0})
    for ghat in range(0, min(idx.size, inst.gamma) + 1):
        in_attacked = np.zeros(inst.n, dtype=bool)
        in_attacked[ranks[:ghat]] = True
        names = {"eta": "eta", "e0": f"e0_{ghat}", "e1": f"e1_{ghat}"}
        model.add_variable(names["e0"], 0.0, 1.0)
        model.add_variable(names["e1"], 0.0, 1.0)
        for sup in ("0", "1"):
            for sym, mask in (("f", in_attacked), ("g", in_query & ~in_attacked), ("h", ~in_query)):
                vec = []
                for i in range(inst.n):
                    name = f"{sym}{sup}_{i+1}_{ghat}"
                    model.add_variable(name, 0.0, 1.0 if mask[i] else 0.0)
                    vec.append(name)
                names[sym + sup] = vec
        _block_rows(model, inst, c_sorted, ghat, names)
        _scale_rows_fixed(model, inst, ghat, names, in_attacked, in_query)
    return model


def build_cu_milp(inst: CuInstance, family: QueryFamily) -> MilpModel:
    """Mixed-integer model minimizing the worst case over a whole family.

    Binaries: w (rank queried), u (rank among the revealed failures, forced
    to be a prefix of the queried ranks), z (per-block switch selecting
    whether the deviation count or the query size is the binding cap on u).
    One continuous block per deviation count 0..gamma; counting constraints
    use big-M equal to n.  Knapsack weights ride along the cost sort.
    """
    n, gamma = inst.n, inst.gamma
    perm = canonicalize(inst.c)
    c_sorted = inst.c[perm.order]
    model = MilpModel(name=f"cu_n{n}_gamma{gamma}")
    model.metadata["order"] = [int(i) for i in perm.order]
    model.add_variable("eta", -math.inf, math.inf)
    model.set_objective({"eta": 1.0})
    w = []
    for i in range(n):
        model.add_variable(f"w_{i+1}", 0.0, 1.0, integer=True)
        w.append(f"w_{i+1}")
    if isinstance(family, SelectionFamily):
        model.metadata["family"] = "selection"
        model.add_constraint({wi: 1.0 for wi in w}, "<=", float(family.q), name="family")
    elif isinstance(family, KnapsackFamily):
        if family.a.shape[0] != n:
            raise ValueError("weight vector length must match the instance")
        model.metadata["family"] = "knapsack"
        a_sorted = family.a[perm.order]
        model.add_constraint(
            {w[i]: float(a_sorted[i]) for i in range(n)}, "<=", float(family.capacity), name="family"
        )
    elif isinstance(family, ExplicitFamily):
        raise UnsupportedFamilyError(
            "explicit families have no compact description; enumerate instead"
        )
    else:
        raise TypeError(f"not a query family: {family!r}")
    for ghat in range(0, gamma + 1):
        tag = f"g{ghat}"
        names = {"eta": "eta", "e0": f"e0_{ghat}", "e1": f"e1_{ghat}"}
        model.add_variable(names["e0"], 0.0, 1.0)
        model.add_variable(names["e1"], 0.0, 1.0)
        for sup in ("0", "1"):
            for sym in ("f", "g", "h"):
                vec = []
                for i in range(n):
                    name = f"{sym}{sup}_{i+1}_{ghat}"
                    model.add_variable(name, 0.0, 1.0)
                    vec.append(name)
                names[sym + sup] = vec
        u = []
        for i in range(n):
            name = f"u_{i+1}_{ghat}"
            model.add_variable(name, 0.0, 1.0, integer=True)
            u.append(name)
        z = f"z_{ghat}"
        model.add_variable(z, 0.0, 1.0, integer=True)
        _block_rows(model, inst, c_sorted, ghat, names)
        # branch-weight caps with membership decided by the binaries
        for sup in ("0", "1"):
            e = names["e" + sup]
            for i in range(n):
                model.add_constraint(
                    {e: 1.0, names["f" + sup][i]: -1.0, u[i]: -1.0},
                    ">=",
                    -1.0,
                    name=f"ubf{sup}_{tag}_{i+1}",
                )
                model.add_constraint(
                    {e: 1.0, names["g" + sup][i]: -1.0, w[i]: -1.0, u[i]: 1.0},
                    ">=",
                    -1.0,
                    name=f"ubg{sup}_{tag}_{i+1}",
                )
                model.add_constraint(
                    {e: 1.0, names["h" + sup][i]: -1.0, w[i]: 1.0},
                    ">=",
                    0.0,
                    name=f"ubh{sup}_{tag}_{i+1}",
                )
        # support: f lives on revealed failures, g on clean queried, h outside
        for sup in ("0", "1"):
            for i in range(n):
                model.add_constraint(
                    {names["f" + sup][i]: 1.0, u[i]: -1.0}, "<=", 0.0, name=f"supf{sup}_{tag}_{i+1}"
                )
                model.add_constraint(
                    {names["g" + sup][i]: 1.0, w[i]: -1.0, u[i]: 1.0},
                    "<=",
                    0.0,
                    name=f"supg{sup}_{tag}_{i+1}",
                )
                model.add_constraint(
                    {names["h" + sup][i]: 1.0, w[i]: 1.0}, "<=", 1.0, name=f"suph{sup}_{tag}_{i+1}"
                )
        # revealed failures are queried, and form a prefix of the queried ranks
        for i in range(n):
            model.add_constraint({u[i]: 1.0, w[i]: -1.0}, "<=", 0.0, name=f"uw_{tag}_{i+1}")
        for i in range(n):
            for j in range(i + 1, n):
                model.add_constraint(
                    {u[i]: 1.0, u[j]: -1.0, w[i]: -1.0}, ">=", -1.0, name=f"prefix_{tag}_{i+1}_{j+1}"
                )
        # |revealed| = min(ghat, |queried|), switched by z
        big_m = float(n)
        wsum = {w[i]: 1.0 for i in range(n)}
        usum = {u[i]: 1.0 for i in range(n)}
        model.add_constraint({**wsum, z: -big_m}, "<=", float(ghat), name=f"count_a_{tag}")
        model.add_constraint({**wsum, z: -big_m}, ">=", float(ghat) - big_m, name=f"count_b_{tag}")
        model.add_constraint(
            {**usum, z: -big_m}, ">=", float(ghat) - big_m, name=f"count_c_{tag}"
        )
        model.add_constraint(
            {**usum, **{w[i]: -1.0 for i in range(n)}, z: big_m}, ">=", 0.0, name=f"count_d_{tag}"
        )
        model.add_constraint(usum, "<=", float(ghat), name=f"count_e_{tag}")
        model.add_constraint(
            {**usum, **{w[i]: -1.0 for i in range(n)}}, "<=", 0.0, name=f"count_f_{tag}"
        )
    # branch hint: settle the counting switches first, then the reveal
    # prefixes from the cheapest rank out (a low u with its w forced on
    # zeroes every later u through the prefix rows), then the query picks;
    # relaxations dodge the worst case mainly by spreading u fractionally,
    # so u splits move the bound where w splits barely do
    hint = {f"z_{g}": 4.0 for g in range(gamma + 1)}
    for i in range(1, n + 1):
        hint[f"w_{i}"] = 1.0 + 1.0 / (1.0 + i)
        for g in range(gamma + 1):
            hint[f"u_{i}_{g}"] = 2.0 + 1.0 / (1.0 + i)
    model.metadata["branch_priority"] = hint
    return model


# ---------------------------------------------------------------------------
# family-level solving


def min_phi_over_family(
    inst: CuInstance, family: QueryFamily
) -> tuple[frozenset[int], float]:
    """Exhaustive minimum of the worst case over the family.

    Exponential subset scan for compact families (guarded to n <= 26),
    direct enumeration for explicit ones.  Returns (set, value); value is
    +inf when every admissible set is hopeless.
    """
    if isinstance(family, ExplicitFamily):
        best_set, best_val = frozenset(), math.inf
        for s in sorted(family.sets, key=lambda s: (len(s), sorted(s))):
            v = phi_eval(inst, s)
            if v < best_val:
                best_set, best_val = frozenset(s), v
        return best_set, best_val
    if inst.n > _SCAN_MAX_N:
        raise CapacityError(f"subset scan capped at n = {_SCAN_MAX_N}")
    perm = canonicalize(inst.c)
    c_sorted = inst.c[perm.order]
    if isinstance(family, SelectionFamily):
        a_sorted = np.ones(inst.n)
        cap = float(min(family.q, inst.n))
    elif isinstance(family, KnapsackFamily):
        if family.a.shape[0] != inst.n:
            raise ValueError("weight vector length must match the instance")
        a_sorted = family.a[perm.order].astype(np.float64)
        cap = float(family.capacity)
    else:
        raise TypeError(f"not a query family: {family!r}")
    val, mask = kernels.scan_family_min_phi(c_sorted, a_sorted, inst.p, inst.b, inst.gamma, cap)
    members = frozenset(int(perm.order[r]) for r in range(inst.n) if (int(mask) >> r) & 1)
    return members, float(val)


def _decode_query(model: MilpModel, values: Mapping[str, float]) -> frozenset[int]:
    order = model.metadata["order"]
    picked = []
    for r in range(len(order)):
        v = values.get(f"w_{r+1}", 0.0)
        if abs(v - round(v)) > 1e-4:
            raise ConsistencyError(f"w_{r+1} = {v} is not integral")
        if round(v) == 1:
            picked.append(order[r])
    return frozenset(int(i) for i in picked)


def solve_cu(
    inst: CuInstance,
    family: QueryFamily,
    backend: str = "builtin",
    *,
    time_limit: float | None = None,
    params: BnbParams | None = None,
) -> CuSolution:
    """Optimize the query choice over a compact family.

    ``backend`` is either "builtin" (the bundled branch and bound) or
    "lpfile:<path>" which writes the model to <path> and reads the variable
    values back from the sibling .sol file an external solver produced.
    The winning set is re-evaluated combinatorially and must agree with the
    reported objective; the returned value is the combinatorial one.
    """
    if isinstance(family, ExplicitFamily):
        raise UnsupportedFamilyError(
            "explicit families have no compact description; enumerate instead"
        )
    if inst.p <= inst.b or inst.gamma <= inst.b:
        value = _p_cheapest_value(inst)
        return CuSolution(frozenset(), value, CuStatus.OPTIMAL, per_split={0: value})
    model = build_cu_milp(inst, family)
    if backend == "builtin":
        bp = params or BnbParams(branching="priority")
        if time_limit is not None:
            bp = replace(bp, time_limit=float(time_limit))
        sol = bnb_solve(model, bp)
        if sol.status == LpStatus.INFEASIBLE:
            return CuSolution(frozenset(), math.inf, CuStatus.INFEASIBLE)
        if sol.status == LpStatus.ITERATION_LIMIT:
            raise SolveTimeout(
                "branch and bound hit its node or time limit before proving optimality"
            )
        if sol.status != LpStatus.OPTIMAL:
            raise BackendError(f"builtin solver failed: {sol.status.value}")
        values = {name: float(v) for name, v in zip(sol.names, sol.x)}
        objective = float(sol.objective)
    elif backend.startswith("lpfile:"):
        path = backend[len("lpfile:") :]
        if not path:
            raise BackendError("lpfile backend needs a path, e.g. lpfile:/tmp/model.lp")
        import os

        with open(path, "w", encoding="utf-8") as fh:
            fh.write(write_lp(model))
        stem, ext = os.path.splitext(path)
        sol_path = (stem if ext.lower() == ".lp" else path) + ".sol"
        if not os.path.exists(sol_path):
            raise BackendError(
                f"model written to {path}; place the solver's variable values at {sol_path}"
            )
        with open(sol_path, "r", encoding="utf-8") as fh:
            values = read_solution(fh.read(), model)
        if "eta" not in values:
            raise BackendError(f"{sol_path} does not assign the objective variable eta")
        objective = float(values["eta"])
    else:
        raise BackendError(f"unknown backend: {backend!r}")

    members = _decode_query(model, values)
    if not family_contains(family, members):
        raise ConsistencyError(f"backend returned an inadmissible query set {sorted(members)}")
    value = phi_eval(inst, members)
    if not math.isfinite(value) or abs(value - objective) > 1e-6 + 1e-9 * abs(objective):
        raise ConsistencyError(
            f"objective {objective} disagrees with the evaluator's {value} on {sorted(members)}"
        )
    per_split = {
        g: phi_split(inst, members, SplitBudget.of(inst.gamma, g))
        for g in split_range(inst, members)
    }
    return CuSolution(members, value, CuStatus.OPTIMAL, per_split=per_split)
