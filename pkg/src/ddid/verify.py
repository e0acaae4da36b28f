"""Randomized cross-checks of every fast path against its exhaustive oracle.

Each suite draws instances from its own seeded stream, compares a closed
form, solver, or model against the reference implementation, and greedily
shrinks the first failing input before reporting it.  The callables under
test are resolved through an override table, so a test can inject a broken
implementation and confirm the harness catches it.

Suites marked heavy (LP and MILP solves per trial) run a fifth of the
requested trial count; everything is deterministic in (max_n, trials, seed).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from itertools import combinations

import numpy as np

from . import core, cu, milp, oracle, ou


def _defaults() -> dict:
    return {
        "psi_closed_form": ou.psi_closed_form,
        "psi_split": ou.psi_split,
        "psi_bruteforce": oracle.psi_bruteforce,
        "solve_selection": ou.solve_selection,
        "solve_knapsack": ou.solve_knapsack,
        "ou_bruteforce": oracle.ou_bruteforce,
        "phi_split": cu.phi_split,
        "phi_split_bruteforce": oracle.phi_split_bruteforce,
        "phi_eval": cu.phi_eval,
        "phi_bruteforce": oracle.phi_bruteforce,
        "build_phi_lp": cu.build_phi_lp,
        "check_feasibility": cu.check_feasibility,
        "solve_selection_cu": cu.solve_selection_cu,
        "solve_cu": cu.solve_cu,
        "cu_bruteforce": oracle.cu_bruteforce,
        "simplex_solve": milp.simplex_solve,
        "bnb_solve": milp.bnb_solve,
        "write_lp": milp.write_lp,
        "read_lp": milp.read_lp,
    }


@dataclass(frozen=True)
class SuiteResult:
    name: str
    trials: int
    seconds: float
    failure: str | None

    @property
    def ok(self) -> bool:
        return self.failure is None


# ---------------------------------------------------------------------------
# counterexample shrinking


def _minimize(state, fails, moves):
    """Greedy shrink: keep applying the first simplifying move that still
    fails until none does.  Moves must yield valid inputs only; a candidate
    that makes the check itself crash is rejected, not embraced."""
    changed = True
    while changed:
        changed = False
        for cand in moves(state):
            try:
                bad = fails(cand)
            except Exception:
                bad = False
            if bad:
                state = cand
                changed = True
                break
    return state


def _ou_moves(state):
    cb, ch, gamma, members = state
    n = len(cb)
    if n > 1:
        for j in range(n - 1, -1, -1):
            yield (
                cb[:j] + cb[j + 1 :],
                ch[:j] + ch[j + 1 :],
                gamma,
                tuple(i if i < j else i - 1 for i in members if i != j),
            )
    if gamma > 0:
        yield (cb, ch, gamma - 1, members)
    for j in members:
        yield (cb, ch, gamma, tuple(i for i in members if i != j))
    for j in range(n):
        if ch[j] != 0:
            yield (cb, ch[:j] + (0.0,) + ch[j + 1 :], gamma, members)
        if cb[j] != 0:
            yield (cb[:j] + (0.0,) + cb[j + 1 :], ch, gamma, members)


def _cu_moves(state):
    c, p, b, gamma, members = state
    n = len(c)
    if n > 1 and p < n:
        for j in range(n - 1, -1, -1):
            yield (
                c[:j] + c[j + 1 :],
                p,
                b,
                gamma,
                tuple(i if i < j else i - 1 for i in members if i != j),
            )
    if p > 1:
        yield (c, p - 1, b, gamma, members)
    if b > 0:
        yield (c, p, b - 1, gamma, members)
    if gamma > 0:
        yield (c, p, b, gamma - 1, members)
    for j in members:
        yield (c, p, b, gamma, tuple(i for i in members if i != j))
    for j in range(n):
        if c[j] != 0:
            yield (c[:j] + (0.0,) + c[j + 1 :], p, b, gamma, members)


def _shrink_ou(state, fails) -> str:
    cb, ch, gamma, members = _minimize(state, fails, _ou_moves)
    return (
        f"c_bar={list(cb)} c_hat={list(ch)} gamma={gamma} I={sorted(members)}"
    )


def _shrink_cu(state, fails) -> str:
    c, p, b, gamma, members = _minimize(state, fails, _cu_moves)
    return f"c={list(c)} p={p} b={b} gamma={gamma} I={sorted(members)}"


# ---------------------------------------------------------------------------
# draws


def _draw_ou(rng, max_n):
    n = int(rng.integers(1, max_n + 1))
    cb = tuple(float(v) for v in rng.integers(0, 21, n))
    ch = tuple(float(v) for v in rng.integers(0, 21, n))
    gamma = int(rng.integers(0, n + 3))
    return cb, ch, gamma


def _draw_cu(rng, max_n, min_n=1):
    n = int(rng.integers(min_n, max_n + 1))
    c = tuple(float(v) for v in rng.integers(-5, 16, n))
    p = int(rng.integers(1, n + 1))
    b = int(rng.integers(0, 4))
    gamma = int(rng.integers(0, 5))
    return c, p, b, gamma


def _subset(rng, n):
    return tuple(int(i) for i in range(n) if rng.random() < 0.5)


def _ou_inst(state):
    cb, ch, gamma, _ = state
    return core.OuInstance(c_bar=np.array(cb), c_hat=np.array(ch), gamma=gamma)


def _cu_inst(state):
    c, p, b, gamma, _ = state
    return core.CuInstance(c=np.array(c), p=p, b=b, gamma=gamma)


# ---------------------------------------------------------------------------
# suites: one-item variant


def _suite_ou_closed_form(rng, max_n, trials, F):
    def fails(state):
        return F["psi_closed_form"](_ou_inst(state), state[3]) != F[
            "psi_bruteforce"
        ](_ou_inst(state), state[3])

    for _ in range(trials):
        cb, ch, gamma = _draw_ou(rng, max_n)
        state = (cb, ch, gamma, _subset(rng, len(cb)))
        if fails(state):
            state = _minimize(state, fails, _ou_moves)
            got = F["psi_closed_form"](_ou_inst(state), state[3])
            want = F["psi_bruteforce"](_ou_inst(state), state[3])
            return f"closed form {got} != enumeration {want} on {_shrink_ou(state, fails)}"
    return None


def _suite_ou_split_envelope(rng, max_n, trials, F):
    def fails(state):
        inst = _ou_inst(state)
        members = state[3]
        top = max(
            F["psi_split"](inst, members, core.SplitBudget.of(inst.gamma, g))
            for g in range(min(len(members), inst.gamma) + 1)
        )
        return F["psi_closed_form"](inst, members) != top

    for _ in range(trials):
        cb, ch, gamma = _draw_ou(rng, max_n)
        gamma = min(gamma, len(cb))  # splits must sum to the budget exactly
        state = (cb, ch, gamma, _subset(rng, len(cb)))
        if fails(state):
            return f"split envelope misses the closed form on {_shrink_ou(state, fails)}"
    return None


def _suite_ou_dominance(rng, max_n, trials, F):
    for _ in range(trials):
        cb, ch, _ = _draw_ou(rng, max_n)
        n = len(cb)
        gamma = int(rng.integers(1, n + 1))
        inst = core.OuInstance(c_bar=np.array(cb), c_hat=np.array(ch), gamma=gamma)
        first = np.sort(rng.choice(n, size=gamma, replace=False))
        second = np.sort(rng.choice(n, size=gamma, replace=False))
        if first[-1] == second[-1]:
            continue
        if first[-1] > second[-1]:
            first, second = second, first
        perm = core.canonicalize(np.array(cb))
        early = perm.originals_of(first)
        late = perm.originals_of(second)
        lo = F["psi_closed_form"](inst, early)
        hi = F["psi_closed_form"](inst, late)
        if lo > hi:
            return (
                f"later-ending query set is cheaper: {lo} > {hi} with "
                f"c_bar={list(cb)} c_hat={list(ch)} gamma={gamma} "
                f"I={sorted(early)} I'={sorted(late)}"
            )
    return None


def _suite_ou_extension(rng, max_n, trials, F):
    for _ in range(trials):
        cb, ch, _ = _draw_ou(rng, max_n)
        n = len(cb)
        if n < 2:
            continue
        gamma = int(rng.integers(1, n))
        inst = core.OuInstance(c_bar=np.array(cb), c_hat=np.array(ch), gamma=gamma)
        base = np.sort(rng.choice(n - 1, size=min(gamma, n - 1), replace=False))
        if base.size != gamma:
            continue
        beyond = [r for r in range(int(base[-1]) + 1, n)]
        room = (n - 1) - gamma
        if not beyond or room <= 0:
            continue
        extra = rng.choice(beyond, size=min(len(beyond), 1 + int(rng.integers(room))), replace=False)
        extended = np.sort(np.concatenate([base, extra]))[: n - 1]
        perm = core.canonicalize(np.array(cb))
        small = perm.originals_of(base)
        large = perm.originals_of(extended)
        a = F["psi_closed_form"](inst, small)
        b = F["psi_closed_form"](inst, large)
        if a != b:
            return (
                f"extending past the last item changed the value: {a} != {b} "
                f"with c_bar={list(cb)} c_hat={list(ch)} gamma={gamma} "
                f"I={sorted(small)} I'={sorted(large)}"
            )
    return None


def _suite_ou_solvers(rng, max_n, trials, F):
    for _ in range(trials):
        cb, ch, gamma = _draw_ou(rng, max_n)
        inst = core.OuInstance(c_bar=np.array(cb), c_hat=np.array(ch), gamma=gamma)
        n = len(cb)
        q = int(rng.integers(0, n + 1))
        got = F["solve_selection"](inst, q)
        _, want = F["ou_bruteforce"](inst, core.SelectionFamily(q=q))
        if got.value != want or not core.family_contains(
            core.SelectionFamily(q=q), got.query_set
        ):
            return (
                f"selection solver {got.value} vs enumeration {want} with "
                f"c_bar={list(cb)} c_hat={list(ch)} gamma={gamma} q={q}"
            )
        a = tuple(float(v) for v in rng.integers(0, 9, n))
        cap = float(rng.integers(0, int(sum(a)) + 2))
        fam = core.KnapsackFamily(a=np.array(a), capacity=cap)
        got = F["solve_knapsack"](inst, np.array(a), cap)
        _, want = F["ou_bruteforce"](inst, fam)
        if got.value != want or not core.family_contains(fam, got.query_set):
            return (
                f"knapsack solver {got.value} vs enumeration {want} with "
                f"c_bar={list(cb)} c_hat={list(ch)} gamma={gamma} a={list(a)} C={cap}"
            )
    return None


# ---------------------------------------------------------------------------
# suites: p-selection variant


def _suite_cu_prefix_attack(rng, max_n, trials, F):
    def fails(state):
        inst = _cu_inst(state)
        members = state[4]
        for g in range(min(len(members), inst.gamma) + 1):
            fast = F["phi_split"](inst, members, core.SplitBudget.of(inst.gamma, g))
            slow = F["phi_split_bruteforce"](inst, members, g)
            if fast != slow:
                return True
        return False

    for _ in range(trials):
        c, p, b, gamma = _draw_cu(rng, max_n)
        state = (c, p, b, gamma, _subset(rng, len(c)))
        if fails(state):
            return f"prefix attack is not worst-case on {_shrink_cu(state, fails)}"
    return None


def _suite_cu_evaluators(rng, max_n, trials, F):
    def fails(state):
        return F["phi_eval"](_cu_inst(state), state[4]) != F["phi_bruteforce"](
            _cu_inst(state), state[4]
        )

    heavy = max(8, trials // 5)
    for k in range(trials):
        c, p, b, gamma = _draw_cu(rng, max_n)
        members = _subset(rng, len(c))
        state = (c, p, b, gamma, members)
        if fails(state):
            state = _minimize(state, fails, _cu_moves)
            got = F["phi_eval"](_cu_inst(state), state[4])
            want = F["phi_bruteforce"](_cu_inst(state), state[4])
            return f"evaluator {got} != enumeration {want} on {_shrink_cu(state, fails)}"
        if k < heavy:
            inst = _cu_inst(state)
            want = F["phi_bruteforce"](inst, members)
            sol = F["simplex_solve"](F["build_phi_lp"](inst, members))
            if math.isinf(want):
                bad = sol.status != milp.LpStatus.INFEASIBLE
            else:
                bad = (
                    sol.status != milp.LpStatus.OPTIMAL
                    or abs(sol.objective - want) > 1e-6
                )
            if bad:
                return (
                    f"linear model gives {sol.status.value}"
                    f"/{sol.objective} vs {want} on c={list(c)} p={p} b={b} "
                    f"gamma={gamma} I={sorted(members)}"
                )
    return None


def _suite_cu_vertex_integrality(rng, max_n, trials, F):
    for _ in range(trials):
        n = int(rng.integers(1, max_n + 1))
        marked = rng.integers(0, 2, n).astype(bool)
        p = int(rng.integers(0, n + 1))
        cap = int(rng.integers(0, n + 1))
        c = rng.integers(-9, 10, n).astype(np.float64)
        model = milp.MilpModel("restricted_pick")
        for i in range(n):
            model.add_variable(f"x_{i+1}", 0.0, 1.0)
        model.add_constraint({f"x_{i+1}": 1.0 for i in range(n)}, "=", float(p))
        if marked.any():
            model.add_constraint(
                {f"x_{i+1}": 1.0 for i in range(n) if marked[i]}, "<=", float(cap)
            )
        model.set_objective({f"x_{i+1}": float(c[i]) for i in range(n)})
        sol = F["simplex_solve"](model)
        if sol.status != milp.LpStatus.OPTIMAL:
            continue
        drift = float(np.abs(sol.x - np.round(sol.x)).max(initial=0.0))
        if drift > 1e-9:
            return (
                f"fractional vertex (drift {drift:.2e}) with marked="
                f"{list(map(int, marked))} p={p} cap={cap} c={c.tolist()}"
            )
    return None


def _draw_cu_hypothesis(rng, max_n):
    """Parameters inside the feasibility characterization's regime."""
    n = int(rng.integers(2, max_n + 1))
    p = int(rng.integers(1, n + 1))
    b = int(rng.integers(0, min(p, 3)))
    gamma = int(rng.integers(b + 1, b + 5))
    q = int(rng.integers(0, n - p + 1))
    return n, p, b, gamma, q


def _suite_cu_feasibility(rng, max_n, trials, F):
    for _ in range(trials):
        n, p, b, gamma, q = _draw_cu_hypothesis(rng, max_n)
        c = rng.integers(0, 51, n).astype(np.float64)
        inst = core.CuInstance(c=c, p=p, b=b, gamma=gamma)
        predicted = F["check_feasibility"](n, p, b, gamma, q)
        _, value = F["cu_bruteforce"](inst, core.SelectionFamily(q=q))
        if predicted is None or predicted != (not math.isinf(value)):
            return (
                f"characterization says {predicted}, enumeration value {value} "
                f"for n={n} p={p} b={b} gamma={gamma} q={q}"
            )
    return None


def _suite_cu_theorem(rng, max_n, trials, F):
    for _ in range(trials):
        n, p, b, gamma, q = _draw_cu_hypothesis(rng, max_n)
        c = rng.integers(0, 51, n).astype(np.float64)
        inst = core.CuInstance(c=c, p=p, b=b, gamma=gamma)
        got = F["solve_selection_cu"](inst, q)
        _, want = F["cu_bruteforce"](inst, core.SelectionFamily(q=q))
        if math.isinf(want):
            if got.status != cu.CuStatus.INFEASIBLE:
                return (
                    f"closed form returned {got.status.value} on an infeasible "
                    f"instance c={c.tolist()} p={p} b={b} gamma={gamma} q={q}"
                )
        elif got.status != cu.CuStatus.OPTIMAL or got.value != want:
            return (
                f"closed form {got.value} != enumeration {want} on "
                f"c={c.tolist()} p={p} b={b} gamma={gamma} q={q}"
            )
    return None


def _suite_cu_theorem_split(rng, max_n, trials, F):
    for _ in range(trials):
        n, p, b, gamma, q = _draw_cu_hypothesis(rng, max_n)
        if q == 0 or p <= b or gamma <= b:
            continue
        c = rng.integers(0, 51, n).astype(np.float64)
        inst = core.CuInstance(c=c, p=p, b=b, gamma=gamma)
        got = F["solve_selection_cu"](inst, q)
        if got.status != cu.CuStatus.OPTIMAL or not got.query_set:
            continue
        at = F["phi_split"](
            inst, got.query_set, core.SplitBudget.of(gamma, gamma - b)
        )
        if at != F["phi_eval"](inst, got.query_set):
            return (
                f"spending gamma-b={gamma - b} inside the optimal query set is "
                f"not a worst case: {at} vs {F['phi_eval'](inst, got.query_set)} "
                f"on c={c.tolist()} p={p} b={b} gamma={gamma} q={q}"
            )
    return None


def _suite_cu_milp_solver(rng, max_n, trials, F):
    def fails(state):
        c, p, b, gamma, fam_key = state
        inst = _cu_inst((c, p, b, gamma, ()))
        fam = _unpack_family(fam_key)
        _, want = F["cu_bruteforce"](inst, fam)
        got = F["solve_cu"](inst, fam)
        if math.isinf(want):
            return got.status != cu.CuStatus.INFEASIBLE
        return got.status != cu.CuStatus.OPTIMAL or abs(got.value - want) > 1e-9

    def moves(state):
        c, p, b, gamma, fam_key = state
        n = len(c)
        if n > 1 and p < n:
            for j in range(n - 1, -1, -1):
                fk = fam_key
                if fam_key[0] == "knapsack":
                    fk = ("knapsack", fam_key[1][:j] + fam_key[1][j + 1 :], fam_key[2])
                yield (c[:j] + c[j + 1 :], p, b, gamma, fk)
        for cand in _cu_moves((c, p, b, gamma, ())):
            c2, p2, b2, g2, _ = cand
            if len(c2) == n:
                yield (c2, p2, b2, g2, fam_key)
        if fam_key[0] == "selection" and fam_key[1] > 0:
            yield (c, p, b, gamma, ("selection", fam_key[1] - 1))

    for _ in range(trials):
        c, p, b, gamma = _draw_cu(rng, min(max_n, 8), min_n=2)
        n = len(c)
        if rng.integers(0, 2) == 0:
            fam_key = ("selection", int(rng.integers(0, n + 1)))
        else:
            a = tuple(float(v) for v in rng.integers(0, 7, n))
            fam_key = ("knapsack", a, float(rng.integers(0, int(sum(a)) + 2)))
        state = (c, p, b, gamma, fam_key)
        if fails(state):
            state = _minimize(state, fails, moves)
            c, p, b, gamma, fam_key = state
            return (
                f"family optimizer disagrees with enumeration on c={list(c)} "
                f"p={p} b={b} gamma={gamma} family={fam_key}"
            )
    return None


def _unpack_family(fam_key):
    if fam_key[0] == "selection":
        return core.SelectionFamily(q=fam_key[1])
    return core.KnapsackFamily(a=np.array(fam_key[1]), capacity=fam_key[2])


# ---------------------------------------------------------------------------
# suites: linear solver infrastructure


def _draw_model_data(rng, max_vars, *, all_binary=False, allow_inf=True):
    ns = int(rng.integers(1, max_vars + 1))
    bounds = []
    for _ in range(ns):
        if all_binary:
            bounds.append((0.0, 1.0, True))
            continue
        lo = float(rng.integers(-3, 1))
        hi = lo + float(rng.integers(0, 5))
        isint = bool(rng.random() < 0.5)
        if not isint and allow_inf and rng.random() < 0.15:
            hi = math.inf
        bounds.append((lo, hi, isint))
    rows = []
    for _ in range(int(rng.integers(1, 4))):
        picks = rng.choice(ns, size=int(rng.integers(1, ns + 1)), replace=False)
        coeffs = {int(j): float(rng.integers(-4, 5)) for j in picks}
        sense = ("<=", ">=", "=")[int(rng.integers(0, 3))]
        rows.append((coeffs, sense, float(rng.integers(-6, 9))))
    obj = tuple(float(rng.integers(-5, 6)) for _ in range(ns))
    return (tuple(bounds), tuple(rows), obj)


def _build_model(data) -> milp.MilpModel:
    bounds, rows, obj = data
    model = milp.MilpModel()
    for j, (lo, hi, isint) in enumerate(bounds):
        model.add_variable(f"v{j}", lo, hi, integer=isint)
    for coeffs, sense, rhs in rows:
        model.add_constraint({f"v{j}": v for j, v in coeffs.items()}, sense, rhs)
    model.set_objective({f"v{j}": v for j, v in enumerate(obj) if v})
    return model


def _model_moves(data):
    bounds, rows, obj = data
    for r in range(len(rows) - 1, -1, -1):
        yield (bounds, rows[:r] + rows[r + 1 :], obj)
    if len(bounds) > 1:
        for j in range(len(bounds) - 1, -1, -1):
            nb = bounds[:j] + bounds[j + 1 :]
            nr = tuple(
                (
                    {(k if k < j else k - 1): v for k, v in coeffs.items() if k != j},
                    sense,
                    rhs,
                )
                for coeffs, sense, rhs in rows
            )
            nr = tuple(row for row in nr if row[0])
            yield (nb, nr, obj[:j] + obj[j + 1 :])


def _vertex_optimum(model) -> tuple[bool, float]:
    """Exhaustive vertex scan of a finitely-boxed model.

    Every vertex has each variable either basic (pinned by an active row) or
    at a bound, so enumerating (active rows, basic variables, bound pattern)
    visits all of them; any surviving candidate is feasible, and an optimal
    vertex always survives.  Returns (feasible, minimum objective).
    """
    ns, m = model.n_variables, model.n_constraints
    mat, _, rhs, slo, shi = model._compile()
    dense = mat[:, :ns].toarray() if m else np.zeros((0, ns))
    lo = np.asarray(model.lower, dtype=np.float64)
    hi = np.asarray(model.upper, dtype=np.float64)
    cvec = model.objective_vector()
    tol = 1e-7
    feasible = False
    best = math.inf
    for k in range(min(m, ns) + 1):
        for rows in combinations(range(m), k):
            for basic in combinations(range(ns), k):
                nonbasic = [j for j in range(ns) if j not in basic]
                a_bb = dense[np.ix_(rows, basic)] if k else np.zeros((0, 0))
                for pattern in range(1 << len(nonbasic)):
                    x = np.empty(ns)
                    for t, j in enumerate(nonbasic):
                        x[j] = hi[j] if (pattern >> t) & 1 else lo[j]
                    if k:
                        rr = rhs[list(rows)] - dense[np.ix_(rows, nonbasic)] @ x[nonbasic]
                        try:
                            x[list(basic)] = np.linalg.solve(a_bb, rr)
                        except np.linalg.LinAlgError:
                            continue
                    if np.any(x < lo - tol) or np.any(x > hi + tol):
                        continue
                    slack = rhs - dense @ x if m else np.zeros(0)
                    if np.any(slack < slo - tol) or np.any(slack > shi + tol):
                        continue
                    feasible = True
                    best = min(best, float(cvec @ x))
    return feasible, best


def _suite_milp_simplex(rng, max_n, trials, F):
    for _ in range(trials):
        data = _draw_model_data(rng, min(8, max(2, max_n)), allow_inf=False)
        model = _build_model(data)
        feasible, want = _vertex_optimum(model)
        sol = F["simplex_solve"](model)
        if not feasible:
            if sol.status != milp.LpStatus.INFEASIBLE:
                return f"vertex scan infeasible, solver says {sol.status.value}: {data!r}"
            continue
        if sol.status != milp.LpStatus.OPTIMAL or abs(sol.objective - want) > 1e-7 * (
            1.0 + abs(want)
        ):
            return (
                f"solver {sol.status.value}/{sol.objective} vs vertex scan "
                f"{want}: {data!r}"
            )
    return None


def _grid_optimum(model) -> tuple[bool, float]:
    """Brute force over all 0/1 assignments of an all-binary model."""
    ns, m = model.n_variables, model.n_constraints
    mat, _, rhs, slo, shi = model._compile()
    dense = mat[:, :ns].toarray() if m else np.zeros((0, ns))
    grid = ((np.arange(1 << ns)[:, None] >> np.arange(ns)[None, :]) & 1).astype(
        np.float64
    )
    slack = rhs[None, :] - grid @ dense.T if m else np.zeros((1 << ns, 0))
    ok = np.all((slack >= slo - 1e-9) & (slack <= shi + 1e-9), axis=1)
    if not ok.any():
        return False, math.inf
    vals = grid[ok] @ model.objective_vector()
    return True, float(vals.min())


def _suite_milp_bnb(rng, max_n, trials, F):
    def fails(data):
        model = _build_model(data)
        feasible, want = _grid_optimum(model)
        sol = F["bnb_solve"](model)
        if not feasible:
            return sol.status != milp.LpStatus.INFEASIBLE
        return sol.status != milp.LpStatus.OPTIMAL or abs(sol.objective - want) > 1e-7

    for _ in range(trials):
        data = _draw_model_data(rng, 12, all_binary=True)
        if fails(data):
            data = _minimize(data, fails, _model_moves)
            return f"tree search disagrees with the 0/1 grid on {data!r}"
    return None


def _suite_milp_root_bound(rng, max_n, trials, F):
    for _ in range(trials):
        data = _draw_model_data(rng, 8)
        model = _build_model(data)
        root = F["simplex_solve"](model)
        if root.status != milp.LpStatus.OPTIMAL:
            continue
        sol = F["bnb_solve"](model)
        if sol.status != milp.LpStatus.OPTIMAL:
            continue
        if sol.objective < root.objective - 1e-7 * (1.0 + abs(root.objective)):
            return (
                f"integral optimum {sol.objective} beats the relaxation "
                f"{root.objective} on {data!r}"
            )
    return None


def _suite_milp_roundtrip(rng, max_n, trials, F):
    # read_lp declares variables in mention order, so the byte-level check is
    # a fixed point: the second generation must reproduce itself exactly
    for _ in range(trials):
        data = _draw_model_data(rng, 8)
        model = _build_model(data)
        back = F["read_lp"](F["write_lp"](model))
        if back != model:
            return f"text round trip altered the model: {data!r}"
        text = F["write_lp"](back)
        again = F["read_lp"](text)
        if again != back or F["write_lp"](again) != text:
            return f"rewritten text is not a fixed point: {data!r}"
    return None


# ---------------------------------------------------------------------------
# runner

_HEAVY = {"cu milp solver", "milp simplex vs vertices", "milp root bound"}

_SUITES = (
    ("ou closed form", _suite_ou_closed_form),
    ("ou split envelope", _suite_ou_split_envelope),
    ("ou dominance", _suite_ou_dominance),
    ("ou extension", _suite_ou_extension),
    ("ou solvers vs oracle", _suite_ou_solvers),
    ("cu prefix attack", _suite_cu_prefix_attack),
    ("cu evaluator triple", _suite_cu_evaluators),
    ("cu vertex integrality", _suite_cu_vertex_integrality),
    ("cu feasibility", _suite_cu_feasibility),
    ("cu theorem", _suite_cu_theorem),
    ("cu theorem split", _suite_cu_theorem_split),
    ("cu milp solver", _suite_cu_milp_solver),
    ("milp simplex vs vertices", _suite_milp_simplex),
    ("milp bnb vs grid", _suite_milp_bnb),
    ("milp root bound", _suite_milp_root_bound),
    ("milp lp roundtrip", _suite_milp_roundtrip),
)


def suite_names() -> tuple[str, ...]:
    return tuple(name for name, _ in _SUITES)


def run_suites(
    max_n: int = 8,
    trials: int = 200,
    seed: int = 0,
    overrides: dict | None = None,
    names=None,
) -> list[SuiteResult]:
    """Run the invariant suites and return one result per suite.

    ``overrides`` replaces checked callables by name (see `_defaults`);
    ``names`` restricts to a subset of `suite_names`.  Heavy suites run
    trials/5 rounds.  Deterministic in (max_n, trials, seed).
    """
    if max_n < 1:
        raise ValueError("max_n must be at least 1")
    cap = oracle.OracleLimits().max_n
    if max_n > cap:
        raise ValueError(f"max_n must stay within the oracle cap {cap}")
    if trials < 1:
        raise ValueError("trials must be at least 1")
    F = _defaults()
    if overrides:
        unknown = set(overrides) - set(F)
        if unknown:
            raise ValueError(f"unknown overrides: {sorted(unknown)}")
        F.update(overrides)
    wanted = set(names) if names is not None else None
    if wanted is not None:
        unknown = wanted - set(suite_names())
        if unknown:
            raise ValueError(f"unknown suites: {sorted(unknown)}")
    results = []
    for idx, (name, fn) in enumerate(_SUITES):
        if wanted is not None and name not in wanted:
            continue
        rng = np.random.default_rng([seed, idx])
        count = max(8, trials // 5) if name in _HEAVY else trials
        t0 = time.perf_counter()
        failure = fn(rng, max_n, count, F)
        results.append(
            SuiteResult(name, count, time.perf_counter() - t0, failure)
        )
    return results


def format_report(results) -> str:
    lines = []
    for r in results:
        if r.ok:
            lines.append(f"{r.name}: pass ({r.trials} trials, {r.seconds:.1f}s)")
        else:
            lines.append(f"{r.name}: FAIL: {r.failure}")
    bad = sum(not r.ok for r in results)
    lines.append(
        f"{len(results) - bad}/{len(results)} suites passed"
        if bad
        else f"all {len(results)} suites passed"
    )
    return "\n".join(lines)
