"""Linear-model toolkit: model container, LP and MILP solvers, file I/O.

The solver stack is self-contained: a bounded-variable primal simplex with an
explicit dense basis inverse (rank-1 updates, periodic refactorization, and a
certification pass before any claimed optimum), and a best-first branch and
bound on top of it.  Models can also be written to and read back from the
standard LP text format so external solvers can be used for cross-checks.
"""

from __future__ import annotations

import math
import re
import time
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import sparse

from . import kernels
from .errors import ParseError

_NAME_RE = re.compile(r"^[A-Za-z_][A-Za-z0-9_]*$")
_SENSES = ("<=", "=", ">=")


class LpStatus(Enum):
    OPTIMAL = "optimal"
    INFEASIBLE = "infeasible"
    UNBOUNDED = "unbounded"
    ITERATION_LIMIT = "iteration_limit"
    NUMERIC_FAILURE = "numeric_failure"


@dataclass(frozen=True)
class LpSolution:
    """Outcome of an LP or MILP solve.

    ``x`` holds the structural variable values in declaration order;
    ``basis`` the basic column indices of the final simplex basis (slack and
    repair columns included), when one exists.  For tree searches ``bound``
    is the best proven lower bound and ``nodes`` the number of explored
    nodes.
    """

    status: LpStatus
    objective: float | None
    x: np.ndarray | None
    names: tuple[str, ...] = ()
    basis: tuple[int, ...] | None = None
    iterations: int = 0
    bound: float | None = None
    nodes: int | None = None

    def value_of(self, name: str) -> float:
        if self.x is None:
            raise ValueError("solution carries no variable values")
        try:
            return float(self.x[self.names.index(name)])
        except ValueError as exc:
            raise KeyError(name) from exc


@dataclass
class BnbParams:
    """Knobs for the branch-and-bound search.

    ``branching`` picks the rule for choosing the variable to split on:
    "most_fractional" (default) takes the fractional variable farthest from
    an integer; "priority" consults ``model.metadata["branch_priority"]``
    (name -> weight, missing names weigh 0) and splits the most fractional
    variable within the highest-weight fractional class.
    """

    integrality_tol: float = 1e-6
    node_limit: int = 200_000
    time_limit: float | None = None
    branching: str = "most_fractional"

    def __post_init__(self):
        if not self.integrality_tol > 0:
            raise ValueError("integrality_tol must be positive")
        if self.node_limit < 1:
            raise ValueError("node_limit must be at least 1")
        if self.time_limit is not None and not self.time_limit > 0:
            raise ValueError("time_limit must be positive")
        if self.branching not in ("most_fractional", "priority"):
            raise ValueError(f"unknown branching rule: {self.branching!r}")


class MilpModel:
    """A linear model in minimization form.

    Variables carry bounds and an integrality flag; constraints are linear
    with sense <=, = or >=.  The model is append-only: build it up, then
    hand it to a solver or the LP writer.
    """

    def __init__(self, name: str = "model"):
        self.name = name
        self.variable_names: list[str] = []
        self.lower: list[float] = []
        self.upper: list[float] = []
        self.is_integer: list[bool] = []
        self._index: dict[str, int] = {}
        self._objective: dict[int, float] = {}
        self.rows: list[tuple[tuple[int, ...], tuple[float, ...], str, float, str]] = []
        self.metadata: dict = {}
        self._compiled = None

    # -- construction -----------------------------------------------------

    def add_variable(
        self,
        name: str,
        lower: float = 0.0,
        upper: float = math.inf,
        integer: bool = False,
    ) -> int:
        if not _NAME_RE.match(name):
            raise ValueError(f"invalid variable name: {name!r}")
        if name in self._index:
            raise ValueError(f"duplicate variable name: {name!r}")
        lower = float(lower)
        upper = float(upper)
        if math.isnan(lower) or math.isnan(upper) or lower > upper:
            raise ValueError(f"invalid bounds for {name}: [{lower}, {upper}]")
        if integer and not (math.isfinite(lower) and math.isfinite(upper)):
            raise ValueError(f"integer variable {name} needs finite bounds")
        idx = len(self.variable_names)
        self.variable_names.append(name)
        self.lower.append(lower)
        self.upper.append(upper)
        self.is_integer.append(bool(integer))
        self._index[name] = idx
        self._compiled = None
        return idx

    def _resolve(self, coeffs) -> dict[int, float]:
        items = coeffs.items() if isinstance(coeffs, Mapping) else coeffs
        out: dict[int, float] = {}
        for key, val in items:
            idx = self._index[key] if isinstance(key, str) else int(key)
            if not 0 <= idx < len(self.variable_names):
                raise ValueError(f"unknown variable: {key!r}")
            out[idx] = out.get(idx, 0.0) + float(val)
        return out

    def add_constraint(self, coeffs, sense: str, rhs: float, name: str | None = None) -> int:
        if sense not in _SENSES:
            raise ValueError(f"sense must be one of {_SENSES}, got {sense!r}")
        resolved = self._resolve(coeffs)
        if not resolved:
            raise ValueError("constraint references no variable")
        rhs = float(rhs)
        if not math.isfinite(rhs):
            raise ValueError("constraint right-hand side must be finite")
        row_name = name if name is not None else f"c{len(self.rows)}"
        idx = tuple(sorted(resolved))
        vals = tuple(resolved[i] for i in idx)
        self.rows.append((idx, vals, sense, rhs, row_name))
        self._compiled = None
        return len(self.rows) - 1

    def set_objective(self, coeffs) -> None:
        self._objective = self._resolve(coeffs)
        self._compiled = None

    # -- inspection -------------------------------------------------------

    @property
    def n_variables(self) -> int:
        return len(self.variable_names)

    @property
    def n_constraints(self) -> int:
        return len(self.rows)

    def variable_index(self, name: str) -> int:
        return self._index[name]

    def objective_vector(self) -> np.ndarray:
        c = np.zeros(self.n_variables)
        for i, v in self._objective.items():
            c[i] = v
        return c

    def _structure(self):
        # name-keyed so that two models agree iff they describe the same
        # mathematical program, regardless of declaration order
        variables = tuple(
            sorted(
                (n, self.lower[i], self.upper[i], self.is_integer[i])
                for i, n in enumerate(self.variable_names)
            )
        )
        obj = tuple(
            sorted((self.variable_names[i], v) for i, v in self._objective.items() if v != 0.0)
        )
        rows = tuple(
            (name, tuple(sorted((self.variable_names[i], v) for i, v in zip(idx, vals))), s, r)
            for idx, vals, s, r, name in self.rows
        )
        return (variables, obj, rows)

    def __eq__(self, other) -> bool:
        if not isinstance(other, MilpModel):
            return NotImplemented
        return self._structure() == other._structure()

    __hash__ = None  # mutable

    # -- compiled constraint matrix (shared across solves) ----------------

    def _compile(self):
        if self._compiled is None:
            ns, m = self.n_variables, self.n_constraints
            ii, jj, vv = [], [], []
            rhs = np.zeros(m)
            slack_lo = np.zeros(m)
            slack_hi = np.zeros(m)
            for r, (idx, vals, sense, b, _) in enumerate(self.rows):
                ii.extend([r] * len(idx))
                jj.extend(idx)
                vv.extend(vals)
                ii.append(r)
                jj.append(ns + r)
                vv.append(1.0)
                rhs[r] = b
                if sense == "<=":
                    slack_lo[r], slack_hi[r] = 0.0, math.inf
                elif sense == ">=":
                    slack_lo[r], slack_hi[r] = -math.inf, 0.0
                else:
                    slack_lo[r], slack_hi[r] = 0.0, 0.0
            mat = sparse.csc_matrix(
                (np.asarray(vv, dtype=np.float64), (ii, jj)), shape=(m, ns + m)
            )
            self._compiled = (mat, mat.T.tocsr(), rhs, slack_lo, slack_hi)
        return self._compiled


# ---------------------------------------------------------------------------
# bounded-variable primal simplex
#
# Column layout: [0, ns) structural, [ns, ns+m) slack, [ns+m, ns+2m) repair.
# Repair columns are signed unit vectors, one slot per row, used to absorb
# initial bound violations; they price and pivot like ordinary columns but
# are never materialized in the sparse matrix.

_BASIC = kernels.BASIC
_AT_LO = kernels.AT_LO
_AT_UP = kernels.AT_UP
_NB_FREE = kernels.NB_FREE
_NB_FIXED = kernels.NB_FIXED


class _EtaFile:
    """Basis representation: sparse LU plus product-form pivot updates.

    Solves with B and B^T go through the LU factors and then through the
    stored pivot columns (the eta file).  Once the file fills up the owner
    refactorizes, which resets it; keeping the file short bounds both the
    per-solve cost and the error accumulated by the updates.
    """

    KMAX = 60

    def __init__(self, m: int):
        self.m = m
        self.lu = None
        self.k = 0
        self.rows = np.zeros(self.KMAX, dtype=np.int64)
        self.mat = np.zeros((self.KMAX, m))

    @property
    def full(self) -> bool:
        return self.k >= self.KMAX

    def refactor(self, basis_matrix) -> bool:
        self.k = 0
        if self.m == 0:
            self.lu = None
            return True
        try:
            self.lu = sparse.linalg.splu(basis_matrix)
        except RuntimeError:
            self.lu = None
            return False
        return True

    def update(self, alpha: np.ndarray, r: int) -> None:
        """Record the pivot that replaced basic slot r with a column whose
        current representation B^{-1} a_j is ``alpha``."""
        t = self.k
        eta = self.mat[t]
        np.divide(alpha, -alpha[r], out=eta)
        eta[r] = 1.0 / alpha[r]
        self.rows[t] = r
        self.k = t + 1

    def ftran(self, b: np.ndarray) -> np.ndarray:
        x = self.lu.solve(b) if self.lu is not None else b.copy()
        kernels.eta_ftran(self.mat, self.rows, self.k, x)
        return x

    def btran(self, y: np.ndarray) -> np.ndarray:
        v = y.astype(np.float64, copy=True)
        kernels.eta_btran(self.mat, self.rows, self.k, v)
        return self.lu.solve(v, trans="T") if self.lu is not None else v


class _Simplex:
    def __init__(self, model: MilpModel, lower=None, upper=None):
        mat, mat_t, rhs, slo, shi = model._compile()
        self.ns = model.n_variables
        self.m = model.n_constraints
        self.mat = mat
        self.mat_t = mat_t
        self.rhs = rhs
        ns, m = self.ns, self.m
        self.ncols = ns + 2 * m
        self.lb = np.empty(self.ncols)
        self.ub = np.empty(self.ncols)
        self.lb[:ns] = model.lower if lower is None else lower
        self.ub[:ns] = model.upper if upper is None else upper
        self.lb[ns : ns + m] = slo
        self.ub[ns : ns + m] = shi
        self.lb[ns + m :] = 0.0
        self.ub[ns + m :] = 0.0  # opened to +inf per row when needed
        self.art_sign = np.ones(m)
        self.c = np.zeros(self.ncols)
        self.c[:ns] = model.objective_vector()
        self.vstat = np.empty(self.ncols, dtype=np.int8)
        self.xval = np.zeros(self.ncols)  # values of nonbasic columns
        self.basis = np.arange(ns, ns + m, dtype=np.int64)
        self.xb = np.zeros(m)
        self.fac = _EtaFile(m)
        self.iterations = 0
        self.bland = False
        self._stall = 0
        self._sprint = max(1, 3 * (m + self.ncols))

    # -- plumbing ---------------------------------------------------------

    def _nb_start(self, j: int):
        lo, hi = self.lb[j], self.ub[j]
        if lo == hi:
            self.vstat[j] = _NB_FIXED
            self.xval[j] = lo
        elif math.isfinite(lo):
            self.vstat[j] = _AT_LO
            self.xval[j] = lo
        elif math.isfinite(hi):
            self.vstat[j] = _AT_UP
            self.xval[j] = hi
        else:
            self.vstat[j] = _NB_FREE
            self.xval[j] = 0.0

    def _column(self, j: int) -> np.ndarray:
        b = np.zeros(self.m)
        nsm = self.ns + self.m
        if j < nsm:
            p0, p1 = self.mat.indptr[j], self.mat.indptr[j + 1]
            b[self.mat.indices[p0:p1]] = self.mat.data[p0:p1]
        else:
            i = j - nsm
            b[i] = self.art_sign[i]
        return self.fac.ftran(b)

    def _sparse_basis(self):
        nsm = self.ns + self.m
        indptr = np.zeros(self.m + 1, dtype=np.int64)
        rows = []
        vals = []
        for k, j in enumerate(self.basis):
            if j < nsm:
                p0, p1 = self.mat.indptr[j], self.mat.indptr[j + 1]
                rows.append(self.mat.indices[p0:p1])
                vals.append(self.mat.data[p0:p1])
                indptr[k + 1] = indptr[k] + (p1 - p0)
            else:
                i = j - nsm
                rows.append(np.array([i], dtype=np.int32))
                vals.append(np.array([self.art_sign[i]]))
                indptr[k + 1] = indptr[k] + 1
        return sparse.csc_matrix(
            (np.concatenate(vals), np.concatenate(rows), indptr), shape=(self.m, self.m)
        )

    def _recompute_xb(self):
        nsm = self.ns + self.m
        xnb = self.xval[:nsm].copy()
        xnb[self.basis[self.basis < nsm]] = 0.0
        r = self.rhs - self.mat @ xnb
        # nonbasic repair columns sit at 0, so they never contribute here
        self.xb = self.fac.ftran(r)

    def _factor_current(self) -> bool:
        if self.m == 0:
            return self.fac.refactor(None)
        return self.fac.refactor(self._sparse_basis())

    def _refactor(self) -> bool:
        if not self._factor_current():
            return False
        self._recompute_xb()
        return True

    def _prices(self) -> np.ndarray:
        nsm = self.ns + self.m
        y = self.fac.btran(self.c[self.basis])
        d = np.empty(self.ncols)
        d[:nsm] = self.c[:nsm] - self.mat_t @ y
        d[nsm:] = self.c[nsm:] - self.art_sign * y
        return d

    # -- setup ------------------------------------------------------------

    def prepare(self) -> bool:
        """Start from the slack basis; open repair columns where a row's
        slack cannot absorb the initial residual.  Returns whether any
        repair column is in use (phase 1 needed)."""
        ns, m = self.ns, self.m
        nsm = ns + m
        for j in range(nsm):
            self._nb_start(j)
        self.vstat[nsm:] = _NB_FIXED
        self.vstat[self.basis] = _BASIC
        xnb = self.xval[:nsm].copy()
        xnb[ns:] = 0.0
        resid = self.rhs - self.mat @ xnb
        need = False
        ftol = 1e-9
        for i in range(m):
            v = resid[i]
            lo, hi = self.lb[ns + i], self.ub[ns + i]
            if lo - ftol <= v <= hi + ftol:
                self.xb[i] = min(max(v, lo), hi)
                continue
            bound = hi if v > hi else lo
            self.vstat[ns + i] = _NB_FIXED if lo == hi else (_AT_UP if v > hi else _AT_LO)
            self.xval[ns + i] = bound
            gap = v - bound
            self.art_sign[i] = 1.0 if gap > 0 else -1.0
            j = nsm + i
            self.ub[j] = math.inf
            self.vstat[j] = _BASIC
            self.basis[i] = j
            self.xb[i] = abs(gap)
            need = True
        self._factor_current()
        return need

    # -- core loop --------------------------------------------------------

    def iterate(self, cvec, dtol, max_iterations, deadline) -> LpStatus:
        """Run pivots under objective ``cvec`` until optimal for it."""
        self.c = cvec
        m = self.m
        ptol = 1e-10
        just_refactored = False
        while True:
            if self.iterations >= max_iterations:
                return LpStatus.ITERATION_LIMIT
            if deadline is not None and self.iterations % 64 == 0:
                if time.monotonic() > deadline:
                    return LpStatus.ITERATION_LIMIT
            if self.fac.full and not just_refactored:
                if not self._refactor():
                    return LpStatus.NUMERIC_FAILURE
                just_refactored = True
            d = self._prices()
            j = int(kernels.chuzc_primal(d, self.vstat, dtol, self.bland))
            if j < 0:
                return LpStatus.OPTIMAL
            if self.vstat[j] == _AT_LO:
                sigma = 1.0
            elif self.vstat[j] == _AT_UP:
                sigma = -1.0
            else:
                sigma = 1.0 if d[j] < 0 else -1.0
            alpha = self._column(j)
            beta = sigma * alpha
            own_range = self.ub[j] - self.lb[j]
            lob = self.lb[self.basis]
            hib = self.ub[self.basis]
            r, t, kind = kernels.ratio_primal(beta, self.xb, lob, hib, own_range, ptol)
            r = int(r)
            t = float(t)
            self.iterations += 1
            if kind == 3:
                return LpStatus.UNBOUNDED
            if kind == 2:
                self.xb -= t * beta
                self.xval[j] = self.ub[j] if self.vstat[j] == _AT_LO else self.lb[j]
                self.vstat[j] = _AT_UP if self.vstat[j] == _AT_LO else _AT_LO
                just_refactored = False
                continue
            if abs(alpha[r]) < 1e-7 and not just_refactored:
                # suspicious pivot, retry the iteration on a fresh inverse
                if not self._refactor():
                    return LpStatus.NUMERIC_FAILURE
                just_refactored = True
                self.iterations -= 1
                continue
            if abs(alpha[r]) < 1e-11:
                return LpStatus.NUMERIC_FAILURE
            leaving = int(self.basis[r])
            entering_val = self.xval[j] + sigma * t
            self.xb -= t * beta
            if lob[r] == hib[r]:
                self.vstat[leaving] = _NB_FIXED
            else:
                self.vstat[leaving] = _AT_LO if kind == 0 else _AT_UP
            self.xval[leaving] = lob[r] if kind == 0 else hib[r]
            self.basis[r] = j
            self.vstat[j] = _BASIC
            self.xb[r] = entering_val
            self.fac.update(alpha, r)
            just_refactored = False
            if t <= 1e-12:
                self._stall += 1
                if self._stall > self._sprint:
                    self.bland = True
            else:
                self._stall = 0

    # -- results ----------------------------------------------------------

    def full_solution(self) -> np.ndarray:
        x = self.xval.copy()
        x[self.basis] = self.xb
        return x

    def residual_ok(self, x: np.ndarray) -> bool:
        nsm = self.ns + self.m
        ax = self.mat @ x[:nsm]
        art = x[nsm:] * self.art_sign
        resid = np.abs(ax + art - self.rhs)
        if np.any(resid > 1e-7 * (1.0 + np.abs(self.rhs))):
            return False
        lo_ok = x >= self.lb - 1e-7 * (1.0 + np.abs(np.where(np.isfinite(self.lb), self.lb, 0.0)))
        hi_ok = x <= self.ub + 1e-7 * (1.0 + np.abs(np.where(np.isfinite(self.ub), self.ub, 0.0)))
        return bool(np.all(lo_ok) and np.all(hi_ok))


def simplex_solve(
    model: MilpModel,
    *,
    lower=None,
    upper=None,
    max_iterations: int | None = None,
    time_limit: float | None = None,
) -> LpSolution:
    """Solve the continuous relaxation of ``model`` to a certified status.

    Integrality flags are ignored.  ``lower``/``upper`` override structural
    bounds (used by the tree search).  A claimed optimum is re-verified on a
    refactorized basis; residual or pricing violations trigger up to three
    repair rounds before an honest numeric-failure status.
    """
    ns = model.n_variables
    if ns == 0:
        return LpSolution(LpStatus.OPTIMAL, 0.0, np.zeros(0), ())
    if lower is not None:
        lower = np.asarray(lower, dtype=np.float64)
        upper = np.asarray(upper, dtype=np.float64)
        if np.any(lower > upper):
            return LpSolution(LpStatus.INFEASIBLE, None, None, tuple(model.variable_names))
    sx = _Simplex(model, lower, upper)
    if max_iterations is None:
        max_iterations = 5000 + 40 * (sx.m + sx.ncols)
    deadline = None if time_limit is None else time.monotonic() + time_limit
    names = tuple(model.variable_names)

    need_phase1 = sx.prepare()
    scale = 1.0 + float(np.abs(sx.rhs).max()) if sx.m else 1.0
    if need_phase1:
        c1 = np.zeros(sx.ncols)
        c1[sx.ns + sx.m :] = 1.0
        status = sx.iterate(c1, 1e-9, max_iterations, deadline)
        if status == LpStatus.UNBOUNDED:
            status = LpStatus.NUMERIC_FAILURE
        if status != LpStatus.OPTIMAL:
            return LpSolution(status, None, None, names, iterations=sx.iterations)
        infeas = float(c1[sx.basis] @ sx.xb)
        if infeas > 1e-7 * scale:
            return LpSolution(LpStatus.INFEASIBLE, None, None, names, iterations=sx.iterations)
        # pin the repair columns shut for phase 2
        nsm = sx.ns + sx.m
        sx.ub[nsm:] = 0.0
        sx.xval[nsm:] = 0.0
        nb_art = [j for j in range(nsm, sx.ncols) if sx.vstat[j] != _BASIC]
        sx.vstat[nb_art] = _NB_FIXED

    return _phase2_certify(sx, model, names, scale, max_iterations, deadline)


def _phase2_certify(
    sx: "_Simplex",
    model: MilpModel,
    names,
    scale: float,
    max_iterations: int,
    deadline,
) -> LpSolution:
    """Optimize the true objective from the current (feasible) basis and
    certify the claim on a freshly refactorized basis."""
    c2 = np.zeros(sx.ncols)
    c2[: sx.ns] = model.objective_vector()
    dtol = 1e-8 * (1.0 + float(np.abs(c2).max()))
    for attempt in range(4):
        status = sx.iterate(c2, dtol, max_iterations, deadline)
        if status != LpStatus.OPTIMAL:
            if status == LpStatus.NUMERIC_FAILURE:
                break
            return LpSolution(status, None, None, names, iterations=sx.iterations)
        if not sx._refactor():
            status = LpStatus.NUMERIC_FAILURE
            break
        x = sx.full_solution()
        d = sx._prices()
        clean = sx.residual_ok(x) and int(
            kernels.chuzc_primal(d, sx.vstat, dtol, sx.bland)
        ) < 0
        if clean:
            # repair columns must have returned to zero
            if sx.m and float(np.abs(x[sx.ns + sx.m :]).max()) > 1e-7 * scale:
                status = LpStatus.NUMERIC_FAILURE
                break
            obj = float(c2 @ x)
            return LpSolution(
                LpStatus.OPTIMAL,
                obj,
                x[: sx.ns].copy(),
                names,
                basis=tuple(int(b) for b in sx.basis),
                iterations=sx.iterations,
            )
        sx.bland = attempt >= 1 or sx.bland
    return LpSolution(LpStatus.NUMERIC_FAILURE, None, None, names, iterations=sx.iterations)


# ---------------------------------------------------------------------------
# branch and bound


def _materialize(chain, lower, upper):
    lo = lower.copy()
    hi = upper.copy()
    node = chain
    updates = []
    while node is not None:
        var, nlo, nhi, node = node
        updates.append((var, nlo, nhi))
    for var, nlo, nhi in reversed(updates):
        lo[var] = max(lo[var], nlo)
        hi[var] = min(hi[var], nhi)
    return lo, hi


def _feasible_point(model, lower, upper, time_limit):
    """Solve a node with a zero objective, settling feasibility only."""
    saved = model._objective
    model._objective = {}
    try:
        sol = simplex_solve(model, lower=lower, upper=upper, time_limit=time_limit)
    finally:
        model._objective = saved
    return sol


def _branch_var(x, int_idx, prio, tol) -> int:
    """Pick the variable to split on at a fractional point."""
    frac = np.abs(x[int_idx] - np.round(x[int_idx]))
    dist = np.minimum(frac, 1.0 - frac)
    if prio is None:
        k = int(np.argmax(dist))
    else:
        cand = np.flatnonzero(dist > tol)
        top = cand[prio[cand] >= prio[cand].max() - 1e-12]
        k = int(top[int(np.argmax(dist[top]))])
    return int(int_idx[k])


def bnb_solve(model: MilpModel, params: BnbParams | None = None) -> LpSolution:
    """Best-first branch and bound over the model's integer variables.

    Nodes are explored in lower-bound order; the branching rule in
    ``params`` picks the split variable (ties to the lowest index).  Every
    node relaxation is solved from scratch by ``simplex_solve``.  Hitting
    the node or time limit returns the best incumbent with the tightest
    open bound; otherwise the result is a proven optimum or a proven
    infeasibility.
    """
    params = params or BnbParams()
    int_idx = np.flatnonzero(np.asarray(model.is_integer, dtype=bool))
    for i in int_idx:
        if not (math.isfinite(model.lower[i]) and math.isfinite(model.upper[i])):
            raise ValueError("integer variables must have finite bounds")
    names = tuple(model.variable_names)
    prio = None
    if params.branching == "priority" and int_idx.size:
        weights = model.metadata.get("branch_priority", {})
        prio = np.array([float(weights.get(names[i], 0.0)) for i in int_idx])
    base_lo = np.asarray(model.lower, dtype=np.float64)
    base_hi = np.asarray(model.upper, dtype=np.float64)
    deadline = None if params.time_limit is None else time.monotonic() + params.time_limit

    import heapq

    inc_x = None
    inc_obj = math.inf
    heap: list = []
    seq = 0
    nodes = 0
    total_iters = 0
    heap.append((-math.inf, seq, None))
    out_of_budget = False
    failed = False

    while heap:
        bound, _, chain = heapq.heappop(heap)
        if bound >= inc_obj - 1e-9 * (1.0 + abs(inc_obj)):
            continue
        if nodes >= params.node_limit or (
            deadline is not None and time.monotonic() > deadline
        ):
            heapq.heappush(heap, (bound, -1, chain))
            out_of_budget = True
            break
        nodes += 1
        lo, hi = _materialize(chain, base_lo, base_hi)
        time_left = None if deadline is None else max(deadline - time.monotonic(), 0.01)
        sol = simplex_solve(model, lower=lo, upper=hi, time_limit=time_left)
        total_iters += sol.iterations
        if sol.status == LpStatus.INFEASIBLE:
            continue
        if sol.status == LpStatus.UNBOUNDED:
            # the relaxation is unbounded, but only an integer point makes
            # the integer problem unbounded too (integer bounds are finite,
            # so the improving ray never moves an integer variable)
            fsol = _feasible_point(model, lo, hi, time_left)
            total_iters += fsol.iterations
            if fsol.status == LpStatus.INFEASIBLE:
                continue
            if fsol.status != LpStatus.OPTIMAL:
                failed = True
                break
            frac = (
                np.abs(fsol.x[int_idx] - np.round(fsol.x[int_idx]))
                if int_idx.size
                else np.empty(0)
            )
            if not int_idx.size or float(frac.max(initial=0.0)) <= params.integrality_tol:
                return LpSolution(
                    LpStatus.UNBOUNDED, None, None, names, iterations=total_iters, nodes=nodes
                )
            j = _branch_var(fsol.x, int_idx, prio, params.integrality_tol)
            v = float(fsol.x[j])
            seq += 1
            heapq.heappush(heap, (-math.inf, seq, (j, lo[j], math.floor(v), chain)))
            seq += 1
            heapq.heappush(heap, (-math.inf, seq, (j, math.ceil(v), hi[j], chain)))
            continue
        if sol.status == LpStatus.ITERATION_LIMIT:
            out_of_budget = True
            heapq.heappush(heap, (bound if nodes > 1 else -math.inf, -1, chain))
            break
        if sol.status != LpStatus.OPTIMAL:
            failed = True
            break
        if sol.objective >= inc_obj - 1e-9 * (1.0 + abs(inc_obj)):
            continue
        frac = np.abs(sol.x[int_idx] - np.round(sol.x[int_idx])) if int_idx.size else np.empty(0)
        if not int_idx.size or float(frac.max(initial=0.0)) <= params.integrality_tol:
            x = sol.x.copy()
            if int_idx.size:
                x[int_idx] = np.round(x[int_idx])
            obj = float(model.objective_vector() @ x)
            if obj < inc_obj:
                inc_obj = obj
                inc_x = x
            continue
        j = _branch_var(sol.x, int_idx, prio, params.integrality_tol)
        v = float(sol.x[j])
        lo_child = (j, lo[j], math.floor(v), chain)
        hi_child = (j, math.ceil(v), hi[j], chain)
        seq += 1
        heapq.heappush(heap, (sol.objective, seq, lo_child))
        seq += 1
        heapq.heappush(heap, (sol.objective, seq, hi_child))

    if failed:
        return LpSolution(
            LpStatus.NUMERIC_FAILURE, None, None, names, iterations=total_iters, nodes=nodes
        )
    open_bound = min((b for b, _, _ in heap), default=inc_obj)
    if out_of_budget:
        return LpSolution(
            LpStatus.ITERATION_LIMIT,
            None if inc_x is None else inc_obj,
            inc_x,
            names,
            iterations=total_iters,
            bound=float(open_bound) if math.isfinite(open_bound) else None,
            nodes=nodes,
        )
    if inc_x is None:
        return LpSolution(
            LpStatus.INFEASIBLE, None, None, names, iterations=total_iters, nodes=nodes
        )
    return LpSolution(
        LpStatus.OPTIMAL,
        inc_obj,
        inc_x,
        names,
        iterations=total_iters,
        bound=inc_obj,
        nodes=nodes,
    )


# ---------------------------------------------------------------------------
# LP-file text format


def _fmt(v: float) -> str:
    return "%.17g" % v


def _terms(pairs, wrap=72):
    lines = []
    cur = ""
    for first, (name, coef) in enumerate(pairs):
        if coef < 0:
            tok = f"- {_fmt(-coef)} {name}"
        else:
            tok = f"{'' if first == 0 else '+ '}{_fmt(coef)} {name}"
        if cur and len(cur) + len(tok) + 1 > wrap:
            lines.append(cur)
            cur = tok
        else:
            cur = f"{cur} {tok}".strip()
    if cur:
        lines.append(cur)
    return lines or ["0"]


def write_lp(model: MilpModel) -> str:
    """Render the model in LP text format; read_lp inverts this exactly."""
    out = [f"\\ {model.name}", "Minimize"]
    obj_pairs = [
        (model.variable_names[i], v) for i, v in sorted(model._objective.items()) if v != 0.0
    ]
    if not obj_pairs:
        obj_pairs = [(model.variable_names[0], 0.0)]
    first, *rest = _terms(obj_pairs)
    out.append(f" obj: {first}")
    out.extend(f"      {line}" for line in rest)
    out.append("Subject To")
    for idx, vals, sense, rhs, name in model.rows:
        pairs = [(model.variable_names[i], v) for i, v in zip(idx, vals)]
        first, *rest = _terms(pairs)
        out.append(f" {name}: {first}")
        out.extend(f"      {line}" for line in rest)
        out.append(f"      {sense} {_fmt(rhs)}")
    out.append("Bounds")
    binaries = []
    generals = []
    for i, name in enumerate(model.variable_names):
        lo, hi = model.lower[i], model.upper[i]
        if model.is_integer[i]:
            (binaries if (lo, hi) == (0.0, 1.0) else generals).append(name)
        if lo == hi:
            out.append(f" {name} = {_fmt(lo)}")
        elif not math.isfinite(lo) and not math.isfinite(hi):
            out.append(f" {name} free")
        elif not math.isfinite(lo):
            out.append(f" -infinity <= {name} <= {_fmt(hi)}")
        elif not math.isfinite(hi):
            out.append(f" {name} >= {_fmt(lo)}")
        else:
            out.append(f" {_fmt(lo)} <= {name} <= {_fmt(hi)}")
    if binaries:
        out.append("Binaries")
        out.append(" " + " ".join(binaries))
    if generals:
        out.append("Generals")
        out.append(" " + " ".join(generals))
    out.append("End")
    return "\n".join(out) + "\n"


_TOKEN_RE = re.compile(
    r"(?P<label>[A-Za-z_][A-Za-z0-9_]*\s*:)"
    r"|(?P<num>[+-]?(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)"
    r"|(?P<word>[A-Za-z_][A-Za-z0-9_]*)"
    r"|(?P<op><=|>=|=<|=>|==|<|>|=|\+|-)"
)

# section keywords are only recognized at the start of a line, as in the
# LP format; elsewhere the same spellings are ordinary variable names
_SECTION_STARTS = {
    "minimize": "objective",
    "min": "objective",
    "minimise": "objective",
    "maximize": "unsupported",
    "max": "unsupported",
    "subject": "rows",
    "such": "rows",
    "st": "rows",
    "bounds": "bounds",
    "bound": "bounds",
    "binary": "binaries",
    "binaries": "binaries",
    "bin": "binaries",
    "general": "generals",
    "generals": "generals",
    "gen": "generals",
    "integer": "generals",
    "integers": "generals",
    "end": "end",
}

_SENSE_MAP = {"<=": "<=", "=<": "<=", "<": "<=", ">=": ">=", "=>": ">=", ">": ">=", "=": "=", "==": "="}

_INF_WORDS = ("infinity", "inf")


def _tokenize_line(line: str):
    tokens = []
    pos = 0
    while pos < len(line):
        if line[pos].isspace():
            pos += 1
            continue
        mo = _TOKEN_RE.match(line, pos)
        if not mo:
            raise ParseError(f"unreadable LP text at {line[pos:pos+20]!r}")
        tokens.append((mo.lastgroup, mo.group().rstrip()))
        pos = mo.end()
    return tokens


def _split_sections(text: str):
    """Group tokens by section.  Objective and constraint expressions may
    wrap across lines, so those sections are flat streams; bound lines are
    kept separate because each line is one declaration."""
    flat = {"objective": [], "rows": [], "binaries": [], "generals": []}
    bound_lines: list[list] = []
    section = None
    for raw in text.splitlines():
        line = raw.split("\\", 1)[0]
        toks = _tokenize_line(line)
        if not toks:
            continue
        if toks[0][0] == "word" and toks[0][1].lower() in _SECTION_STARTS:
            sec = _SECTION_STARTS[toks[0][1].lower()]
            if sec == "unsupported":
                raise ParseError("only minimization models are supported")
            rest = toks[1:]
            if (
                toks[0][1].lower() in ("subject", "such")
                and rest
                and rest[0][0] == "word"
                and rest[0][1].lower() in ("to", "that")
            ):
                rest = rest[1:]
            section = sec
            if section == "end":
                break
            toks = rest
            if not toks:
                continue
        if section is None:
            raise ParseError(f"content before any section: {line.strip()!r}")
        if section == "bounds":
            bound_lines.append(toks)
        else:
            flat[section].extend(toks)
    return flat, bound_lines


def _parse_expression(tokens, k):
    """Parse a run of [sign] [coefficient] name terms; stops at the first
    token that cannot extend the expression."""
    terms: list[tuple[str, float]] = []
    sign = 1.0
    coef = None
    while k < len(tokens):
        kind, val = tokens[k]
        if kind == "op" and val in ("+", "-"):
            if coef is not None:
                raise ParseError("dangling coefficient in expression")
            sign *= -1.0 if val == "-" else 1.0
            k += 1
        elif kind == "num":
            if coef is not None:
                raise ParseError("two numbers in a row in expression")
            coef = float(val)
            k += 1
        elif kind == "word" and val.lower() not in _INF_WORDS:
            terms.append((val, sign * (1.0 if coef is None else coef)))
            sign, coef = 1.0, None
            k += 1
        else:
            break
    if coef is not None or sign != 1.0:
        raise ParseError("expression ends in a dangling number or sign")
    return terms, k


def _parse_scalar(tokens, k):
    """Parse an optionally signed number or infinity; None if absent."""
    sign = 1.0
    k0 = k
    while k < len(tokens) and tokens[k][0] == "op" and tokens[k][1] in ("+", "-"):
        sign *= -1.0 if tokens[k][1] == "-" else 1.0
        k += 1
    if k < len(tokens):
        kind, val = tokens[k]
        if kind == "num":
            return sign * float(val), k + 1
        if kind == "word" and val.lower() in _INF_WORDS:
            return sign * math.inf, k + 1
    return None, k0


def _parse_bound_line(toks, bounds, note):
    def entry(name):
        note(name)
        return bounds.setdefault(name, [0.0, math.inf])

    # name-first forms:  "x free", "x >= lo", "x <= hi", "x = v"
    if toks[0][0] == "word" and toks[0][1].lower() not in _INF_WORDS:
        name = toks[0][1]
        if len(toks) == 2 and toks[1] == ("word", "free"):
            entry(name)[:] = [-math.inf, math.inf]
            return
        if len(toks) >= 2 and toks[1][0] == "op" and toks[1][1] in _SENSE_MAP:
            val, k = _parse_scalar(toks, 2)
            if val is not None and k == len(toks):
                sense = _SENSE_MAP[toks[1][1]]
                e = entry(name)
                if sense == "<=":
                    e[1] = val
                elif sense == ">=":
                    e[0] = val
                else:
                    e[:] = [val, val]
                return
        raise ParseError(f"malformed bound line: {toks!r}")
    # scalar-first forms:  "lo <= x", "lo <= x <= hi"
    lo, k = _parse_scalar(toks, 0)
    if lo is None or k >= len(toks) or toks[k] != ("op", "<=") and toks[k] != ("op", "=<"):
        raise ParseError(f"malformed bound line: {toks!r}")
    k += 1
    if k >= len(toks) or toks[k][0] != "word":
        raise ParseError(f"malformed bound line: {toks!r}")
    name = toks[k][1]
    k += 1
    e = entry(name)
    if k == len(toks):
        e[0] = lo
        return
    if toks[k][0] == "op" and _SENSE_MAP.get(toks[k][1]) == "<=":
        hi, k2 = _parse_scalar(toks, k + 1)
        if hi is not None and k2 == len(toks):
            e[:] = [lo, hi]
            return
    raise ParseError(f"malformed bound line: {toks!r}")


def read_lp(text: str) -> MilpModel:
    """Parse LP text written by :func:`write_lp` (plus common variants)."""
    flat, bound_lines = _split_sections(text)
    bounds: dict[str, list[float]] = {}
    integers: dict[str, str] = {}
    order: list[str] = []
    seen: set[str] = set()

    def note(name):
        if name not in seen:
            seen.add(name)
            order.append(name)

    obj_tokens = flat["objective"]
    k = 1 if obj_tokens and obj_tokens[0][0] == "label" else 0
    obj_terms, k = _parse_expression(obj_tokens, k)
    if k != len(obj_tokens):
        raise ParseError(f"trailing tokens in objective: {obj_tokens[k:]!r}")
    for name, _ in obj_terms:
        note(name)

    rows: list[tuple[str | None, list, str, float]] = []
    toks = flat["rows"]
    k = 0
    while k < len(toks):
        name = None
        if toks[k][0] == "label":
            name = toks[k][1][:-1].rstrip()
            k += 1
        terms, k = _parse_expression(toks, k)
        if not terms:
            raise ParseError("constraint without a left-hand side")
        if k >= len(toks) or toks[k][0] != "op" or toks[k][1] not in _SENSE_MAP:
            raise ParseError("constraint lacks a sense")
        sense = _SENSE_MAP[toks[k][1]]
        rhs, k = _parse_scalar(toks, k + 1)
        if rhs is None or not math.isfinite(rhs):
            raise ParseError("constraint right-hand side must be a finite number")
        for n, _ in terms:
            note(n)
        rows.append((name, terms, sense, rhs))

    for line in bound_lines:
        _parse_bound_line(line, bounds, note)

    for sec in ("binaries", "generals"):
        for kind, val in flat[sec]:
            if kind != "word":
                raise ParseError(f"unexpected token in {sec}: {val!r}")
            note(val)
            integers[val] = sec

    model = MilpModel()
    for name in order:
        lo, hi = bounds.get(name, [0.0, math.inf])
        tag = integers.get(name)
        if tag == "binaries":
            if name not in bounds:
                lo, hi = 0.0, 1.0
            lo, hi = max(lo, 0.0), min(hi, 1.0)
        model.add_variable(name, lo, hi, integer=tag is not None)
    for name, coeffs, sense, rhs in rows:
        model.add_constraint(coeffs, sense, rhs, name=name)
    agg: dict[str, float] = {}
    for name, c in obj_terms:
        agg[name] = agg.get(name, 0.0) + c
    model.set_objective(agg)
    return model


def read_solution(text: str, model: MilpModel | None = None) -> dict[str, float]:
    """Parse whitespace-separated name/value lines into a mapping.

    Lines starting with ``#`` or ``\\`` are skipped.  When a model is given,
    names not declared in it raise a parse error.
    """
    values: dict[str, float] = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith("\\"):
            continue
        parts = line.split()
        if len(parts) < 2:
            raise ParseError(f"line {lineno}: expected 'name value', got {raw!r}")
        name = parts[0]
        try:
            val = float(parts[1])
        except ValueError as exc:
            raise ParseError(f"line {lineno}: bad value {parts[1]!r}") from exc
        if model is not None and name not in model._index:
            raise ParseError(f"line {lineno}: unknown variable {name!r}")
        values[name] = val
    return values
