"""Exhaustive reference evaluators and hardness reductions.

Everything here trades speed for transparency: plain enumeration over query
sets, attack patterns, and selections, guarded by explicit capacity limits.
The fast solvers are tested against these routines, never the other way
around.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from math import inf

import numpy as np

from .core import (
    CuInstance,
    ExplicitFamily,
    KnapsackFamily,
    OuInstance,
    QueryFamily,
    SelectionFamily,
)
from .errors import CapacityError


@dataclass(frozen=True)
class OracleLimits:
    """Safety caps for exhaustive enumeration."""

    max_n: int = 12
    max_subsets: int = 4_000_000


def _check_n(n: int, limits: OracleLimits) -> None:
    if n > limits.max_n:
        raise CapacityError(f"instance has n={n} items, oracle cap is {limits.max_n}")


def _members_of(I, n: int) -> list[int]:
    members = sorted({int(i) for i in I})
    if members and (members[0] < 0 or members[-1] >= n):
        raise ValueError("query set index out of range")
    return members


# ---------------------------------------------------------------------------
# one-item selection with cost deviations


def psi_bruteforce(inst: OuInstance, I, limits: OracleLimits | None = None) -> float:
    """Worst-case post-query cost of query set I, enumerating attack patterns.

    For each revealed pattern the best response is immediate: a revealed
    deviating item costs nominal + deviation, a revealed clean item costs
    nominal, and an unobserved item costs nominal + deviation whenever the
    adversary retains budget.
    """
    lim = limits or OracleLimits()
    _check_n(inst.n, lim)
    members = _members_of(I, inst.n)
    cb = inst.c_bar.tolist()
    ch = inst.c_hat.tolist()
    outside = [i for i in range(inst.n) if i not in set(members)]
    out_low = min((cb[i] for i in outside), default=inf)
    out_high = min((cb[i] + ch[i] for i in outside), default=inf)
    gmax = min(len(members), inst.gamma)
    best = -inf
    count = 0
    for s in range(gmax + 1):
        for combo in combinations(members, s):
            count += 1
            if count > lim.max_subsets:
                raise CapacityError("attack pattern enumeration exceeded max_subsets")
            attacked = set(combo)
            v = out_high if inst.gamma - s >= 1 else out_low
            for j in members:
                cj = cb[j] + ch[j] if j in attacked else cb[j]
                if cj < v:
                    v = cj
            if v > best:
                best = v
    return best


def psi_bruteforce_full(inst: OuInstance, I, limits: OracleLimits | None = None) -> float:
    """Doubly exhaustive variant: enumerates residual deviation sets too.

    Slower than `psi_bruteforce` but assumes nothing about best responses;
    used to cross-check the oracle itself on tiny instances.
    """
    lim = limits or OracleLimits()
    _check_n(inst.n, lim)
    members = _members_of(I, inst.n)
    cb = inst.c_bar.tolist()
    ch = inst.c_hat.tolist()
    outside = [i for i in range(inst.n) if i not in set(members)]
    gmax = min(len(members), inst.gamma)
    best = -inf
    count = 0
    for s in range(gmax + 1):
        for combo in combinations(members, s):
            attacked = set(combo)
            residual = inst.gamma - s
            v_pattern = inf
            for j in range(inst.n):
                worst_j = -inf
                for t in range(min(residual, len(outside)) + 1):
                    for extra in combinations(outside, t):
                        count += 1
                        if count > lim.max_subsets:
                            raise CapacityError(
                                "deviation enumeration exceeded max_subsets"
                            )
                        dev = attacked | set(extra)
                        cj = cb[j] + (ch[j] if j in dev else 0.0)
                        if cj > worst_j:
                            worst_j = cj
                if worst_j < v_pattern:
                    v_pattern = worst_j
            if v_pattern > best:
                best = v_pattern
    return best


def _family_candidates(family: QueryFamily, n: int, lim: OracleLimits):
    """Admissible query sets in smallest-cardinality-then-lexicographic order."""
    count = 0
    if isinstance(family, SelectionFamily):
        for s in range(min(family.q, n) + 1):
            for combo in combinations(range(n), s):
                count += 1
                if count > lim.max_subsets:
                    raise CapacityError("family enumeration exceeded max_subsets")
                yield combo
    elif isinstance(family, KnapsackFamily):
        if family.a.shape[0] != n:
            raise ValueError("weight vector length must equal n")
        a = family.a.tolist()
        for s in range(n + 1):
            for combo in combinations(range(n), s):
                count += 1
                if count > lim.max_subsets:
                    raise CapacityError("family enumeration exceeded max_subsets")
                if sum(a[i] for i in combo) <= family.capacity:
                    yield combo
    elif isinstance(family, ExplicitFamily):
        listed = []
        for fs in family.sets:
            if any(i >= n for i in fs):
                raise ValueError("explicit set index out of range")
            listed.append(tuple(sorted(fs)))
        for combo in sorted(set(listed), key=lambda t: (len(t), t)):
            yield combo
    else:
        raise TypeError(f"not a query family: {family!r}")


def ou_bruteforce(
    inst: OuInstance, family: QueryFamily, limits: OracleLimits | None = None
) -> tuple[frozenset[int], float]:
    """Optimal query set and value by full enumeration of the family.

    Ties go to the smallest cardinality, then lexicographic order.
    """
    lim = limits or OracleLimits()
    _check_n(inst.n, lim)
    best_set: tuple[int, ...] | None = None
    best_val = inf
    for combo in _family_candidates(family, inst.n, lim):
        v = psi_bruteforce(inst, combo, lim)
        if v < best_val:
            best_val = v
            best_set = combo
    if best_set is None:
        raise ValueError("family admits no query set")
    return frozenset(best_set), best_val


# ---------------------------------------------------------------------------
# p-item selection under failures


def _p_subset_table(n: int, p: int, costs: list[float], lim: OracleLimits):
    table = []
    count = 0
    for combo in combinations(range(n), p):
        count += 1
        if count > lim.max_subsets:
            raise CapacityError("selection enumeration exceeded max_subsets")
        mask = 0
        cost = 0.0
        for i in combo:
            mask |= 1 << i
            cost += costs[i]
        table.append((mask, cost))
    return table


def _phi_over_patterns(psubs, members, not_imask, gamma, b, lim):
    gmax = min(len(members), gamma)
    best = -inf
    count = 0
    for s in range(gmax + 1):
        residual = gamma - s
        for combo in combinations(members, s):
            count += 1
            if count > lim.max_subsets:
                raise CapacityError("attack pattern enumeration exceeded max_subsets")
            gmask = 0
            for i in combo:
                gmask |= 1 << i
            v = inf
            for xmask, cost in psubs:
                if cost >= v:
                    continue
                fails = (xmask & gmask).bit_count()
                outside = (xmask & not_imask).bit_count()
                fails += residual if residual < outside else outside
                if fails <= b:
                    v = cost
            if v > best:
                best = v
                if best == inf:
                    return inf
    return best


def phi_bruteforce(inst: CuInstance, I, limits: OracleLimits | None = None) -> float:
    """Worst-case selection cost after querying I, by triple enumeration.

    Enumerates attack patterns inside I and, per pattern, every exact-p
    selection; a selection survives when revealed failures plus the worst
    residual spend on its unobserved items stay within the allowance b.
    Returns +inf when some pattern leaves no feasible selection.
    """
    lim = limits or OracleLimits()
    _check_n(inst.n, lim)
    members = _members_of(I, inst.n)
    imask = 0
    for i in members:
        imask |= 1 << i
    not_imask = ((1 << inst.n) - 1) ^ imask
    psubs = _p_subset_table(inst.n, inst.p, inst.c.tolist(), lim)
    return _phi_over_patterns(psubs, members, not_imask, inst.gamma, inst.b, lim)


def phi_split_bruteforce(
    inst: CuInstance, I, gamma_i: int, limits: OracleLimits | None = None
) -> float:
    """Worst case over attack patterns of exactly ``gamma_i`` queried items.

    Unlike `phi_bruteforce` the pattern size is pinned, so this is the
    ground truth for one budget split: the adversary reveals any gamma_i
    members of I and keeps gamma - gamma_i for the unobserved items.
    """
    lim = limits or OracleLimits()
    _check_n(inst.n, lim)
    members = _members_of(I, inst.n)
    if not 0 <= gamma_i <= min(len(members), inst.gamma):
        raise ValueError("pattern size out of the admissible split range")
    imask = 0
    for i in members:
        imask |= 1 << i
    not_imask = ((1 << inst.n) - 1) ^ imask
    psubs = _p_subset_table(inst.n, inst.p, inst.c.tolist(), lim)
    residual = inst.gamma - gamma_i
    best = -inf
    count = 0
    for combo in combinations(members, gamma_i):
        count += 1
        if count > lim.max_subsets:
            raise CapacityError("attack pattern enumeration exceeded max_subsets")
        gmask = 0
        for i in combo:
            gmask |= 1 << i
        v = inf
        for xmask, cost in psubs:
            if cost >= v:
                continue
            fails = (xmask & gmask).bit_count()
            outside = (xmask & not_imask).bit_count()
            fails += residual if residual < outside else outside
            if fails <= inst.b:
                v = cost
        if v > best:
            best = v
            if best == inf:
                return inf
    return best


def cu_bruteforce(
    inst: CuInstance, family: QueryFamily, limits: OracleLimits | None = None
) -> tuple[frozenset[int] | None, float]:
    """Optimal query set and value by full enumeration; (None, +inf) when no
    query set yields a finite worst case.  Ties as in `ou_bruteforce`."""
    lim = limits or OracleLimits()
    _check_n(inst.n, lim)
    psubs = _p_subset_table(inst.n, inst.p, inst.c.tolist(), lim)
    full = (1 << inst.n) - 1
    best_set: tuple[int, ...] | None = None
    best_val = inf
    for combo in _family_candidates(family, inst.n, lim):
        imask = 0
        for i in combo:
            imask |= 1 << i
        v = _phi_over_patterns(psubs, list(combo), full ^ imask, inst.gamma, inst.b, lim)
        if v < best_val:
            best_val = v
            best_set = combo
    if best_val == inf:
        return None, inf
    assert best_set is not None
    return frozenset(best_set), best_val


def cu_family_feasible_bruteforce(
    inst: CuInstance, family: QueryFamily, limits: OracleLimits | None = None
) -> bool:
    """Whether any admissible query set has a finite worst case.

    Feasibility of a pattern depends only on the counts of item categories
    (clean observed, failed observed, unobserved), so patterns collapse to
    their sizes; the check per (I, pattern size) is elementary counting.
    """
    lim = limits or OracleLimits()
    _check_n(inst.n, lim)
    n, p, b, gamma = inst.n, inst.p, inst.b, inst.gamma
    for combo in _family_candidates(family, n, lim):
        msize = len(combo)
        unobserved = n - msize
        ok = True
        for s in range(min(msize, gamma) + 1):
            residual = gamma - s
            clean = msize - s
            feasible = False
            for j in range(min(s, b, p) + 1):
                k = max(0, p - j - clean)
                if k <= unobserved and j + min(residual, k) <= b:
                    feasible = True
                    break
            if not feasible:
                ok = False
                break
        if ok:
            return True
    return False


# ---------------------------------------------------------------------------
# hardness reductions


@dataclass(frozen=True)
class Graph:
    """Simple undirected graph on vertices 0..num_vertices-1."""

    num_vertices: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self):
        m = int(self.num_vertices)
        if m < 1:
            raise ValueError("graph needs at least one vertex")
        object.__setattr__(self, "num_vertices", m)
        norm = []
        seen = set()
        for u, v in self.edges:
            u, v = int(u), int(v)
            if u == v:
                raise ValueError("self-loops are not allowed")
            if not (0 <= u < m and 0 <= v < m):
                raise ValueError("edge endpoint out of range")
            e = (min(u, v), max(u, v))
            if e in seen:
                raise ValueError(f"duplicate edge {e}")
            seen.add(e)
            norm.append(e)
        object.__setattr__(self, "edges", tuple(norm))


def is_independent(graph: Graph, vertices) -> bool:
    s = {int(v) for v in vertices}
    return not any(u in s and v in s for u, v in graph.edges)


def has_independent_set(graph: Graph, size: int) -> bool:
    if size <= 0:
        return True
    if size > graph.num_vertices:
        return False
    return any(
        is_independent(graph, combo)
        for combo in combinations(range(graph.num_vertices), size)
    )


def independent_sets(graph: Graph, limits: OracleLimits | None = None) -> list[frozenset[int]]:
    """Every independent set of the graph, the empty set included."""
    lim = limits or OracleLimits()
    m = graph.num_vertices
    if 2**m > lim.max_subsets:
        raise CapacityError("too many vertex subsets to enumerate")
    out = []
    for size in range(m + 1):
        for combo in combinations(range(m), size):
            if is_independent(graph, combo):
                out.append(frozenset(combo))
    return out


def reduce_independent_set(graph: Graph, size: int) -> tuple[OuInstance, ExplicitFamily]:
    """Encode size-K independent set as a one-item query problem.

    Items are vertices with zero nominal cost and unit deviation, the
    deviation budget is K, and the family lists every independent set.  For
    K < num_vertices the optimum is 0 exactly when the graph has an
    independent set of size K, and 1 otherwise.
    """
    if not 0 <= size <= graph.num_vertices:
        raise ValueError("size must be between 0 and the vertex count")
    m = graph.num_vertices
    inst = OuInstance(c_bar=np.zeros(m), c_hat=np.ones(m), gamma=size)
    family = ExplicitFamily(sets=tuple(independent_sets(graph)))
    return inst, family


def has_equal_partition(weights) -> bool:
    """Whether some half-cardinality subset hits half the total weight."""
    k = [int(w) for w in weights]
    total = sum(k)
    if total % 2 == 1 or len(k) % 2 == 1:
        return False
    half = total // 2
    return any(
        sum(combo) == half for combo in combinations(k, len(k) // 2)
    )


def reduce_partition(weights) -> tuple[CuInstance, KnapsackFamily]:
    """Encode equal-cardinality partition as a p-selection query problem.

    Weights k_1..k_m (positive integers, m even, total 2K) become m items of
    cost -k_i and query weight k_i, plus a blocker item of cost -(K+1) and
    weight K+1; the query capacity is K, p = m/2, b = 0, gamma = 1.  The
    optimum equals -K exactly when a half-cardinality subset sums to K.
    """
    k = [int(w) for w in weights]
    if len(k) < 2 or len(k) % 2 == 1:
        raise ValueError("need an even number of at least two weights")
    if any(w < 1 for w in k):
        raise ValueError("weights must be positive integers")
    total = sum(k)
    if total % 2 == 1:
        raise ValueError("total weight must be even")
    half = total // 2
    costs = [-float(w) for w in k] + [-(half + 1.0)]
    weights_ext = [float(w) for w in k] + [half + 1.0]
    inst = CuInstance(c=costs, p=len(k) // 2, b=0, gamma=1)
    family = KnapsackFamily(a=weights_ext, capacity=float(half))
    return inst, family
