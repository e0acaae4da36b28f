"""Closed-form evaluation and fast solvers for the one-item variant.

The decision maker first queries a set I of items, observing which of them
deviate, then picks a single item; unqueried items may still deviate
afterwards.  With at most ``gamma`` deviations in total, the worst-case cost
of a query set admits closed forms driven by three regimes of |I| against
``gamma``.  This module evaluates those forms and solves the query-selection
problem over cardinality-bounded, weight-bounded, and explicitly listed
families.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

from . import kernels
from .core import OuInstance, SplitBudget, canonicalize, kth_smallest


class Regime(Enum):
    """Which closed-form case produced a solution's value."""

    BELOW_BUDGET = "below_budget"
    AT_BUDGET = "at_budget"
    ABOVE_BUDGET = "above_budget"


@dataclass(frozen=True)
class OuSolution:
    query_set: frozenset[int]
    value: float
    regime: Regime


def _regime_of(size: int, gamma: int) -> Regime:
    if size < gamma:
        return Regime.BELOW_BUDGET
    if size == gamma:
        return Regime.AT_BUDGET
    return Regime.ABOVE_BUDGET


def _member_costs_sorted(inst: OuInstance, members: Iterable[int]) -> np.ndarray:
    """Nominal costs of the member items, ascending, ties by lower index."""
    idx = np.fromiter((int(i) for i in members), dtype=np.int64)
    if idx.size == 0:
        return np.empty(0, dtype=np.float64)
    if np.unique(idx).size != idx.size:
        raise ValueError("query set contains duplicate items")
    if idx.min() < 0 or idx.max() >= inst.n:
        raise ValueError("query set index out of range")
    idx = np.sort(idx)
    costs = inst.c_bar[idx]
    return costs[np.argsort(costs, kind="stable")]


def _complement_min(inst: OuInstance, members: Iterable[int]) -> float:
    mask = np.ones(inst.n, dtype=bool)
    idx = np.fromiter((int(i) for i in members), dtype=np.int64)
    if idx.size:
        mask[idx] = False
    return float(inst.c_bar[mask].min()) if mask.any() else np.inf


def psi_split(inst: OuInstance, members: Iterable[int], split: SplitBudget) -> float:
    """Worst-case cost when exactly ``split.gamma_i`` queried items deviate.

    The adversary reveals deviations on the ``gamma_i`` cheapest queried
    items; afterwards the decision maker takes the best of (a) any item at
    nominal plus deviation, (b) an unqueried item at nominal (only safe when
    the whole budget was spent inside the query set), or (c) a queried item
    that did not deviate, at nominal.  Empty candidate groups count as +inf.
    """
    idx = sorted(int(i) for i in members)
    if split.total != inst.gamma:
        raise ValueError("split does not sum to the instance budget")
    if not 0 <= split.gamma_i <= min(len(idx), inst.gamma):
        raise ValueError("gamma_i outside the admissible split range")
    costs = _member_costs_sorted(inst, idx)
    z_bar = float((inst.c_bar + inst.c_hat).min())
    unattacked = costs[split.gamma_i :]
    unatt_min = float(unattacked.min()) if unattacked.size else np.inf
    if split.gamma_i == inst.gamma:
        return float(min(z_bar, _complement_min(inst, idx), unatt_min))
    return float(min(z_bar, unatt_min))


def psi_closed_form(inst: OuInstance, members: Iterable[int]) -> float:
    """Worst-case cost of a query set, by the size-vs-budget case split.

    Equals the maximum of :func:`psi_split` over all admissible splits, and
    the exhaustive-enumeration value.  A budget larger than n acts as n.
    """
    idx = sorted(int(i) for i in members)
    m = len(idx)
    gamma = min(inst.gamma, inst.n)
    z_bar = float((inst.c_bar + inst.c_hat).min())
    if m < gamma:
        return z_bar
    costs = _member_costs_sorted(inst, idx)
    comp_min = _complement_min(inst, idx)
    if m == gamma:
        last = float(costs[m - 1]) if m else -np.inf
        return float(min(z_bar, max(comp_min, last)))
    at_gamma = float(costs[gamma - 1]) if gamma else -np.inf
    at_next = float(costs[gamma])
    return float(min(z_bar, max(min(at_next, comp_min), at_gamma)))


def solve_selection(inst: OuInstance, q: int) -> OuSolution:
    """Best query set of size at most ``q``, in O(n).

    When the budget exceeds ``q`` no query set helps and the empty set is
    optimal; otherwise the ``q`` cheapest items are queried and the value
    falls out of rank statistics, so no sort is needed.
    """
    if not 0 <= q <= inst.n:
        raise ValueError(f"q must be in 0..{inst.n}")
    z_bar = float((inst.c_bar + inst.c_hat).min())
    if inst.gamma > q:
        return OuSolution(frozenset(), z_bar, Regime.BELOW_BUDGET)
    gamma = inst.gamma
    pick = kernels.smallest_mask(inst.c_bar, q)
    if gamma > 0:
        attacked = kernels.smallest_mask(inst.c_bar, gamma)
        attacked_min = float((inst.c_bar + inst.c_hat)[attacked].min())
    else:
        attacked_min = np.inf
    nxt = kth_smallest(inst.c_bar, gamma + 1) if gamma + 1 <= inst.n else np.inf
    value = float(min(attacked_min, nxt))
    query = frozenset(int(i) for i in np.flatnonzero(pick))
    return OuSolution(query, value, _regime_of(q, gamma))


def solve_knapsack(inst: OuInstance, a, capacity: float) -> OuSolution:
    """Best query set under item weights ``a`` and weight budget ``capacity``.

    Scans cost-ascending windows of ``gamma`` items, keeping the lightest
    window seen so far (max-weight eviction, ties evict the higher rank so
    cheaper items stay queried).  The first window that fits is optimal; if
    none fits, querying is pointless and the empty set is returned.
    O(n log n).
    """
    weights = np.asarray(a, dtype=np.float64)
    if weights.shape != (inst.n,):
        raise ValueError("weight vector length must match the instance")
    if np.any(weights < 0) or not np.all(np.isfinite(weights)):
        raise ValueError("weights must be finite and nonnegative")
    capacity = float(capacity)
    if not capacity >= 0:
        raise ValueError("capacity must be nonnegative")
    z_bar = float((inst.c_bar + inst.c_hat).min())
    gamma = min(inst.gamma, inst.n)
    perm = canonicalize(inst.c_bar)
    found, _, in_set = kernels.knapsack_window(weights[perm.order], gamma, capacity)
    if not found:
        return OuSolution(frozenset(), z_bar, Regime.BELOW_BUDGET)
    c_sorted = inst.c_bar[perm.order]
    inside = c_sorted[in_set]
    outside = c_sorted[~in_set]
    inside_max = float(inside.max()) if inside.size else -np.inf
    outside_min = float(outside.min()) if outside.size else np.inf
    value = float(min(z_bar, max(outside_min, inside_max)))
    query = perm.originals_of(np.flatnonzero(in_set))
    return OuSolution(query, value, _regime_of(len(query), inst.gamma))


def solve_explicit(inst: OuInstance, sets: Sequence[Iterable[int]]) -> OuSolution:
    """Best query set among an explicit list; ties prefer smaller then
    lexicographically earlier sets."""
    if len(sets) == 0:
        raise ValueError("the list of candidate query sets is empty")
    best = None
    for cand in sets:
        idx = tuple(sorted(int(i) for i in cand))
        value = psi_closed_form(inst, idx)
        key = (value, len(idx), idx)
        if best is None or key < best[0]:
            best = (key, idx, value)
    _, idx, value = best
    return OuSolution(frozenset(idx), float(value), _regime_of(len(idx), inst.gamma))


def solve_ou(inst: OuInstance, family) -> OuSolution:
    """Dispatch on the family kind."""
    from .core import ExplicitFamily, KnapsackFamily, SelectionFamily

    if isinstance(family, SelectionFamily):
        return solve_selection(inst, min(family.q, inst.n))
    if isinstance(family, KnapsackFamily):
        return solve_knapsack(inst, family.a, family.capacity)
    if isinstance(family, ExplicitFamily):
        return solve_explicit(inst, list(family.sets))
    raise TypeError(f"not a query family: {family!r}")
