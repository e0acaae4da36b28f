"""Problem instances, query families, and shared combinatorial primitives.

Two uncertainty models share the query machinery:

* objective uncertainty ("OU"): pick one item, each item cost can rise from
  its nominal value by a known deviation, at most ``gamma`` items deviate;
* constraint uncertainty ("CU"): pick ``p`` items, at most ``gamma`` items
  fail, a selection tolerates at most ``b`` failures among its items.

Querying a set I of items before selecting reveals exactly which members of I
deviate.  All public functions take and return 0-based item indices; the JSON
file format is 1-based (see `instance_to_dict`).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Union

import numpy as np

from . import kernels

INF = float("inf")


def _as_float_array(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError(f"{name} must be one-dimensional")
    if arr.size == 0:
        raise ValueError(f"{name} must be nonempty")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.setflags(write=False)
    return arr


def _check_int(value, name: str, minimum: int) -> int:
    if not isinstance(value, (int, np.integer)):
        raise ValueError(f"{name} must be an integer")
    value = int(value)
    if value < minimum:
        raise ValueError(f"{name} must be >= {minimum}")
    return value


@dataclass(frozen=True)
class OuInstance:
    """One-item selection with cost deviations: nominal costs ``c_bar``,
    deviations ``c_hat`` (nonnegative), at most ``gamma`` items deviate."""

    c_bar: np.ndarray
    c_hat: np.ndarray
    gamma: int

    def __post_init__(self):
        object.__setattr__(self, "c_bar", _as_float_array(self.c_bar, "c_bar"))
        object.__setattr__(self, "c_hat", _as_float_array(self.c_hat, "c_hat"))
        object.__setattr__(self, "gamma", _check_int(self.gamma, "gamma", 0))
        if self.c_bar.shape != self.c_hat.shape:
            raise ValueError("c_bar and c_hat must have equal length")
        if np.any(self.c_hat < 0):
            raise ValueError("c_hat must be nonnegative")

    @property
    def n(self) -> int:
        return int(self.c_bar.shape[0])


@dataclass(frozen=True)
class CuInstance:
    """p-item selection under at most ``gamma`` item failures, of which a
    selection may contain at most ``b``."""

    c: np.ndarray
    p: int
    b: int
    gamma: int

    def __post_init__(self):
        object.__setattr__(self, "c", _as_float_array(self.c, "c"))
        object.__setattr__(self, "p", _check_int(self.p, "p", 1))
        object.__setattr__(self, "b", _check_int(self.b, "b", 0))
        object.__setattr__(self, "gamma", _check_int(self.gamma, "gamma", 0))
        if self.p > self.n:
            raise ValueError("p must be at most n")

    @property
    def n(self) -> int:
        return int(self.c.shape[0])


@dataclass(frozen=True)
class SelectionFamily:
    """All query sets of cardinality at most q."""

    q: int

    def __post_init__(self):
        object.__setattr__(self, "q", _check_int(self.q, "q", 0))


@dataclass(frozen=True)
class KnapsackFamily:
    """All query sets whose total weight a(I) fits the capacity."""

    a: np.ndarray
    capacity: float

    def __post_init__(self):
        object.__setattr__(self, "a", _as_float_array(self.a, "a"))
        if np.any(self.a < 0):
            raise ValueError("weights must be nonnegative")
        cap = float(self.capacity)
        if not np.isfinite(cap) or cap < 0:
            raise ValueError("capacity must be finite and nonnegative")
        object.__setattr__(self, "capacity", cap)


@dataclass(frozen=True)
class ExplicitFamily:
    """An explicitly listed family; the empty set is admissible only if
    listed."""

    sets: tuple[frozenset[int], ...]

    def __post_init__(self):
        if len(self.sets) == 0:
            raise ValueError("explicit family must list at least one set")
        norm = []
        for s in self.sets:
            fs = frozenset(int(i) for i in s)
            if any(i < 0 for i in fs):
                raise ValueError("explicit family indices must be nonnegative")
            norm.append(fs)
        object.__setattr__(self, "sets", tuple(norm))


QueryFamily = Union[SelectionFamily, KnapsackFamily, ExplicitFamily]


@dataclass(frozen=True)
class Permutation:
    """A canonical ordering of items: ``order[r]`` is the original index of
    rank r, ``inverse[i]`` the rank of original index i."""

    order: np.ndarray
    inverse: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self):
        order = np.asarray(self.order, dtype=np.int64)
        if order.ndim != 1:
            raise ValueError("order must be one-dimensional")
        n = order.shape[0]
        if sorted(order.tolist()) != list(range(n)):
            raise ValueError("order must be a permutation of 0..n-1")
        inverse = np.empty(n, dtype=np.int64)
        inverse[order] = np.arange(n)
        order.setflags(write=False)
        inverse.setflags(write=False)
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "inverse", inverse)

    @property
    def n(self) -> int:
        return int(self.order.shape[0])

    def ranks_of(self, items: Iterable[int]) -> np.ndarray:
        """Sorted ranks of the given original indices."""
        idx = np.fromiter((int(i) for i in items), dtype=np.int64)
        return np.sort(self.inverse[idx]) if idx.size else idx

    def originals_of(self, ranks: Iterable[int]) -> frozenset[int]:
        return frozenset(int(self.order[int(r)]) for r in ranks)


@dataclass(frozen=True)
class SplitBudget:
    """A deviation budget split: ``gamma_i`` spent inside the query set,
    ``gamma_rest`` kept for the unobserved items."""

    gamma_i: int
    gamma_rest: int

    def __post_init__(self):
        object.__setattr__(self, "gamma_i", _check_int(self.gamma_i, "gamma_i", 0))
        object.__setattr__(self, "gamma_rest", _check_int(self.gamma_rest, "gamma_rest", 0))

    @property
    def total(self) -> int:
        return self.gamma_i + self.gamma_rest

    @classmethod
    def of(cls, gamma: int, gamma_i: int) -> "SplitBudget":
        if gamma_i > gamma:
            raise ValueError("gamma_i exceeds the total budget")
        return cls(gamma_i, gamma - gamma_i)


def kth_smallest(values, k: int) -> float:
    """k-th smallest value, k counted from 1."""
    arr = np.asarray(values, dtype=np.float64)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError("values must be a nonempty one-dimensional array")
    if not 1 <= k <= arr.size:
        raise ValueError(f"k must be in 1..{arr.size}")
    return float(kernels.select_kth(arr, k - 1))


def canonicalize(costs) -> Permutation:
    """Stable ascending cost order; ties keep the lower original index."""
    arr = np.asarray(costs, dtype=np.float64)
    if arr.ndim != 1:
        raise ValueError("costs must be one-dimensional")
    return Permutation(np.argsort(arr, kind="stable"))


def family_max_cardinality(family: QueryFamily) -> int:
    """Largest query-set size the family admits."""
    if isinstance(family, SelectionFamily):
        return family.q
    if isinstance(family, KnapsackFamily):
        w = np.sort(family.a)
        total = 0.0
        count = 0
        for wi in w:
            if total + wi > family.capacity:
                break
            total += wi
            count += 1
        return count
    if isinstance(family, ExplicitFamily):
        return max(len(s) for s in family.sets)
    raise TypeError(f"not a query family: {family!r}")


def family_contains(family: QueryFamily, items: Iterable[int]) -> bool:
    """Whether the given set of item indices is an admissible query set."""
    s = frozenset(int(i) for i in items)
    if any(i < 0 for i in s):
        raise ValueError("item indices must be nonnegative")
    if isinstance(family, SelectionFamily):
        return len(s) <= family.q
    if isinstance(family, KnapsackFamily):
        n = family.a.shape[0]
        if any(i >= n for i in s):
            raise ValueError("item index out of range for the weight vector")
        return float(sum(family.a[i] for i in s)) <= family.capacity
    if isinstance(family, ExplicitFamily):
        return s in family.sets
    raise TypeError(f"not a query family: {family!r}")


# ---------------------------------------------------------------------------
# instance files (JSON, 1-based indices)


@dataclass(frozen=True)
class LoadedInstance:
    variant: str  # "OU" | "CU"
    instance: Union[OuInstance, CuInstance]
    family: QueryFamily
    meta: dict


def _family_to_dict(family: QueryFamily) -> dict:
    if isinstance(family, SelectionFamily):
        return {"kind": "selection", "q": family.q}
    if isinstance(family, KnapsackFamily):
        return {
            "kind": "knapsack",
            "a": [_num(v) for v in family.a.tolist()],
            "C": _num(family.capacity),
        }
    if isinstance(family, ExplicitFamily):
        return {
            "kind": "explicit",
            "sets": [sorted(i + 1 for i in s) for s in family.sets],
        }
    raise TypeError(f"not a query family: {family!r}")


def _num(v: float):
    return int(v) if float(v).is_integer() else float(v)


def instance_to_dict(instance, family: QueryFamily, meta: dict | None = None) -> dict:
    """Serializable form of an instance; item indices inside are 1-based."""
    if isinstance(instance, OuInstance):
        body = {
            "variant": "OU",
            "n": instance.n,
            "c_bar": [_num(v) for v in instance.c_bar.tolist()],
            "c_hat": [_num(v) for v in instance.c_hat.tolist()],
            "gamma": instance.gamma,
        }
    elif isinstance(instance, CuInstance):
        body = {
            "variant": "CU",
            "n": instance.n,
            "c": [_num(v) for v in instance.c.tolist()],
            "p": instance.p,
            "b": instance.b,
            "gamma": instance.gamma,
        }
    else:
        raise TypeError(f"not an instance: {instance!r}")
    body["family"] = _family_to_dict(family)
    body["meta"] = dict(meta or {})
    return body


def _family_from_dict(obj: dict, n: int) -> QueryFamily:
    kind = obj.get("kind")
    if kind == "selection":
        return SelectionFamily(q=int(obj["q"]))
    if kind == "knapsack":
        a = obj["a"]
        if len(a) != n:
            raise ValueError("weight vector length must equal n")
        return KnapsackFamily(a=a, capacity=float(obj["C"]))
    if kind == "explicit":
        sets = []
        for s in obj["sets"]:
            fs = frozenset(int(i) - 1 for i in s)
            if any(i < 0 or i >= n for i in fs):
                raise ValueError("explicit set index out of range")
            sets.append(fs)
        return ExplicitFamily(sets=tuple(sets))
    raise ValueError(f"unknown family kind: {kind!r}")


def instance_from_dict(obj: dict) -> LoadedInstance:
    variant = obj.get("variant")
    n = int(obj["n"])
    if variant == "OU":
        inst = OuInstance(c_bar=obj["c_bar"], c_hat=obj["c_hat"], gamma=int(obj["gamma"]))
    elif variant == "CU":
        inst = CuInstance(c=obj["c"], p=int(obj["p"]), b=int(obj["b"]), gamma=int(obj["gamma"]))
    else:
        raise ValueError(f"unknown variant: {variant!r}")
    if inst.n != n:
        raise ValueError("declared n does not match the cost vector length")
    family = _family_from_dict(obj["family"], n)
    return LoadedInstance(variant=variant, instance=inst, family=family, meta=dict(obj.get("meta", {})))


def save_instance(path, instance, family: QueryFamily, meta: dict | None = None) -> None:
    obj = instance_to_dict(instance, family, meta)
    Path(path).write_text(dumps_instance(obj))


def dumps_instance(obj: dict) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, separators=(",", ": ")) + "\n"


def load_instance(path) -> LoadedInstance:
    try:
        obj = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        from .errors import ParseError

        raise ParseError(f"malformed instance file {path}: {exc}") from exc
    return instance_from_dict(obj)
