"""Deterministic random-instance generation.

A generation spec names a cell (n, a p rule, a gamma rule) and a count; every
instance in the cell is drawn from its own Philox stream, keyed by the spec
seed and jumped to the instance index, so regenerating any file never depends
on the others and reruns are byte-identical.  All integer draws include both
endpoints of their stated range.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .core import (
    CuInstance,
    KnapsackFamily,
    OuInstance,
    QueryFamily,
    SelectionFamily,
    save_instance,
)

_RNG_NAME = "Philox"
_COST_MAX = 50  # c, c_bar, c_hat, and a are drawn from 0..50 inclusive


def resolve_rule(rule: str, n: int) -> int:
    """Evaluate a fraction-of-n rule such as "n/10"; rejects non-dividing n.

    The grammar is exactly ``n`` or ``n/<positive integer>``; anything else,
    or an n the divisor does not divide, is a ValueError.
    """
    text = str(rule).replace(" ", "")
    if text == "n":
        return int(n)
    if not text.startswith("n/"):
        raise ValueError(f"rule must look like n/<k>, got {rule!r}")
    try:
        k = int(text[2:])
    except ValueError:
        raise ValueError(f"rule divisor must be an integer, got {rule!r}") from None
    if k <= 0:
        raise ValueError(f"rule divisor must be positive, got {rule!r}")
    if n % k != 0:
        raise ValueError(f"n={n} is not divisible by {k} as {rule!r} requires")
    return n // k


@dataclass(frozen=True)
class GenSpec:
    """One generation cell: everything the instance stream depends on."""

    seed: int
    n: int
    p_rule: str
    gamma_rule: str
    count: int
    variant: str = "CU"
    family: str = "knapsack"

    def __post_init__(self):
        seed = int(self.seed)
        if not 0 <= seed < 2**64:
            raise ValueError("seed must fit in 64 unsigned bits")
        n = int(self.n)
        if n < 1:
            raise ValueError("n must be at least 1")
        count = int(self.count)
        if count < 1:
            raise ValueError("count must be at least 1")
        if self.variant not in ("OU", "CU"):
            raise ValueError(f"variant must be OU or CU, got {self.variant!r}")
        if self.family not in ("selection", "knapsack"):
            raise ValueError(
                f"family must be selection or knapsack, got {self.family!r}"
            )
        resolve_rule(self.p_rule, n)  # validate divisibility up front
        resolve_rule(self.gamma_rule, n)
        object.__setattr__(self, "seed", seed)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "count", count)

    @property
    def p(self) -> int:
        return resolve_rule(self.p_rule, self.n)

    @property
    def gamma(self) -> int:
        return resolve_rule(self.gamma_rule, self.n)


def draw_instance(spec: GenSpec, index: int):
    """The index-th instance of the spec's stream.

    Returns (instance, family, meta).  Draw order is fixed: b (CU only),
    then the cost vector(s), then the family data (weights and capacity, or
    q).  A degenerate all-zero weight vector gets capacity 1 so the capacity
    draw always has a nonempty range.
    """
    if not 0 <= index < spec.count:
        raise ValueError(f"index must be in 0..{spec.count - 1}")
    rng = np.random.Generator(np.random.Philox(key=spec.seed).jumped(index))
    n = spec.n
    meta = {
        "rng": _RNG_NAME,
        "seed": spec.seed,
        "stream": index,
        "p_rule": spec.p_rule,
        "gamma_rule": spec.gamma_rule,
    }
    if spec.variant == "CU":
        b = int(rng.integers(1, n + 1))
        c = rng.integers(0, _COST_MAX + 1, n).astype(np.float64)
        instance = CuInstance(c=c, p=spec.p, b=b, gamma=spec.gamma)
    else:
        c_bar = rng.integers(0, _COST_MAX + 1, n).astype(np.float64)
        c_hat = rng.integers(0, _COST_MAX + 1, n).astype(np.float64)
        instance = OuInstance(c_bar=c_bar, c_hat=c_hat, gamma=spec.gamma)
    family: QueryFamily
    if spec.family == "knapsack":
        a = rng.integers(0, _COST_MAX + 1, n).astype(np.float64)
        cap = int(rng.integers(1, max(int(a.sum()), 1) + 1))
        family = KnapsackFamily(a=a, capacity=float(cap))
    else:
        family = SelectionFamily(q=int(rng.integers(0, n + 1)))
    return instance, family, meta


def instance_filename(spec: GenSpec, index: int) -> str:
    if spec.variant == "CU":
        cell = f"cu_{spec.family}_n{spec.n}_p{spec.p}_g{spec.gamma}"
    else:
        cell = f"ou_{spec.family}_n{spec.n}_g{spec.gamma}"
    return f"{cell}_s{spec.seed}_{index:03d}.json"


def generate(spec: GenSpec, out_dir) -> list[Path]:
    """Write the spec's instances as JSON files and return their paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for i in range(spec.count):
        instance, family, meta = draw_instance(spec, i)
        path = out / instance_filename(spec, i)
        save_instance(path, instance, family, meta)
        paths.append(path)
    return paths
