"""Upper bounds on the number of holding classes and exact class counts.

All bounds are exact Python integers. ``enumerate_classes`` visits every one
of the ``2**n`` configurations, so it is capped at ``n <= 20`` by default.
"""
from __future__ import annotations

from dataclasses import dataclass
from math import comb

import numpy as np

from .dynamics import Model, feature_rows_batch
from .graph import Graph

ENUMERATION_CAP = 20


def bound_contact(n: int) -> int:
    """``(n + 1)(n**2 - n + 6) / 6``, the sum over ``s`` of ``s(n - s) + 1``."""
    if n < 1:
        raise ValueError("n must be >= 1")
    num = (n + 1) * (n * n - n + 6)
    assert num % 6 == 0
    return num // 6


def bound_contact_dmax(n: int, dmax: int) -> int:
    if not 0 <= dmax <= max(n - 1, 0):
        raise ValueError(f"dmax={dmax} out of range for n={n}")
    return sum(s * min(n - s, dmax) + 1 for s in range(n + 1))


def bound_complete(n: int) -> int:
    if n < 1:
        raise ValueError("n must be >= 1")
    return n + 1


def bound_reversible(n: int) -> int:
    if n < 1:
        raise ValueError("n must be >= 1")
    return 1 << n


def bound_reversible_dmax(n: int, dmax: int) -> int:
    """Multisets of ``s`` infected-neighbour counts drawn from ``0..min(n - s, dmax)``.

    For ``s <= n - dmax`` that is ``C(dmax + s, s)``, otherwise ``C(n, s)``.
    ``dmax = 0`` (edgeless graph) is accepted and gives ``n + 1``.
    """
    if not 0 <= dmax <= max(n - 1, 0):
        raise ValueError(f"dmax={dmax} out of range for n={n}")
    low = sum(comb(dmax + s, s) for s in range(0, n - dmax + 1))
    high = sum(comb(n, s) for s in range(n - dmax + 1, n + 1))
    return low + high


def bound_for(model, n: int, dmax: int | None = None) -> int:
    """Tightest applicable bound (degree aware when ``dmax`` is given)."""
    model = Model.parse(model)
    if dmax is None:
        return bound_contact(n) if model is Model.CONTACT else bound_reversible(n)
    if model is Model.CONTACT:
        return bound_contact_dmax(n, dmax)
    return bound_reversible_dmax(n, dmax)


@dataclass(frozen=True)
class ClassCensus:
    n: int
    model: Model
    k_exact: int
    k_bound: int
    k_bound_global: int

    @property
    def ratio(self) -> float:
        return self.k_exact / 2**self.n


def all_configurations(n: int) -> np.ndarray:
    """Every configuration of ``n`` nodes as rows, in counter order (row ``i`` is ``i`` in binary, node 0 = LSB)."""
    idx = np.arange(1 << n, dtype=np.int64)
    return ((idx[:, None] >> np.arange(n)) & 1).astype(np.uint8)


def enumerate_classes(g: Graph, model, cap: int = ENUMERATION_CAP, block: int = 1 << 16) -> ClassCensus:
    """Exact number of distinct holding-class signatures over all ``2**n`` configurations."""
    model = Model.parse(model)
    if g.n > cap:
        raise ValueError(f"n={g.n} exceeds the enumeration cap {cap}")
    seen = set()
    total = 1 << g.n
    shifts = np.arange(g.n)
    for start in range(0, total, block):
        idx = np.arange(start, min(start + block, total), dtype=np.int64)
        X = ((idx[:, None] >> shifts) & 1).astype(np.uint8)
        rows = np.unique(feature_rows_batch(g, X, model), axis=0)
        seen.update(map(tuple, rows.tolist()))
    return ClassCensus(
        n=g.n,
        model=model,
        k_exact=len(seen),
        k_bound=bound_for(model, g.n, g.max_degree),
        k_bound_global=bound_for(model, g.n),
    )
