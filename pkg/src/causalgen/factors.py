"""Factors over named discrete variables and sum-product elimination.

The unit of exact inference: a nonnegative table indexed by the joint
assignment of its scope.  Elimination uses a min-fill ordering; at the
problem sizes here (<= 10 binary nodes, response variables with <= 16
states, two or three world copies) the induced width stays small.
"""

from __future__ import annotations

import numpy as np


class Factor:
    def __init__(self, scope: tuple[str, ...], cards: tuple[int, ...], table: np.ndarray):
        self.scope = tuple(scope)
        self.cards = tuple(cards)
        self.table = np.asarray(table, dtype=float).reshape(self.cards)
        if np.any(self.table < 0):
            raise ValueError("factor entries must be nonnegative")

    def __repr__(self) -> str:
        return f"Factor(scope={self.scope})"

    def multiply(self, other: "Factor") -> "Factor":
        scope = list(self.scope)
        cards = list(self.cards)
        for var, card in zip(other.scope, other.cards):
            if var not in scope:
                scope.append(var)
                cards.append(card)
        a = _align(self, scope, cards)
        b = _align(other, scope, cards)
        return Factor(tuple(scope), tuple(cards), a * b)

    def marginalize(self, var: str) -> "Factor":
        axis = self.scope.index(var)
        scope = self.scope[:axis] + self.scope[axis + 1 :]
        cards = self.cards[:axis] + self.cards[axis + 1 :]
        return Factor(scope, cards, self.table.sum(axis=axis))

    def reduce(self, var: str, value: int) -> "Factor":
        axis = self.scope.index(var)
        scope = self.scope[:axis] + self.scope[axis + 1 :]
        cards = self.cards[:axis] + self.cards[axis + 1 :]
        return Factor(scope, cards, np.take(self.table, value, axis=axis))

    def total(self) -> float:
        return float(self.table.sum())


def _align(f: Factor, scope: list[str], cards: list[int]) -> np.ndarray:
    """Broadcast f.table to the axis layout given by `scope`."""
    if not f.scope:
        return f.table.reshape([1] * len(scope))
    target = [scope.index(var) for var in f.scope]
    table = np.transpose(f.table, np.argsort(target))
    shape = [1] * len(scope)
    for pos in target:
        shape[pos] = cards[pos]
    return table.reshape(shape)


def min_fill_order(factors: list[Factor], eliminate: set[str]) -> list[str]:
    """Greedy min-fill elimination order over the factor interaction graph."""
    neighbors: dict[str, set[str]] = {}
    for f in factors:
        for v in f.scope:
            neighbors.setdefault(v, set())
            for u in f.scope:
                if u != v:
                    neighbors[v].add(u)
    order = []
    remaining = set(eliminate) & set(neighbors)
    while remaining:
        best, best_fill = None, None
        for v in sorted(remaining):
            nbrs = [u for u in neighbors[v] if u in neighbors]
            fill = sum(
                1
                for i, a in enumerate(nbrs)
                for b in nbrs[i + 1 :]
                if b not in neighbors[a]
            )
            if best_fill is None or fill < best_fill:
                best, best_fill = v, fill
        nbrs = [u for u in neighbors[best] if u in neighbors]
        for i, a in enumerate(nbrs):
            for b in nbrs[i + 1 :]:
                neighbors[a].add(b)
                neighbors[b].add(a)
        for u in nbrs:
            neighbors[u].discard(best)
        del neighbors[best]
        remaining.discard(best)
        order.append(best)
    return order


def eliminate_to(factors: list[Factor], keep: set[str]) -> Factor:
    """Sum out every variable not in `keep`; returns the joined factor over
    (a subset of) `keep`.
    """
    all_vars = {v for f in factors for v in f.scope}
    order = min_fill_order(factors, all_vars - keep)
    work = list(factors)
    for var in order:
        bucket = [f for f in work if var in f.scope]
        work = [f for f in work if var not in f.scope]
        if not bucket:
            continue
        joined = bucket[0]
        for f in bucket[1:]:
            joined = joined.multiply(f)
        work.append(joined.marginalize(var))
    if not work:
        return Factor((), (), np.array(1.0))
    out = work[0]
    for f in work[1:]:
        out = out.multiply(f)
    return out
