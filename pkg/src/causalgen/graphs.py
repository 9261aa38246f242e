"""Sparse random DAG sampling with isomorphism rejection.

Graphs have 3-10 binary nodes; every non-root picks 1 or 2 parents among the
nodes already present, so the maximum in-degree is 2.  A final random label
permutation scrambles the generative topological order.  Pools reject graphs
isomorphic to previously accepted ones via a canonical adjacency key.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from itertools import permutations
from pathlib import Path

from causalgen.rng import derive_rng

MIN_NODES = 3
MAX_NODES = 10
RETRY_BUDGET = 10_000


@dataclass(frozen=True)
class Dag:
    """Labeled DAG over nodes 0..node_count-1 with edges (parent, child)."""

    node_count: int
    edges: tuple[tuple[int, int], ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "edges", tuple(sorted(set(self.edges))))
        for a, b in self.edges:
            if not (0 <= a < self.node_count and 0 <= b < self.node_count):
                raise ValueError(f"edge ({a},{b}) out of range")
            if a == b:
                raise ValueError("self loops are not allowed")
        if self.topological_order() is None:
            raise ValueError("graph is cyclic")

    @property
    def nodes(self) -> range:
        return range(self.node_count)

    def parents(self, v: int) -> tuple[int, ...]:
        return tuple(sorted(a for a, b in self.edges if b == v))

    def children(self, v: int) -> tuple[int, ...]:
        return tuple(sorted(b for a, b in self.edges if a == v))

    def roots(self) -> tuple[int, ...]:
        has_parent = {b for _, b in self.edges}
        return tuple(v for v in self.nodes if v not in has_parent)

    def topological_order(self) -> list[int] | None:
        indeg = [0] * self.node_count
        for _, b in self.edges:
            indeg[b] += 1
        queue = sorted(v for v in self.nodes if indeg[v] == 0)
        order: list[int] = []
        while queue:
            v = queue.pop(0)
            order.append(v)
            for a, b in self.edges:
                if a == v:
                    indeg[b] -= 1
                    if indeg[b] == 0:
                        queue.append(b)
            queue.sort()
        return order if len(order) == self.node_count else None

    def ancestors(self, v: int) -> set[int]:
        """Strict ancestors of v."""
        out: set[int] = set()
        stack = list(self.parents(v))
        while stack:
            u = stack.pop()
            if u not in out:
                out.add(u)
                stack.extend(self.parents(u))
        return out

    def descendants(self, v: int) -> set[int]:
        """Strict descendants of v."""
        out: set[int] = set()
        stack = list(self.children(v))
        while stack:
            u = stack.pop()
            if u not in out:
                out.add(u)
                stack.extend(self.children(u))
        return out

    def has_directed_path(self, a: int, b: int) -> bool:
        return b in self.descendants(a)

    def drop_incoming(self, nodes: set[int]) -> "Dag":
        return Dag(self.node_count, tuple(e for e in self.edges if e[1] not in nodes))

    def drop_outgoing(self, nodes: set[int]) -> "Dag":
        return Dag(self.node_count, tuple(e for e in self.edges if e[0] not in nodes))

    def induced(self, keep: set[int]) -> "Dag":
        """Subgraph on `keep`, nodes renumbered by a stable map (kept sorted)."""
        order = sorted(keep)
        remap = {v: i for i, v in enumerate(order)}
        edges = tuple(
            (remap[a], remap[b]) for a, b in self.edges if a in keep and b in keep
        )
        return Dag(len(order), edges)

    def validate(self) -> None:
        """Raise unless the construction invariants hold."""
        indeg = [0] * self.node_count
        for _, b in self.edges:
            indeg[b] += 1
        if not any(d == 0 for d in indeg):
            raise ValueError("no root node")
        for v, d in enumerate(indeg):
            if d > 2:
                raise ValueError(f"node {v} has in-degree {d} > 2")


def sample_dag(node_count: int, rng: random.Random) -> Dag:
    """Sample a sparse DAG: random root set, then nodes added in topological
    order, each choosing 1 or 2 parents uniformly from those already present.

    A final label permutation hides the generative order.
    """
    if not MIN_NODES <= node_count <= MAX_NODES:
        raise ValueError(f"node_count must be in [{MIN_NODES},{MAX_NODES}]")
    max_roots = 2 if node_count <= 5 else 3
    n_roots = rng.randint(1, max_roots)
    edges: list[tuple[int, int]] = []
    for v in range(n_roots, node_count):
        k = min(rng.choice((1, 2)), v)
        for p in rng.sample(range(v), k):
            edges.append((p, v))
    perm = list(range(node_count))
    rng.shuffle(perm)
    return Dag(node_count, tuple((perm[a], perm[b]) for a, b in edges))


# ---------------------------------------------------------------------------
# canonical form


def _refine_colors(dag: Dag) -> list[list[int]]:
    """Iterated directed 1-WL refinement; returns color classes in a
    canonical class order (sorted by invariant signature).
    """
    n = dag.node_count
    parents = [dag.parents(v) for v in range(n)]
    children = [dag.children(v) for v in range(n)]
    color = [(len(parents[v]), len(children[v])) for v in range(n)]
    while True:
        sig = [
            (
                color[v],
                tuple(sorted(color[p] for p in parents[v])),
                tuple(sorted(color[c] for c in children[v])),
            )
            for v in range(n)
        ]
        ranking = {s: i for i, s in enumerate(sorted(set(sig)))}
        new_color = [(ranking[sig[v]],) for v in range(n)]
        if len(set(new_color)) == len(set(color)):
            color = new_color
            break
        color = new_color
    classes: dict[tuple, list[int]] = {}
    for v in range(n):
        classes.setdefault(color[v], []).append(v)
    return [classes[key] for key in sorted(classes)]


def _adjacency_bits(dag: Dag, order: list[int]) -> int:
    pos = {v: i for i, v in enumerate(order)}
    n = dag.node_count
    bits = 0
    for a, b in dag.edges:
        bits |= 1 << (pos[a] * n + pos[b])
    return bits


def canonical_form(dag: Dag) -> bytes:
    """Canonical key: equal for two DAGs iff they are isomorphic.

    WL color refinement partitions the nodes; the key is the minimum
    adjacency bitstring over all orderings that respect the partition
    (classes in canonical order, any permutation inside each class).
    Class sizes stay small for sparse DAGs at n <= 10, so the inner
    product of factorials is an acceptable exhaustive fallback.
    """
    classes = _refine_colors(dag)
    best: int | None = None

    def rec(i: int, prefix: list[int]) -> None:
        nonlocal best
        if i == len(classes):
            bits = _adjacency_bits(dag, prefix)
            if best is None or bits < best:
                best = bits
            return
        for perm in permutations(classes[i]):
            rec(i + 1, prefix + list(perm))

    rec(0, [])
    assert best is not None
    n = dag.node_count
    width = (n * n + 7) // 8
    return bytes([n]) + best.to_bytes(width, "big")


# ---------------------------------------------------------------------------
# pool sampling


@dataclass
class PoolResult:
    dags: list[Dag]
    seeds: list[int]
    missing: int = 0
    exhausted_sizes: list[int] = field(default_factory=list)

    @property
    def keys(self) -> list[bytes]:
        return [canonical_form(d) for d in self.dags]

    def shortfall_report(self) -> dict:
        return {"missing": self.missing, "exhausted_sizes": self.exhausted_sizes}


def sample_graph_pool(
    count: int,
    size_range: tuple[int, int],
    rng: random.Random,
    exclude: set[bytes] | None = None,
    retry_budget: int = RETRY_BUDGET,
) -> PoolResult:
    """Sample `count` pairwise non-isomorphic DAGs with sizes drawn uniformly
    from `size_range`.  A size is abandoned once `retry_budget` consecutive
    rejections pile up at that size; missing graphs are reported as shortfall
    instead of looping forever (small sizes have few isomorphism classes).
    """
    lo, hi = size_range
    if count < 1 or lo < MIN_NODES or hi > MAX_NODES or lo > hi:
        raise ValueError("bad pool request")
    seen: set[bytes] = set(exclude) if exclude else set()
    alive = list(range(lo, hi + 1))
    fails = {s: 0 for s in alive}
    result = PoolResult([], [])
    while len(result.dags) < count and alive:
        size = rng.choice(alive)
        seed = rng.getrandbits(63)
        dag = sample_dag(size, derive_rng(seed, "dag"))
        key = canonical_form(dag)
        if key in seen:
            fails[size] += 1
            if fails[size] >= retry_budget:
                alive.remove(size)
                result.exhausted_sizes.append(size)
            continue
        fails[size] = 0
        seen.add(key)
        result.dags.append(dag)
        result.seeds.append(seed)
    result.missing = count - len(result.dags)
    return result


def write_pool_manifest(path: Path, pool: PoolResult) -> None:
    """One JSON record per graph: node_count, edge list, canonical key, seed."""
    with open(path, "w", encoding="utf-8") as fh:
        for dag, seed in zip(pool.dags, pool.seeds):
            rec = {
                "node_count": dag.node_count,
                "edges": [list(e) for e in dag.edges],
                "key": canonical_form(dag).hex(),
                "seed": seed,
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def read_pool_manifest(path: Path) -> PoolResult:
    pool = PoolResult([], [])
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            dag = Dag(rec["node_count"], tuple(tuple(e) for e in rec["edges"]))
            pool.dags.append(dag)
            pool.seeds.append(rec["seed"])
    return pool


def load_or_build_pool(
    path: Path,
    count: int,
    size_range: tuple[int, int],
    seed: int,
    exclude: set[bytes] | None = None,
) -> PoolResult:
    """Reuse a persisted pool, extending it if the request grew."""
    if path.exists():
        pool = read_pool_manifest(path)
        if len(pool.dags) >= count:
            pool.dags = pool.dags[:count]
            pool.seeds = pool.seeds[:count]
            return pool
        seen = {canonical_form(d) for d in pool.dags} | (exclude or set())
        extra = sample_graph_pool(
            count - len(pool.dags),
            size_range,
            derive_rng(seed, "pool-extend", len(pool.dags)),
            exclude=seen,
        )
        pool.dags.extend(extra.dags)
        pool.seeds.extend(extra.seeds)
        pool.missing = extra.missing
        pool.exhausted_sizes = extra.exhausted_sizes
    else:
        pool = sample_graph_pool(
            count, size_range, derive_rng(seed, "pool"), exclude=exclude
        )
    write_pool_manifest(path, pool)
    return pool
