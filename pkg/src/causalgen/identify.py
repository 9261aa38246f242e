"""Causal-effect identifiability on graphs with latent nodes.

The visible graph plus its latent-marked nodes is projected onto an acyclic
directed mixed graph (latent common causes become bidirected edges), and the
complete identification recursion decides whether P(Y | do(X)) is computable
from the observational distribution; a hedge makes it fail.
"""

from __future__ import annotations

from dataclasses import dataclass

from causalgen.graphs import Dag


@dataclass(frozen=True)
class Admg:
    nodes: frozenset[int]
    directed: frozenset[tuple[int, int]]
    bidirected: frozenset[frozenset[int]]

    def parents(self, v: int) -> set[int]:
        return {a for a, b in self.directed if b == v}

    def children(self, v: int) -> set[int]:
        return {b for a, b in self.directed if a == v}

    def ancestors_incl(self, nodes: set[int]) -> set[int]:
        out = set(nodes)
        stack = list(nodes)
        while stack:
            v = stack.pop()
            for p in self.parents(v):
                if p not in out:
                    out.add(p)
                    stack.append(p)
        return out

    def sub(self, keep: set[int]) -> "Admg":
        return Admg(
            frozenset(keep),
            frozenset((a, b) for a, b in self.directed if a in keep and b in keep),
            frozenset(e for e in self.bidirected if e <= keep),
        )

    def drop_incoming(self, x: set[int]) -> "Admg":
        """Remove every edge with an arrowhead into a member of x."""
        return Admg(
            self.nodes,
            frozenset((a, b) for a, b in self.directed if b not in x),
            frozenset(e for e in self.bidirected if not (e & x)),
        )

    def districts(self) -> list[set[int]]:
        """Connected components under bidirected edges."""
        adj: dict[int, set[int]] = {v: set() for v in self.nodes}
        for e in self.bidirected:
            a, b = tuple(e)
            adj[a].add(b)
            adj[b].add(a)
        seen: set[int] = set()
        out = []
        for v in sorted(self.nodes):
            if v in seen:
                continue
            comp = {v}
            stack = [v]
            while stack:
                u = stack.pop()
                for w in adj[u]:
                    if w not in comp:
                        comp.add(w)
                        stack.append(w)
            seen |= comp
            out.append(comp)
        return out


def latent_project(dag: Dag, latent: set[int]) -> Admg:
    """Project out latent nodes: a -> b survives via latent-only directed
    paths; a <-> b appears when a latent node reaches both a and b through
    latent-only directed paths.
    """
    obs = set(dag.nodes) - latent
    directed: set[tuple[int, int]] = set()
    for a in obs:
        stack = [c for c in dag.children(a)]
        seen: set[int] = set()
        while stack:
            u = stack.pop()
            if u in seen:
                continue
            seen.add(u)
            if u in obs:
                directed.add((a, u))
            else:
                stack.extend(dag.children(u))
    bidirected: set[frozenset[int]] = set()
    for l in latent:
        reach: set[int] = set()
        stack = list(dag.children(l))
        seen = set()
        while stack:
            u = stack.pop()
            if u in seen:
                continue
            seen.add(u)
            if u in obs:
                reach.add(u)
            else:
                stack.extend(dag.children(u))
        for a in reach:
            for b in reach:
                if a < b:
                    bidirected.add(frozenset((a, b)))
    return Admg(frozenset(obs), frozenset(directed), frozenset(bidirected))


def id_identifiable(g: Admg, x: set[int], y: set[int]) -> bool:
    """Complete identification recursion for P(y | do(x)); True iff no hedge."""
    if not x:
        return True
    anc_y = g.ancestors_incl(y)
    if g.nodes - anc_y:
        return id_identifiable(g.sub(anc_y), x & anc_y, y)
    w = (set(g.nodes) - x) - g.drop_incoming(x).ancestors_incl(y)
    if w:
        return id_identifiable(g, x | w, y)
    districts_minus_x = g.sub(set(g.nodes) - x).districts()
    if len(districts_minus_x) > 1:
        return all(
            id_identifiable(g, set(g.nodes) - d, d) for d in districts_minus_x
        )
    s = districts_minus_x[0]
    full = g.districts()
    if len(full) == 1:
        return False
    if s in full:
        return True
    s_prime = next(d for d in full if s <= d)
    return id_identifiable(g.sub(s_prime), x & s_prime, y)


def identifiable(dag: Dag, latent: set[int], x: set[int], y: set[int]) -> bool:
    """Is P(y | do(x)) identifiable from the observational distribution over
    the non-latent nodes and the graph?
    """
    if x & y:
        raise ValueError("x and y must be disjoint")
    if (x | y) & latent:
        raise ValueError("x and y must be observable")
    return id_identifiable(latent_project(dag, latent), set(x), set(y))
