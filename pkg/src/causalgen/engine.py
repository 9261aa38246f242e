"""Exact inference over binary SCMs.

Observational queries run variable elimination on the CPT factors;
interventional queries run it on the graph-surgery model (truncated
factorization, then conditioning); counterfactual queries build multi-world
networks whose world copies share per-node response variables.  Graph-only
judgments (d-separation, Markov blanket, backdoor/frontdoor criteria) live
here too; identifiability is in :mod:`causalgen.identify`.
"""

from __future__ import annotations

from collections import deque
from itertools import product

import numpy as np

from causalgen.factors import Factor, eliminate_to
from causalgen.graphs import Dag
from causalgen.scm import Cpt, ResponseModel, Scm, response_state_probs

ZERO_EVIDENCE = 1e-14


class UndefinedConditionalError(ValueError):
    """Conditioning event has probability zero; the query must be rejected."""


# ---------------------------------------------------------------------------
# graph criteria


def d_separated(dag: Dag, a: set[int], b: set[int], z: set[int]) -> bool:
    """True iff every path between `a` and `b` is blocked given `z`.

    Linear-time reachability over (node, travel direction) states.
    """
    if not a or not b:
        raise ValueError("a and b must be nonempty")
    if a & b or a & z or b & z:
        raise ValueError("a, b, z must be pairwise disjoint")
    anc_z = set(z)
    for v in z:
        anc_z |= dag.ancestors(v)
    up, down = 0, 1
    queue = deque((x, up) for x in a)
    seen: set[tuple[int, int]] = set()
    reachable: set[int] = set()
    while queue:
        v, direction = queue.popleft()
        if (v, direction) in seen:
            continue
        seen.add((v, direction))
        if direction == up and v not in z:
            reachable.add(v)
            for p in dag.parents(v):
                queue.append((p, up))
            for c in dag.children(v):
                queue.append((c, down))
        elif direction == down:
            if v not in z:
                reachable.add(v)
                for c in dag.children(v):
                    queue.append((c, down))
            if v in anc_z:
                for p in dag.parents(v):
                    queue.append((p, up))
    return not (reachable & b)


def markov_blanket(dag: Dag, v: int) -> set[int]:
    """Parents, children, and co-parents of v."""
    out = set(dag.parents(v)) | set(dag.children(v))
    for c in dag.children(v):
        out |= set(dag.parents(c))
    out.discard(v)
    return out


def backdoor_ok(dag: Dag, x: int, y: int, z: set[int]) -> bool:
    """Backdoor criterion: no member of z descends from x, and z blocks every
    path from x to y that starts with an edge into x.
    """
    if x == y or x in z or y in z:
        raise ValueError("x, y, z must be distinct")
    if z & dag.descendants(x):
        return False
    trimmed = dag.drop_outgoing({x})
    return d_separated(trimmed, {x}, {y}, z)


def frontdoor_ok(dag: Dag, x: int, y: int, m: set[int]) -> bool:
    """Frontdoor criterion for the set m relative to (x, y):
    (i) m intercepts all directed paths x -> y, (ii) no unblocked backdoor
    path from x to m, (iii) all backdoor paths from m to y are blocked by x.
    """
    if x in m or y in m or x == y:
        raise ValueError("x, y must not be in m")
    # (i) no directed path x -> y avoiding m
    stack, seen = [x], {x}
    while stack:
        u = stack.pop()
        for c in dag.children(u):
            if c == y:
                return False
            if c not in seen and c not in m:
                seen.add(c)
                stack.append(c)
    if m:
        if not d_separated(dag.drop_outgoing({x}), {x}, m, set()):
            return False
        if not d_separated(dag.drop_outgoing(m), m, {y}, {x}):
            return False
    return True


# ---------------------------------------------------------------------------
# factor construction


def _mechanism_factor(cpt: Cpt, pa_names: tuple[str, ...], v_name: str) -> Factor:
    k = len(cpt.parents)
    table = np.zeros((2,) * k + (2,))
    for row, pa in enumerate(product((0, 1), repeat=k)):
        p1 = cpt.p1(row)
        table[pa + (1,)] = p1
        table[pa + (0,)] = 1.0 - p1
    return Factor(pa_names + (v_name,), (2,) * (k + 1), table)


def _point_mass(name: str, value: int) -> Factor:
    table = np.zeros(2)
    table[value] = 1.0
    return Factor((name,), (2,), table)


def _response_prior(u_name: str, probs: tuple[float, ...]) -> Factor:
    return Factor((u_name,), (len(probs),), np.array(probs))


def _response_mechanism(
    cpt: Cpt, u_name: str, pa_names: tuple[str, ...], v_name: str
) -> Factor:
    """Deterministic factor: v equals the response state's output for the
    parent row.
    """
    k = len(cpt.parents)
    n_states = 1 << (1 << k)
    table = np.zeros((n_states,) + (2,) * k + (2,))
    for state in range(n_states):
        for row, pa in enumerate(product((0, 1), repeat=k)):
            out = ResponseModel.output(state, row)
            table[(state,) + pa + (out,)] = 1.0
    return Factor((u_name,) + pa_names + (v_name,), (n_states,) + (2,) * (k + 1), table)


def _ancestral_closure(dag: Dag, nodes: set[int]) -> set[int]:
    out = set(nodes)
    for v in nodes:
        out |= dag.ancestors(v)
    return out


# ---------------------------------------------------------------------------
# observational / interventional queries


def joint_query(scm: Scm, targets: dict[int, int], evidence: dict[int, int]) -> float:
    """P(targets | evidence) by variable elimination; empty evidence gives the
    joint/marginal probability of `targets`.
    """
    if not targets:
        raise ValueError("targets must be nonempty")
    if set(targets) & set(evidence):
        raise ValueError("targets and evidence must be disjoint")
    relevant = _ancestral_closure(scm.dag, set(targets) | set(evidence))
    factors = []
    for v in sorted(relevant):
        cpt = scm.cpts[v]
        f = _mechanism_factor(cpt, tuple(f"n{p}" for p in cpt.parents), f"n{v}")
        factors.append(f)
    for v, val in evidence.items():
        factors = [
            f.reduce(f"n{v}", val) if f"n{v}" in f.scope else f for f in factors
        ]
    result = eliminate_to(factors, {f"n{v}" for v in targets})
    denom = result.total()
    if denom <= ZERO_EVIDENCE:
        raise UndefinedConditionalError("evidence has probability zero")
    idx = tuple(targets[int(name[1:])] for name in result.scope)
    return float(result.table[idx]) / denom


def intervene(scm: Scm, assignments: dict[int, int]) -> Scm:
    """Graph surgery: cut incoming edges of intervened nodes and replace their
    mechanisms with point masses on the forced values.
    """
    for v in assignments:
        if v not in scm.dag.nodes:
            raise ValueError(f"node {v} not in graph")
    dag = scm.dag.drop_incoming(set(assignments))
    scale = 10**scm.precision
    cpts = []
    for v in scm.dag.nodes:
        if v in assignments:
            cpts.append(Cpt(v, (), (assignments[v] * scale,), scm.precision))
        else:
            cpts.append(scm.cpts[v])
    return Scm(dag, tuple(cpts), scm.precision)


def interventional_query(
    scm: Scm,
    do: dict[int, int],
    targets: dict[int, int],
    evidence: dict[int, int],
) -> float:
    """P(targets | do(.), evidence) on the mutilated model."""
    keys = [set(do), set(targets), set(evidence)]
    for i, a in enumerate(keys):
        for b in keys[i + 1 :]:
            if a & b:
                raise ValueError("do, targets, evidence must be pairwise disjoint")
    return joint_query(intervene(scm, do), targets, evidence)


# ---------------------------------------------------------------------------
# counterfactual queries (shared-response multi-world networks)


def _world_factors(
    scm: Scm,
    tag: str,
    nodes: set[int],
    interventions: dict[int, int],
    response_probs: dict[int, tuple[float, ...]],
) -> list[Factor]:
    factors = []
    for v in sorted(nodes):
        if v in interventions:
            factors.append(_point_mass(f"{tag}{v}", interventions[v]))
            continue
        cpt = scm.cpts[v]
        if v not in response_probs:
            response_probs[v] = response_state_probs(cpt)
        factors.append(
            _response_mechanism(
                cpt, f"U{v}", tuple(f"{tag}{p}" for p in cpt.parents), f"{tag}{v}"
            )
        )
    return factors


def _finish_conditional(
    factors: list[Factor], targets: dict[str, int]
) -> float:
    result = eliminate_to(factors, set(targets))
    denom = result.total()
    if denom <= ZERO_EVIDENCE:
        raise UndefinedConditionalError("evidence has probability zero")
    idx = tuple(targets[name] for name in result.scope)
    return float(result.table[idx]) / denom


def counterfactual_query(
    scm: Scm,
    do: dict[int, int],
    outcome: dict[int, int],
    evidence: dict[int, int],
) -> float:
    """P(outcome under do(.) | factual evidence) via a two-world network.

    The factual world receives the evidence, the counterfactual world the
    intervention; both share the per-node response variables, which realizes
    abduction--action--prediction exactly.
    """
    if set(do) & set(outcome):
        raise ValueError("do and outcome must be disjoint")
    f_rel = _ancestral_closure(scm.dag, set(evidence))
    c_rel = _ancestral_closure(scm.dag.drop_incoming(set(do)), set(outcome))
    response_probs: dict[int, tuple[float, ...]] = {}
    factors = _world_factors(scm, "F", f_rel, {}, response_probs)
    factors += _world_factors(scm, "C", c_rel, do, response_probs)
    for v, probs in response_probs.items():
        factors.append(_response_prior(f"U{v}", probs))
    for v, val in evidence.items():
        factors = [
            f.reduce(f"F{v}", val) if f"F{v}" in f.scope else f for f in factors
        ]
    return _finish_conditional(factors, {f"C{v}": val for v, val in outcome.items()})


def nested_counterfactual(
    scm: Scm, t: int, m: int, y: int, x_outer: int, x_inner: int
) -> float:
    """E[Y under do(T=x_outer) with M held at its value under do(T=x_inner)].

    World A fixes T=x_inner and determines M; world B fixes T=x_outer and
    copies M from world A; both share response variables.
    """
    if len({t, m, y}) != 3:
        raise ValueError("t, m, y must be distinct")
    b_rel = _ancestral_closure(scm.dag.drop_incoming({t, m}), {y})
    response_probs: dict[int, tuple[float, ...]] = {}
    factors: list[Factor] = []
    if m in b_rel:
        a_rel = _ancestral_closure(scm.dag.drop_incoming({t}), {m})
        factors += _world_factors(scm, "A", a_rel, {t: x_inner}, response_probs)
        b_rel = b_rel - {m}
        copy = np.eye(2)
        factors.append(Factor((f"A{m}", f"B{m}"), (2, 2), copy))
    factors += _world_factors(scm, "B", b_rel, {t: x_outer}, response_probs)
    for v, probs in response_probs.items():
        factors.append(_response_prior(f"U{v}", probs))
    return _finish_conditional(factors, {f"B{y}": 1})


# ---------------------------------------------------------------------------
# requisite probability nodes


def requisite_observational(dag: Dag, nodes: set[int]) -> set[int]:
    """Barren-node removal: the mechanisms needed for P over `nodes`."""
    return _ancestral_closure(dag, nodes)


def requisite_interventional(dag: Dag, do: set[int], nodes: set[int]) -> set[int]:
    mutilated = dag.drop_incoming(do)
    return _ancestral_closure(mutilated, nodes) - do


def requisite_counterfactual(
    dag: Dag, do: set[int], outcome: set[int], evidence: set[int]
) -> set[int]:
    factual = _ancestral_closure(dag, evidence)
    counterfactual = _ancestral_closure(dag.drop_incoming(do), outcome) - do
    return factual | counterfactual


def requisite_nested(dag: Dag, t: int, m: int, y: int) -> set[int]:
    b_rel = _ancestral_closure(dag.drop_incoming({t, m}), {y})
    req = b_rel - {t, m}
    if m in b_rel:
        req |= _ancestral_closure(dag.drop_incoming({t}), {m}) - {t}
    return req
