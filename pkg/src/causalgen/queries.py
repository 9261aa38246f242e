"""Query catalog: role sampling, abnormality rejection, naivety, ground truth.

Eighteen query types span the three causal levels; five of them are
graph-only binary judgments, the other thirteen ask for probabilities or
expectation contrasts.  ``sample_query`` draws operation nodes and roles
uniformly among admissible candidates, rejecting abnormal (structurally
trivial) combinations.  ``is_naive`` flags questions answerable by a
degraded lower-level calculation; ``generate_instances`` enforces per-type
naive-ratio caps with a streaming gate and applies condition pruning.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

from causalgen.engine import (
    backdoor_ok,
    counterfactual_query,
    d_separated,
    frontdoor_ok,
    interventional_query,
    joint_query,
    markov_blanket,
    nested_counterfactual,
    requisite_counterfactual,
    requisite_interventional,
    requisite_nested,
    requisite_observational,
)
from causalgen.graphs import Dag
from causalgen.identify import identifiable
from causalgen.rng import derive_rng, derive_seed
from causalgen.scm import Scm, sample_cpts

ASSOCIATION = ("MP", "CP", "JP", "OD", "IT", "MB")
INTERVENTION = ("ATE", "CTE", "JTE", "ID", "FD", "BD")
COUNTERFACTUAL = ("CF", "ATT", "NIE", "NDE", "PN", "PS")
QUERY_TYPES = ASSOCIATION + INTERVENTION + COUNTERFACTUAL

GRAPH_ONLY = frozenset({"IT", "MB", "ID", "FD", "BD"})
PROBABILISTIC = tuple(t for t in QUERY_TYPES if t not in GRAPH_ONLY)
NAIVETY_TRACKED = frozenset(INTERVENTION) | frozenset(COUNTERFACTUAL)

# after-control naive-ratio caps per capped type; NDE/NIE stay uncapped but
# tracked, PN/PS are structurally never naive
DEFAULT_NAIVE_CAPS: dict[str, float | None] = {
    "ATE": 0.392,
    "CTE": 0.360,
    "JTE": 0.329,
    "ID": 0.233,
    "BD": 0.283,
    "FD": 0.267,
    "CF": 0.266,
    "ATT": 0.368,
    "NIE": None,
    "NDE": None,
    "PN": None,
    "PS": None,
}

SAMPLE_BUDGET = 200


class QueryUnsupportedError(ValueError):
    """No admissible role assignment exists on this graph."""


class NaivetyUndefinedError(ValueError):
    """Naivety is not defined for association queries."""


@dataclass(frozen=True)
class QuerySpec:
    query_type: str
    outcome: int | None = None
    target_value: int | None = None
    treatments: tuple[int, ...] = ()
    treatment_values: tuple[int, ...] = ()
    setting_b: tuple[int, ...] = ()
    evidence: tuple[tuple[int, int], ...] = ()
    mediator: int | None = None
    subject: int | None = None
    co_targets: tuple[tuple[int, int], ...] = ()
    candidate_set: tuple[int, ...] = ()
    latent_set: tuple[int, ...] = ()
    retrospection: bool = False

    def __post_init__(self) -> None:
        if self.query_type not in QUERY_TYPES:
            raise ValueError(f"unknown query type {self.query_type}")
        if self.outcome is not None and self.outcome in self.treatments:
            raise ValueError("treatment and outcome must differ")
        if self.mediator is not None and (
            self.mediator == self.outcome or self.mediator in self.treatments
        ):
            raise ValueError("mediator must differ from treatment and outcome")

    @property
    def evidence_map(self) -> dict[int, int]:
        return dict(self.evidence)

    def to_dict(self) -> dict:
        out: dict = {"query_type": self.query_type}
        for key in ("outcome", "target_value", "mediator", "subject"):
            val = getattr(self, key)
            if val is not None:
                out[key] = val
        if self.retrospection:
            out["retrospection"] = True
        for key in (
            "treatments",
            "treatment_values",
            "setting_b",
            "candidate_set",
            "latent_set",
        ):
            val = getattr(self, key)
            if val:
                out[key] = list(val)
        if self.evidence:
            out["evidence"] = [list(e) for e in self.evidence]
        if self.co_targets:
            out["co_targets"] = [list(e) for e in self.co_targets]
        return out

    @staticmethod
    def from_dict(data: dict) -> "QuerySpec":
        kwargs: dict = {"query_type": data["query_type"]}
        for key in ("outcome", "target_value", "mediator", "subject", "retrospection"):
            if key in data:
                kwargs[key] = data[key]
        for key in (
            "treatments",
            "treatment_values",
            "setting_b",
            "candidate_set",
            "latent_set",
        ):
            if key in data:
                kwargs[key] = tuple(data[key])
        if "evidence" in data:
            kwargs["evidence"] = tuple(tuple(e) for e in data["evidence"])
        if "co_targets" in data:
            kwargs["co_targets"] = tuple(tuple(e) for e in data["co_targets"])
        return QuerySpec(**kwargs)


@dataclass(frozen=True)
class GroundTruth:
    kind: str  # "numeric" | "boolean"
    value: float | bool

    def answer_text(self) -> str:
        if self.kind == "boolean":
            return "yes" if self.value else "no"
        return f"{self.value:.4f}"


@dataclass
class QualityFlags:
    naive: bool = False
    pruned: bool = False
    abnormal_rejections: int = 0


def round4(x: float) -> float:
    """Half-up (away from zero on ties) to 4 decimals, applied only at the
    answer boundary.
    """
    return float(Decimal(repr(x)).quantize(Decimal("0.0001"), rounding=ROUND_HALF_UP))


# ---------------------------------------------------------------------------
# role sampling


def _connected_pairs(dag: Dag) -> list[tuple[int, int]]:
    out = []
    for a in dag.nodes:
        for b in dag.nodes:
            if a != b and not d_separated(dag, {a}, {b}, set()):
                out.append((a, b))
    return out


def _directed_pairs(dag: Dag) -> list[tuple[int, int]]:
    return [
        (t, y)
        for t in dag.nodes
        for y in dag.nodes
        if t != y and dag.has_directed_path(t, y)
    ]


def _latent_candidates(dag: Dag) -> list[int]:
    return [v for v in dag.nodes if len(dag.children(v)) >= 2]


def sample_query(
    scm: Scm,
    query_type: str,
    rng: random.Random,
    desired_label: bool | None = None,
    budget: int = SAMPLE_BUDGET,
) -> tuple[QuerySpec, int]:
    """Draw roles for `query_type`, rejecting abnormal assignments; returns
    the role assignment plus the number of rejected draws.  For graph-only types,
    `desired_label` retries until the yes/no answer matches (label
    balancing); exhausting the budget raises QueryUnsupportedError and the
    caller moves to another graph.
    """
    rejections = 0
    for _ in range(budget):
        spec = _draw_roles(scm, query_type, rng)
        if spec is None:
            rejections += 1
            continue
        if desired_label is not None and query_type in GRAPH_ONLY:
            if bool(ground_truth(scm, spec).value) != desired_label:
                rejections += 1
                continue
        return spec, rejections
    raise QueryUnsupportedError(f"{query_type} unsupported on this graph")


def _draw_roles(scm: Scm, qt: str, rng: random.Random) -> QuerySpec | None:
    dag = scm.dag
    nodes = list(dag.nodes)
    if qt == "MP":
        candidates = [v for v in nodes if dag.ancestors(v)]
        if not candidates:
            raise QueryUnsupportedError("every node is a root")
        return QuerySpec(qt, outcome=rng.choice(candidates), target_value=rng.randint(0, 1))
    if qt in ("CP", "JP", "OD"):
        pairs = _connected_pairs(dag)
        if not pairs:
            raise QueryUnsupportedError("no d-connected pair")
        x, y = rng.choice(pairs)
        if qt == "CP":
            return QuerySpec(
                qt,
                outcome=y,
                target_value=rng.randint(0, 1),
                evidence=((x, rng.randint(0, 1)),),
            )
        if qt == "JP":
            return QuerySpec(
                qt,
                outcome=y,
                target_value=rng.randint(0, 1),
                co_targets=((x, rng.randint(0, 1)),),
            )
        return QuerySpec(qt, outcome=y, subject=x)
    if qt == "IT":
        a, b = rng.sample(nodes, 2)
        rest = [v for v in nodes if v not in (a, b)]
        z = tuple(sorted(rng.sample(rest, min(rng.randint(0, 2), len(rest)))))
        return QuerySpec(qt, subject=a, outcome=b, candidate_set=z)
    if qt == "MB":
        v = rng.choice(nodes)
        blanket = markov_blanket(dag, v)
        candidate = set(blanket)
        if rng.random() < 0.5:
            # perturb: add or remove one node
            addable = [u for u in nodes if u != v and u not in blanket]
            if blanket and (not addable or rng.random() < 0.5):
                candidate.discard(rng.choice(sorted(blanket)))
            elif addable:
                candidate.add(rng.choice(addable))
            else:
                return None
        return QuerySpec(qt, subject=v, candidate_set=tuple(sorted(candidate)))
    if qt in ("ATE", "ATT", "PN", "PS"):
        pairs = _directed_pairs(dag)
        if not pairs:
            raise QueryUnsupportedError("no treated pair")
        t, y = rng.choice(pairs)
        retro = qt in ("ATT", "PN", "PS")
        return QuerySpec(
            qt, outcome=y, target_value=1, treatments=(t,), retrospection=retro
        )
    if qt == "CTE":
        pairs = _directed_pairs(dag)
        rng.shuffle(pairs)
        for t, y in pairs:
            mutilated = dag.drop_incoming({t})
            cands = [
                e
                for e in nodes
                if e not in (t, y) and not d_separated(mutilated, {e}, {y}, set())
            ]
            if cands:
                e = rng.choice(cands)
                return QuerySpec(
                    qt,
                    outcome=y,
                    target_value=1,
                    treatments=(t,),
                    evidence=((e, rng.randint(0, 1)),),
                )
        raise QueryUnsupportedError("no admissible evidence node")
    if qt == "JTE":
        cands = [
            (t1, t2, y)
            for t1 in nodes
            for t2 in nodes
            for y in nodes
            if t1 < t2
            and y not in (t1, t2)
            and dag.has_directed_path(t1, y)
            and dag.has_directed_path(t2, y)
        ]
        if not cands:
            raise QueryUnsupportedError("no joint treatment pair")
        t1, t2, y = rng.choice(cands)
        settings = [(a, b) for a in (0, 1) for b in (0, 1)]
        first, second = rng.sample(settings, 2)
        return QuerySpec(
            qt,
            outcome=y,
            target_value=1,
            treatments=(t1, t2),
            treatment_values=first,
            setting_b=second,
        )
    if qt in ("ID", "FD"):
        eligible = _latent_candidates(dag)
        if not eligible:
            raise QueryUnsupportedError("no node with >= 2 children to mark latent")
        latents = set(rng.sample(eligible, min(rng.randint(1, 2), len(eligible))))
        obs = [v for v in nodes if v not in latents]
        pairs = [(t, y) for t, y in _directed_pairs(dag) if t in obs and y in obs]
        if not pairs:
            return None
        t, y = rng.choice(pairs)
        if qt == "ID":
            return QuerySpec(qt, outcome=y, treatments=(t,), latent_set=tuple(sorted(latents)))
        rest = [v for v in obs if v not in (t, y)]
        if not rest:
            return None
        m = tuple(sorted(rng.sample(rest, min(rng.randint(1, 2), len(rest)))))
        return QuerySpec(
            qt, outcome=y, treatments=(t,), candidate_set=m, latent_set=tuple(sorted(latents))
        )
    if qt == "BD":
        pairs = _directed_pairs(dag)
        if not pairs:
            raise QueryUnsupportedError("no treated pair")
        t, y = rng.choice(pairs)
        rest = [v for v in nodes if v not in (t, y)]
        z = tuple(sorted(rng.sample(rest, min(rng.randint(0, 2), len(rest)))))
        return QuerySpec(qt, outcome=y, treatments=(t,), candidate_set=z)
    if qt == "CF":
        pairs = _directed_pairs(dag)
        if not pairs:
            raise QueryUnsupportedError("no treated pair")
        t, y = rng.choice(pairs)
        rest = [v for v in nodes if v not in (t, y)]
        if not rest:
            return None
        k = min(rng.randint(1, 2), len(rest))
        ev = tuple(sorted((e, rng.randint(0, 1)) for e in rng.sample(rest, k)))
        return QuerySpec(
            qt,
            outcome=y,
            target_value=rng.randint(0, 1),
            treatments=(t,),
            treatment_values=(rng.randint(0, 1),),
            evidence=ev,
            retrospection=True,
        )
    if qt in ("NDE", "NIE"):
        cands = []
        for t in nodes:
            for m in dag.children(t):
                for y in dag.children(m):
                    if len({t, m, y}) != 3:
                        continue
                    # a treatment -> outcome route avoiding the mediator
                    rest = set(nodes) - {m}
                    trimmed = dag.induced(rest)
                    remap = {v: i for i, v in enumerate(sorted(rest))}
                    if trimmed.has_directed_path(remap[t], remap[y]):
                        cands.append((t, m, y))
        if not cands:
            raise QueryUnsupportedError("no mediation triple")
        t, m, y = rng.choice(cands)
        return QuerySpec(
            qt, outcome=y, target_value=1, treatments=(t,), mediator=m, retrospection=True
        )
    raise ValueError(f"unknown query type {qt}")


# ---------------------------------------------------------------------------
# causal naivety


def is_naive(dag: Dag, query: QuerySpec) -> bool:
    """Can the question be answered by a degraded lower-level calculation?

    Intervention contrasts: treatments and outcome d-separated given the
    evidence once the treatments' outgoing edges are deleted (the
    action/observation exchange condition).  Counterfactuals: all evidence
    pre-treatment.  Mediation: no mediator-outcome confounding given the
    treatment.  Graph-only intervention judgments use the no-evidence
    exchange condition.
    """
    qt = query.query_type
    if qt not in NAIVETY_TRACKED:
        raise NaivetyUndefinedError(f"naivety undefined for {qt}")
    if qt in ("ATE", "CTE", "JTE", "ATT", "ID", "FD", "BD"):
        # exchange applies per treatment: each one must be separated from the
        # outcome once its own outgoing edges are deleted
        z = {e for e, _ in query.evidence}
        return all(
            d_separated(dag.drop_outgoing({t}), {t}, {query.outcome}, z)
            for t in query.treatments
        )
    if qt in ("CF", "PN", "PS"):
        ev_nodes = {e for e, _ in query.evidence}
        if qt in ("PN", "PS"):
            ev_nodes = {query.treatments[0], query.outcome}
        post = set()
        for t in query.treatments:
            post |= dag.descendants(t)
        return not (ev_nodes & post)
    if qt in ("NDE", "NIE"):
        m, y, t = query.mediator, query.outcome, query.treatments[0]
        trimmed = dag.drop_outgoing({m})
        return d_separated(trimmed, {m}, {y}, {t})
    raise NaivetyUndefinedError(qt)


# ---------------------------------------------------------------------------
# ground truth


def boolean_answer(scm: Scm, query: QuerySpec) -> bool:
    qt = query.query_type
    dag = scm.dag
    y = query.outcome
    if qt == "IT":
        return d_separated(dag, {query.subject}, {y}, set(query.candidate_set))
    if qt == "MB":
        return set(query.candidate_set) == markov_blanket(dag, query.subject)
    t = query.treatments[0]
    if qt == "ID":
        return identifiable(dag, set(query.latent_set), {t}, {y})
    if qt == "FD":
        return frontdoor_ok(dag, t, y, set(query.candidate_set))
    if qt == "BD":
        return backdoor_ok(dag, t, y, set(query.candidate_set))
    raise ValueError(f"{qt} is not a graph-only query type")


def exact_value(scm: Scm, query: QuerySpec) -> float:
    """Unrounded numeric answer for the 13 probabilistic query types."""
    qt = query.query_type
    y, yv = query.outcome, query.target_value
    if qt == "MP":
        return joint_query(scm, {y: yv}, {})
    if qt == "CP":
        return joint_query(scm, {y: yv}, query.evidence_map)
    if qt == "JP":
        return joint_query(scm, {y: yv, **dict(query.co_targets)}, {})
    if qt == "OD":
        x = query.subject
        return joint_query(scm, {y: 1}, {x: 1}) - joint_query(scm, {y: 1}, {x: 0})
    if qt == "ATE":
        t = query.treatments[0]
        return interventional_query(scm, {t: 1}, {y: 1}, {}) - interventional_query(
            scm, {t: 0}, {y: 1}, {}
        )
    if qt == "CTE":
        t = query.treatments[0]
        ev = query.evidence_map
        return interventional_query(scm, {t: 1}, {y: 1}, ev) - interventional_query(
            scm, {t: 0}, {y: 1}, ev
        )
    if qt == "JTE":
        do_a = dict(zip(query.treatments, query.treatment_values))
        do_b = dict(zip(query.treatments, query.setting_b))
        return interventional_query(scm, do_a, {y: 1}, {}) - interventional_query(
            scm, do_b, {y: 1}, {}
        )
    if qt == "CF":
        do = dict(zip(query.treatments, query.treatment_values))
        return counterfactual_query(scm, do, {y: yv}, query.evidence_map)
    if qt == "ATT":
        x = query.treatments[0]
        return joint_query(scm, {y: 1}, {x: 1}) - counterfactual_query(
            scm, {x: 0}, {y: 1}, {x: 1}
        )
    if qt == "NDE":
        t, m = query.treatments[0], query.mediator
        return nested_counterfactual(scm, t, m, y, 1, 0) - nested_counterfactual(
            scm, t, m, y, 0, 0
        )
    if qt == "NIE":
        t, m = query.treatments[0], query.mediator
        return nested_counterfactual(scm, t, m, y, 0, 1) - nested_counterfactual(
            scm, t, m, y, 0, 0
        )
    if qt == "PN":
        x = query.treatments[0]
        return counterfactual_query(scm, {x: 0}, {y: 0}, {x: 1, y: 1})
    if qt == "PS":
        x = query.treatments[0]
        return counterfactual_query(scm, {x: 1}, {y: 1}, {x: 0, y: 0})
    raise ValueError(f"{qt} has no numeric value")


def ground_truth(scm: Scm, query: QuerySpec) -> GroundTruth:
    """Dispatch to the exact solvers; numeric answers are rounded half-up to
    4 decimals at this boundary only.
    """
    if query.query_type in GRAPH_ONLY:
        return GroundTruth("boolean", boolean_answer(scm, query))
    return GroundTruth("numeric", round4(exact_value(scm, query)))


# ---------------------------------------------------------------------------
# requisite probability nodes


def requisite_nodes(scm: Scm, query: QuerySpec) -> set[int]:
    """Minimal node set whose CPTs suffice to answer the query exactly
    (barren-node removal on the query's world graphs; intervened mechanisms
    are never requisite).
    """
    qt = query.query_type
    dag = scm.dag
    y = query.outcome
    if qt in GRAPH_ONLY:
        return set()
    if qt == "MP":
        return requisite_observational(dag, {y})
    if qt in ("CP", "OD"):
        other = query.subject if qt == "OD" else next(iter(query.evidence_map))
        return requisite_observational(dag, {y, other})
    if qt == "JP":
        return requisite_observational(dag, {y, *dict(query.co_targets)})
    if qt in ("ATE", "CTE", "JTE"):
        ts = set(query.treatments)
        targets = {y} | {e for e, _ in query.evidence}
        return requisite_interventional(dag, ts, targets)
    if qt == "CF":
        ts = set(query.treatments)
        return requisite_counterfactual(dag, ts, {y}, {e for e, _ in query.evidence})
    if qt == "ATT":
        x = query.treatments[0]
        return requisite_counterfactual(dag, {x}, {y}, {x}) | requisite_observational(
            dag, {x, y}
        )
    if qt in ("PN", "PS"):
        x = query.treatments[0]
        return requisite_counterfactual(dag, {x}, {y}, {x, y})
    if qt in ("NDE", "NIE"):
        return requisite_nested(dag, query.treatments[0], query.mediator, y)
    raise ValueError(f"unknown query type {qt}")


# ---------------------------------------------------------------------------
# instance generation


@dataclass
class GeneratedItem:
    scm: Scm
    query: QuerySpec
    truth: GroundTruth
    flags: QualityFlags
    seed: int
    graph_index: int
    retained: set[int]


class GenerationShortfall(RuntimeError):
    pass


def generate_instances(
    pool_dags: list,
    query_type: str,
    count: int,
    seed: int,
    naive_cap: float | None = None,
    prune_prob: float = 0.5,
    attempt_factor: int = 200,
):
    """Yield `count` accepted items of one query type.

    A sampled naive query is rejected whenever accepting it would push the
    type's running naive fraction above the cap.  Graph-only types target a
    50/50 yes balance by steering each attempt toward the lagging label.
    Instances are derived from (seed, attempt counter) so regeneration is
    exact.
    """
    produced = 0
    naive_accepted = 0
    yes_accepted = 0
    attempt = 0
    max_attempts = max(count * attempt_factor, 1000)
    while produced < count:
        if attempt >= max_attempts:
            raise GenerationShortfall(
                f"{query_type}: produced {produced}/{count} after {attempt} attempts"
            )
        inst_rng = derive_rng(seed, query_type, attempt)
        attempt += 1
        graph_index = inst_rng.randrange(len(pool_dags))
        dag = pool_dags[graph_index]
        scm = sample_cpts(dag, inst_rng)
        desired = None
        if query_type in GRAPH_ONLY:
            desired = yes_accepted * 2 <= produced
        try:
            query, rejections = sample_query(scm, query_type, inst_rng, desired)
        except QueryUnsupportedError:
            continue
        naive = False
        if query_type in NAIVETY_TRACKED:
            naive = is_naive(dag, query)
            if naive and naive_cap is not None:
                if (naive_accepted + 1) / (produced + 1) > naive_cap:
                    continue
        truth = ground_truth(scm, query)
        pruned = query_type not in GRAPH_ONLY and inst_rng.random() < prune_prob
        retained = requisite_nodes(scm, query) if pruned else set(dag.nodes)
        flags = QualityFlags(naive=naive, pruned=pruned, abnormal_rejections=rejections)
        if naive:
            naive_accepted += 1
        if truth.kind == "boolean" and truth.value:
            yes_accepted += 1
        produced += 1
        yield GeneratedItem(
            scm=scm,
            query=query,
            truth=truth,
            flags=flags,
            seed=derive_seed(seed, query_type, attempt - 1),
            graph_index=graph_index,
            retained=retained,
        )
