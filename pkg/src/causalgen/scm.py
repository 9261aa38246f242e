"""Binary SCMs: a DAG plus one conditional probability table per node.

Probabilities are exact decimals stored as integer mantissas at a per-model
precision of 1-4 places, so rendered text reproduces the sampled values
digit for digit.  ``to_response_model`` exposes the exogenous view used for
counterfactuals: each node gets one discrete response variable whose states
are functions from parent assignments to {0,1}; the product-of-rows state
distribution is equivalent to independent per-row selector variables.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import product

from causalgen.graphs import Dag

PRECISIONS = (1, 2, 3, 4)


@dataclass(frozen=True)
class Cpt:
    """Rows give P(node=1 | parent assignment), one row per assignment of the
    (label-sorted) parents in lexicographic order.  Mantissas are integers in
    [0, 10^precision]; sampled tables never touch the endpoints, mutilated
    ones do.
    """

    node: int
    parents: tuple[int, ...]
    rows: tuple[int, ...]
    precision: int

    def __post_init__(self) -> None:
        if len(self.rows) != 1 << len(self.parents):
            raise ValueError("row count must be 2^|parents|")
        scale = 10**self.precision
        for m in self.rows:
            if not 0 <= m <= scale:
                raise ValueError(f"mantissa {m} out of range at precision {self.precision}")

    def p1(self, row_index: int) -> float:
        return self.rows[row_index] / 10**self.precision

    def row_index(self, assignment: dict[int, int]) -> int:
        idx = 0
        for p in self.parents:
            idx = (idx << 1) | assignment[p]
        return idx

    def value_str(self, row_index: int) -> str:
        """Exact decimal string, e.g. mantissa 30 at precision 2 -> "0.30"."""
        scale = 10**self.precision
        return f"{self.rows[row_index] / scale:.{self.precision}f}"


@dataclass(frozen=True)
class Scm:
    dag: Dag
    cpts: tuple[Cpt, ...]
    precision: int

    def __post_init__(self) -> None:
        if len(self.cpts) != self.dag.node_count:
            raise ValueError("need exactly one Cpt per node")
        for v, cpt in enumerate(self.cpts):
            if cpt.node != v:
                raise ValueError("cpts must be indexed by node id")
            if cpt.parents != self.dag.parents(v):
                raise ValueError(f"cpt parents mismatch at node {v}")

    def cpt(self, v: int) -> Cpt:
        return self.cpts[v]

    def to_dict(self, keep: set[int] | None = None) -> dict:
        """Serializable form; `keep` restricts which nodes carry rows."""
        nodes = sorted(keep) if keep is not None else list(self.dag.nodes)
        return {
            "node_count": self.dag.node_count,
            "edges": [list(e) for e in self.dag.edges],
            "precision": self.precision,
            "cpts": {
                str(v): {
                    "parents": list(self.cpts[v].parents),
                    "rows": [self.cpts[v].value_str(i) for i in range(len(self.cpts[v].rows))],
                }
                for v in nodes
            },
        }

    @staticmethod
    def from_dict(data: dict) -> "Scm":
        dag = Dag(data["node_count"], tuple(tuple(e) for e in data["edges"]))
        precision = data["precision"]
        missing = [v for v in dag.nodes if str(v) not in data["cpts"]]
        if missing:
            raise ValueError(f"serialized SCM lacks rows for nodes {missing}")
        cpts = []
        for v in dag.nodes:
            entry = data["cpts"][str(v)]
            rows = tuple(_parse_decimal(s, precision) for s in entry["rows"])
            cpts.append(Cpt(v, tuple(entry["parents"]), rows, precision))
        return Scm(dag, tuple(cpts), precision)


def _parse_decimal(s: str, precision: int) -> int:
    sign, _, frac = s.partition(".")
    if sign not in ("0", "1") or len(frac) > precision:
        raise ValueError(f"bad probability literal {s!r} at precision {precision}")
    frac = frac.ljust(precision, "0")
    return int(sign) * 10**precision + int(frac or "0")


def sample_cpts(dag: Dag, rng: random.Random) -> Scm:
    """Attach sampled tables: precision uniform on {1,2,3,4} per model, each
    row's P(node=1) uniform on the open grid {1..10^d - 1} / 10^d.
    """
    precision = rng.choice(PRECISIONS)
    scale = 10**precision
    cpts = []
    for v in dag.nodes:
        parents = dag.parents(v)
        rows = tuple(rng.randrange(1, scale) for _ in range(1 << len(parents)))
        cpts.append(Cpt(v, parents, rows, precision))
    return Scm(dag, tuple(cpts), precision)


# ---------------------------------------------------------------------------
# response-variable (exogenous) view


@dataclass(frozen=True)
class ResponseModel:
    """Per node: a response variable with 2^(2^k) states for k parents.

    State s maps parent-assignment row r to output bit (s >> r) & 1; its
    probability is the product over rows of p1 or 1-p1 according to that bit.
    Marginalizing the responses reproduces the observational joint exactly.
    """

    scm: Scm
    state_probs: tuple[tuple[float, ...], ...]

    def n_states(self, v: int) -> int:
        return len(self.state_probs[v])

    @staticmethod
    def output(state: int, row_index: int) -> int:
        return (state >> row_index) & 1


def response_state_probs(cpt: Cpt) -> tuple[float, ...]:
    n_rows = len(cpt.rows)
    probs = []
    for state in range(1 << n_rows):
        p = 1.0
        for r in range(n_rows):
            p1 = cpt.p1(r)
            p *= p1 if (state >> r) & 1 else 1.0 - p1
        probs.append(p)
    return tuple(probs)


def to_response_model(scm: Scm) -> ResponseModel:
    return ResponseModel(scm, tuple(response_state_probs(c) for c in scm.cpts))


def enumerate_joint(scm: Scm) -> dict[tuple[int, ...], float]:
    """Brute-force observational joint over all 2^n assignments."""
    joint = {}
    for values in product((0, 1), repeat=scm.dag.node_count):
        p = 1.0
        for v in scm.dag.nodes:
            cpt = scm.cpts[v]
            p1 = cpt.p1(cpt.row_index({q: values[q] for q in cpt.parents}))
            p *= p1 if values[v] else 1.0 - p1
        joint[values] = p
    return joint
