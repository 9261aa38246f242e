"""Symbolic text rendering with graph/query verbalization variants.

Three graph styles (edge list, direct-cause sentences, parent-set
description) and three query styles per type are sampled independently.
Templates live in ``data/symbolic_templates.json``; the same templates drive
both rendering and the round-trip parser (slots become named regex groups),
so every rendered instance can be machine-recovered.
"""

from __future__ import annotations

import json
import random
import re
from dataclasses import dataclass
from importlib import resources

from causalgen.graphs import Dag
from causalgen.queries import GRAPH_ONLY, QuerySpec
from causalgen.scm import Scm

GRAPH_STYLES = ("edge_list", "direct_cause_sentences", "parent_set_description")
QUERY_STYLES = ("named_query", "probability_paraphrase", "natural_operation_phrase")

COUNTERFACTUAL_FAMILY = frozenset({"CF", "ATT", "NIE", "NDE", "PN", "PS"})


def _load_templates() -> dict:
    path = resources.files("causalgen").joinpath("data/symbolic_templates.json")
    return json.loads(path.read_text(encoding="utf-8"))


TEMPLATES = _load_templates()


@dataclass(frozen=True)
class SymbolicVariant:
    graph_style: str
    query_style: str

    def to_dict(self) -> dict:
        return {"graph_style": self.graph_style, "query_style": self.query_style}


def sample_variant(rng: random.Random) -> SymbolicVariant:
    return SymbolicVariant(rng.choice(GRAPH_STYLES), rng.choice(QUERY_STYLES))


def node_name(v: int) -> str:
    return f"X{v}"


def _node_id(name: str) -> int:
    return int(name[1:])


# ---------------------------------------------------------------------------
# graph block


def render_graph(dag: Dag, style: str) -> str:
    if style == "edge_list":
        return ", ".join(f"{node_name(a)} -> {node_name(b)}" for a, b in dag.edges)
    if style == "direct_cause_sentences":
        return " ".join(
            f"{node_name(a)} directly causes {node_name(b)}." for a, b in dag.edges
        )
    if style == "parent_set_description":
        parts = []
        for v in dag.nodes:
            ps = dag.parents(v)
            if not ps:
                parts.append(f"{node_name(v)} has no direct causes.")
            elif len(ps) == 1:
                parts.append(f"{node_name(v)} has direct cause {node_name(ps[0])}.")
            else:
                names = " and ".join(node_name(p) for p in ps)
                parts.append(f"{node_name(v)} has direct causes {names}.")
        return " ".join(parts)
    raise ValueError(f"unknown graph style {style}")


def parse_graph(block: str, style: str) -> tuple[tuple[int, int], ...]:
    edges: list[tuple[int, int]] = []
    if style == "edge_list":
        for part in block.split(", "):
            a, b = part.split(" -> ")
            edges.append((_node_id(a), _node_id(b)))
    elif style == "direct_cause_sentences":
        for m in re.finditer(r"(X\d+) directly causes (X\d+)\.", block):
            edges.append((_node_id(m.group(1)), _node_id(m.group(2))))
    elif style == "parent_set_description":
        for m in re.finditer(r"(X\d+) has direct causes? ((?:X\d+)(?: and X\d+)*)\.", block):
            child = _node_id(m.group(1))
            for p in m.group(2).split(" and "):
                edges.append((_node_id(p), child))
    else:
        raise ValueError(f"unknown graph style {style}")
    return tuple(sorted(edges))


# ---------------------------------------------------------------------------
# probability conditions block (fixed layout, topological order)


def render_conditions(scm: Scm, retained: set[int]) -> str:
    order = scm.dag.topological_order()
    assert order is not None
    lines = []
    for v in order:
        if v not in retained:
            continue
        cpt = scm.cpts[v]
        if not cpt.parents:
            lines.append(f"P({node_name(v)} = 1) = {cpt.value_str(0)}")
            continue
        parent_names = ", ".join(node_name(p) for p in cpt.parents)
        lines.append(f"P({node_name(v)} = 1 | {parent_names}):")
        for row in range(len(cpt.rows)):
            bits = format(row, f"0{len(cpt.parents)}b")
            cells = ", ".join(
                f"{node_name(p)}={bits[i]}" for i, p in enumerate(cpt.parents)
            )
            lines.append(f"  {cells}: {cpt.value_str(row)}")
    return "\n".join(lines)


def parse_conditions(block: str) -> dict[int, dict]:
    """Recover {node: {"parents": tuple, "rows": [value strings]}}."""
    out: dict[int, dict] = {}
    current: int | None = None
    for line in block.splitlines():
        root = re.fullmatch(r"P\((X\d+) = 1\) = ([0-9.]+)", line)
        if root:
            out[_node_id(root.group(1))] = {"parents": (), "rows": [root.group(2)]}
            current = None
            continue
        head = re.fullmatch(r"P\((X\d+) = 1 \| ((?:X\d+)(?:, X\d+)*)\):", line)
        if head:
            current = _node_id(head.group(1))
            parents = tuple(_node_id(p) for p in head.group(2).split(", "))
            out[current] = {"parents": parents, "rows": []}
            continue
        row = re.fullmatch(r"  (?:X\d+=[01](?:, )?)+: ([0-9.]+)", line)
        if row and current is not None:
            out[current]["rows"].append(row.group(1))
    return out


# ---------------------------------------------------------------------------
# query sentence


_SLOT_PATTERNS = {
    "outcome": r"X\d+",
    "subject": r"X\d+",
    "treatment": r"X\d+",
    "mediator": r"X\d+",
    "t1": r"X\d+",
    "t2": r"X\d+",
    "y": r"[01]",
    "x": r"[01]",
    "a1": r"[01]",
    "a2": r"[01]",
    "b1": r"[01]",
    "b2": r"[01]",
    "evidence": r"X\d+ = [01](?: and X\d+ = [01])*",
    "coassign": r"X\d+ = [01](?: and X\d+ = [01])*",
    "cset": r"\{(?:X\d+(?:, X\d+)*)?\}",
    "latents": r"X\d+(?: and X\d+)*",
    "zclause": r"(?: given X\d+(?: and X\d+)*)?",
}


def _assign_text(pairs) -> str:
    return " and ".join(f"{node_name(n)} = {v}" for n, v in pairs)


def _set_text(nodes) -> str:
    return "{" + ", ".join(node_name(v) for v in nodes) + "}"


def query_slots(query: QuerySpec) -> dict[str, str]:
    qt = query.query_type
    slots: dict[str, str] = {}
    if query.outcome is not None:
        slots["outcome"] = node_name(query.outcome)
    if query.target_value is not None:
        slots["y"] = str(query.target_value)
    if query.subject is not None:
        slots["subject"] = node_name(query.subject)
    if query.mediator is not None:
        slots["mediator"] = node_name(query.mediator)
    if query.treatments:
        slots["treatment"] = node_name(query.treatments[0])
    if query.evidence:
        slots["evidence"] = _assign_text(query.evidence)
    if query.co_targets:
        slots["coassign"] = _assign_text(query.co_targets)
    if qt == "IT":
        slots["zclause"] = (
            " given " + " and ".join(node_name(v) for v in query.candidate_set)
            if query.candidate_set
            else ""
        )
    if qt in ("MB", "BD", "FD"):
        slots["cset"] = _set_text(query.candidate_set)
    if query.latent_set:
        slots["latents"] = " and ".join(node_name(v) for v in query.latent_set)
    if qt == "JTE":
        slots["t1"] = node_name(query.treatments[0])
        slots["t2"] = node_name(query.treatments[1])
        slots["a1"], slots["a2"] = (str(v) for v in query.treatment_values)
        slots["b1"], slots["b2"] = (str(v) for v in query.setting_b)
    if qt == "CF":
        slots["x"] = str(query.treatment_values[0])
    return slots


def _fill(template: str, slots: dict[str, str]) -> str:
    def sub(m: re.Match) -> str:
        return slots[m.group(1)]

    return re.sub(r"\{(\w+)\}", sub, template)


def _template_regex(template: str) -> re.Pattern:
    parts = re.split(r"(\{\w+\})", template)
    pattern = ""
    seen: set[str] = set()
    for part in parts:
        m = re.fullmatch(r"\{(\w+)\}", part)
        if m:
            name = m.group(1)
            if name in seen:
                pattern += f"(?P={name})"
            else:
                seen.add(name)
                pattern += f"(?P<{name}>{_SLOT_PATTERNS[name]})"
        else:
            pattern += re.escape(part)
    return re.compile(pattern)


def render_query(query: QuerySpec, style: str) -> str:
    template = TEMPLATES["queries"][query.query_type][style]
    return _fill(template, query_slots(query))


def _parse_assign(text: str) -> tuple[tuple[int, int], ...]:
    return tuple(
        (_node_id(m.group(1)), int(m.group(2)))
        for m in re.finditer(r"(X\d+) = ([01])", text)
    )


def _spec_from_captures(qt: str, g: dict[str, str]) -> QuerySpec:
    if qt == "MP":
        return QuerySpec(qt, outcome=_node_id(g["outcome"]), target_value=int(g["y"]))
    if qt == "CP":
        return QuerySpec(
            qt,
            outcome=_node_id(g["outcome"]),
            target_value=int(g["y"]),
            evidence=_parse_assign(g["evidence"]),
        )
    if qt == "JP":
        return QuerySpec(
            qt,
            outcome=_node_id(g["outcome"]),
            target_value=int(g["y"]),
            co_targets=_parse_assign(g["coassign"]),
        )
    if qt == "OD":
        return QuerySpec(qt, outcome=_node_id(g["outcome"]), subject=_node_id(g["subject"]))
    if qt == "IT":
        z = tuple(
            sorted(_node_id(n) for n in re.findall(r"X\d+", g.get("zclause") or ""))
        )
        return QuerySpec(
            qt, subject=_node_id(g["subject"]), outcome=_node_id(g["outcome"]), candidate_set=z
        )
    if qt == "MB":
        cset = tuple(sorted(_node_id(n) for n in re.findall(r"X\d+", g["cset"])))
        return QuerySpec(qt, subject=_node_id(g["subject"]), candidate_set=cset)
    if qt == "ATE":
        return QuerySpec(
            qt, outcome=_node_id(g["outcome"]), target_value=1, treatments=(_node_id(g["treatment"]),)
        )
    if qt == "CTE":
        return QuerySpec(
            qt,
            outcome=_node_id(g["outcome"]),
            target_value=1,
            treatments=(_node_id(g["treatment"]),),
            evidence=_parse_assign(g["evidence"]),
        )
    if qt == "JTE":
        return QuerySpec(
            qt,
            outcome=_node_id(g["outcome"]),
            target_value=1,
            treatments=(_node_id(g["t1"]), _node_id(g["t2"])),
            treatment_values=(int(g["a1"]), int(g["a2"])),
            setting_b=(int(g["b1"]), int(g["b2"])),
        )
    if qt in ("ID", "FD"):
        latents = tuple(sorted(_node_id(n) for n in g["latents"].split(" and ")))
        kwargs = dict(
            outcome=_node_id(g["outcome"]),
            treatments=(_node_id(g["treatment"]),),
            latent_set=latents,
        )
        if qt == "FD":
            kwargs["candidate_set"] = tuple(
                sorted(_node_id(n) for n in re.findall(r"X\d+", g["cset"]))
            )
        return QuerySpec(qt, **kwargs)
    if qt == "BD":
        cset = tuple(sorted(_node_id(n) for n in re.findall(r"X\d+", g["cset"])))
        return QuerySpec(
            qt, outcome=_node_id(g["outcome"]), treatments=(_node_id(g["treatment"]),), candidate_set=cset
        )
    if qt == "CF":
        return QuerySpec(
            qt,
            outcome=_node_id(g["outcome"]),
            target_value=int(g["y"]),
            treatments=(_node_id(g["treatment"]),),
            treatment_values=(int(g["x"]),),
            evidence=_parse_assign(g["evidence"]),
            retrospection=True,
        )
    if qt in ("ATT", "PN", "PS"):
        return QuerySpec(
            qt,
            outcome=_node_id(g["outcome"]),
            target_value=1,
            treatments=(_node_id(g["treatment"]),),
            retrospection=True,
        )
    if qt in ("NDE", "NIE"):
        return QuerySpec(
            qt,
            outcome=_node_id(g["outcome"]),
            target_value=1,
            treatments=(_node_id(g["treatment"]),),
            mediator=_node_id(g["mediator"]),
            retrospection=True,
        )
    raise ValueError(qt)


# ---------------------------------------------------------------------------
# whole-question rendering


def render_symbolic(
    scm: Scm, query: QuerySpec, retained: set[int], variant: SymbolicVariant
) -> str:
    """Deterministic symbolic question text.

    Pruned instances render only the retained probability rows; graph-only
    queries carry no probability block at all; counterfactual types include
    the exogenous-noise assumption sentence.
    """
    dag = scm.dag
    node_list = ", ".join(node_name(v) for v in dag.nodes)
    parts = [
        TEMPLATES["preamble"],
        _fill(TEMPLATES["graph_intro"], {"node_list": node_list}),
        render_graph(dag, variant.graph_style),
    ]
    if query.query_type not in GRAPH_ONLY:
        parts.append("")
        parts.append(TEMPLATES["conditions_intro"])
        parts.append(render_conditions(scm, retained))
    if query.query_type in COUNTERFACTUAL_FAMILY:
        parts.append("")
        parts.append(TEMPLATES["noise_assumption"])
    parts.append("")
    parts.append(render_query(query, variant.query_style))
    return "\n".join(parts)


@dataclass
class ParsedSymbolic:
    edges: tuple[tuple[int, int], ...]
    conditions: dict[int, dict]
    query: QuerySpec
    variant: SymbolicVariant


_QUERY_REGEXES: dict[tuple[str, str], re.Pattern] = {
    (qt, style): _template_regex(t)
    for qt, styles in TEMPLATES["queries"].items()
    for style, t in styles.items()
}


def parse_symbolic(text: str) -> ParsedSymbolic:
    """Recover edges, retained rows, and query roles from rendered text."""
    lines = text.splitlines()
    if lines[0] != TEMPLATES["preamble"]:
        raise ValueError("missing preamble")
    graph_block = lines[2]
    style = None
    edges: tuple[tuple[int, int], ...] = ()
    for candidate in GRAPH_STYLES:
        try:
            parsed = parse_graph(graph_block, candidate)
        except Exception:
            continue
        if parsed:
            style, edges = candidate, parsed
            break
    if style is None:
        raise ValueError("unparseable graph block")
    conditions = parse_conditions(text)
    sentence = lines[-1]
    for (qt, qstyle), regex in _QUERY_REGEXES.items():
        m = regex.fullmatch(sentence)
        if m:
            return ParsedSymbolic(
                edges=edges,
                conditions=conditions,
                query=_spec_from_captures(qt, m.groupdict()),
                variant=SymbolicVariant(style, qstyle),
            )
    raise ValueError(f"unparseable query sentence: {sentence!r}")
