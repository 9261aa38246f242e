"""Natural-language rendering through a two-prompt chat pipeline.

A first prompt grounds the graph in a reference passage by mapping every
node to a real-world entity with interpretations for its binary values
(long instances split this into two calls); a second prompt rewrites the
symbolic question as a self-contained narrative.  Strict validators reject
outputs with symbolic-token leakage or missing probability values.  All
gateway traffic is cached by request digest, and a stub mode replays canned
replies from a fixture file so the whole pipeline runs offline.
"""

from __future__ import annotations

import hashlib
import json
import os
import re
import time
from dataclasses import dataclass, field
from decimal import Decimal
from importlib import resources
from pathlib import Path

import requests

from causalgen.queries import GRAPH_ONLY, QuerySpec
from causalgen.scm import Scm
from causalgen.symbolic import (
    TEMPLATES,
    SymbolicVariant,
    node_name,
    render_conditions,
    render_graph,
    render_symbolic,
)

LONG_INSTANCE_NODES = 8
DEFAULT_NARRATE_RETRIES = 3

LEAK_PATTERNS = (
    re.compile(r"\b[A-Z]\d+\b"),
    re.compile(r"\b(?:var|func|arg|latent)_\d+\b"),
    re.compile(r"\bSELECTOR_KEYS\w*\b"),
)


class GatewayError(RuntimeError):
    pass


class TranslationFailure(RuntimeError):
    """The gateway kept returning unusable replies for this instance."""


@dataclass(frozen=True)
class Passage:
    id: str
    source: str
    text: str


def load_passages(path: Path) -> list[Passage]:
    """Line-delimited JSON: {"id": ..., "source": ..., "text": ...}."""
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            if not rec.get("text"):
                raise ValueError("passage text must be nonempty")
            out.append(Passage(str(rec["id"]), rec.get("source", ""), rec["text"]))
    return out


@dataclass(frozen=True)
class EntityMap:
    """Per node: entity name plus interpretations of 0 and 1, in topological
    order.
    """

    entries: tuple[tuple[int, str, str, str], ...]

    def to_prompt_json(self) -> str:
        obj = {
            node_name(v): {"entity": entity, "0": zero, "1": one}
            for v, entity, zero, one in self.entries
        }
        return json.dumps(obj, indent=2)

    def nodes(self) -> list[int]:
        return [v for v, *_ in self.entries]


@dataclass
class NlValidationReport:
    leaked_tokens: list[str] = field(default_factory=list)
    missing_values: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return not self.leaked_tokens and not self.missing_values


@dataclass
class GatewayConfig:
    endpoint: str = "https://api.openai.com/v1/chat/completions"
    model: str = "gpt-4o-mini"
    credential_env: str = "CAUSALGEN_API_KEY"
    timeout: float = 60.0
    max_retries: int = 4
    backoff: float = 1.0
    cache_dir: Path | None = None
    stub_path: Path | None = None
    temperature: float = 0.7


def _prompt(name: str) -> str:
    path = resources.files("causalgen").joinpath(f"data/prompts/{name}.txt")
    return path.read_text(encoding="utf-8")


def _canonical_digest(payload: dict, attempt: int) -> str:
    blob = json.dumps(payload, sort_keys=True) + f"#attempt={attempt}"
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()


def _load_stub(path: Path) -> list[dict]:
    return json.loads(path.read_text(encoding="utf-8"))


def gateway_chat(
    config: GatewayConfig, messages: list[dict], attempt: int = 0
) -> str:
    """One chat-completions call: cache lookup, then stub or HTTP with
    bounded exponential-backoff retries.  Replies are cached by the digest
    of (payload, attempt) so reruns are reproducible.
    """
    payload = {
        "model": config.model,
        "messages": messages,
        "temperature": config.temperature,
    }
    digest = _canonical_digest(payload, attempt)
    cache_file = None
    if config.cache_dir is not None:
        config.cache_dir.mkdir(parents=True, exist_ok=True)
        cache_file = config.cache_dir / f"{digest}.json"
        if cache_file.exists():
            return json.loads(cache_file.read_text(encoding="utf-8"))["content"]

    if config.stub_path is not None:
        content = _stub_reply(config, messages)
    else:
        content = _http_chat(config, payload)

    if cache_file is not None:
        tmp = cache_file.with_suffix(".tmp")
        tmp.write_text(json.dumps({"content": content}), encoding="utf-8")
        os.replace(tmp, cache_file)
    return content


def _stub_reply(config: GatewayConfig, messages: list[dict]) -> str:
    text = "\n".join(m["content"] for m in messages)
    for entry in _load_stub(config.stub_path):
        needle = entry.get("contains")
        if needle is None or needle in text:
            return entry["reply"]
    raise GatewayError("no stub reply matches the request")


def _http_chat(config: GatewayConfig, payload: dict) -> str:
    key = os.environ.get(config.credential_env, "")
    headers = {"Authorization": f"Bearer {key}", "Content-Type": "application/json"}
    last_error: Exception | None = None
    for attempt in range(config.max_retries):
        try:
            resp = requests.post(
                config.endpoint, json=payload, headers=headers, timeout=config.timeout
            )
            if resp.status_code == 200:
                try:
                    return resp.json()["choices"][0]["message"]["content"]
                except (KeyError, IndexError, ValueError) as exc:
                    raise GatewayError(f"malformed gateway reply: {exc}") from exc
            if resp.status_code in (429, 500, 502, 503, 504):
                last_error = GatewayError(f"HTTP {resp.status_code}")
            else:
                raise GatewayError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        except requests.RequestException as exc:
            last_error = exc
        time.sleep(config.backoff * 2**attempt)
    raise GatewayError(f"gateway unreachable after retries: {last_error}")


# ---------------------------------------------------------------------------
# prompt assembly


def _conditions_for_prompt(scm: Scm, retained: set[int], counterfactual: bool) -> str:
    text = render_conditions(scm, retained)
    if counterfactual:
        text += "\n" + TEMPLATES["noise_assumption"]
    return text


def _fill_entity_prompt(
    scm: Scm, retained: set[int], passage: Passage, counterfactual: bool
) -> str:
    order = scm.dag.topological_order()
    assert order is not None
    noise = TEMPLATES["noise_assumption"] if counterfactual else ""
    template = _prompt("entity_assignment")
    return (
        template.replace("<node_labels>", ", ".join(node_name(v) for v in scm.dag.nodes))
        .replace("<causal_graph_edges>", render_graph(scm.dag, "edge_list"))
        .replace("<probability_relationships>", render_conditions(scm, retained))
        .replace(
            "<optional_selector_variable_assumption_for_counterfactual_queries>", noise
        )
        .replace("<reference_passage>", passage.text)
        .replace("<first_node>", node_name(order[0]))
        .replace("<last_node>", node_name(order[-1]))
    )


def _parse_json_reply(reply: str) -> dict:
    fenced = re.search(r"```json\s*(.*?)```", reply, re.DOTALL)
    blob = fenced.group(1) if fenced else reply
    start, end = blob.find("{"), blob.rfind("}")
    if start < 0 or end < 0:
        raise ValueError("no JSON object in reply")
    return json.loads(blob[start : end + 1])


def _entity_map_from_reply(scm: Scm, data: dict) -> EntityMap:
    order = scm.dag.topological_order()
    assert order is not None
    entries = []
    for v in order:
        key = node_name(v)
        if key not in data:
            raise ValueError(f"reply missing node {key}")
        entry = data[key]
        entity, zero, one = entry.get("entity"), entry.get("0"), entry.get("1")
        if not entity or not zero or not one or zero == one:
            raise ValueError(f"bad interpretations for {key}")
        entries.append((v, entity, zero, one))
    return EntityMap(tuple(entries))


def assign_entities(
    scm: Scm,
    passage: Passage,
    config: GatewayConfig,
    retained: set[int] | None = None,
    counterfactual: bool = False,
    retries: int = DEFAULT_NARRATE_RETRIES,
) -> EntityMap:
    """Prompt the gateway for a node -> entity mapping grounded in the
    passage; instances with >= 8 nodes use the two-call variant (entities
    first, then value interpretations).
    """
    retained = retained if retained is not None else set(scm.dag.nodes)
    last: Exception | None = None
    for attempt in range(retries):
        try:
            if scm.dag.node_count >= LONG_INSTANCE_NODES:
                reply = _three_step_assign(scm, passage, config, retained, counterfactual, attempt)
            else:
                prompt = _fill_entity_prompt(scm, retained, passage, counterfactual)
                reply = gateway_chat(config, [{"role": "user", "content": prompt}], attempt)
            return _entity_map_from_reply(scm, _parse_json_reply(reply))
        except (ValueError, KeyError) as exc:
            last = exc
    raise TranslationFailure(f"entity assignment failed after {retries} tries: {last}")


def _three_step_assign(
    scm: Scm,
    passage: Passage,
    config: GatewayConfig,
    retained: set[int],
    counterfactual: bool,
    attempt: int,
) -> str:
    order = scm.dag.topological_order()
    assert order is not None
    step1 = (
        _prompt("entity_assignment_step1")
        .replace("<node_labels>", ", ".join(node_name(v) for v in scm.dag.nodes))
        .replace("<causal_graph_edges>", render_graph(scm.dag, "edge_list"))
        .replace("<reference_passage>", passage.text)
        .replace("<first_node>", node_name(order[0]))
        .replace("<last_node>", node_name(order[-1]))
    )
    names_reply = gateway_chat(config, [{"role": "user", "content": step1}], attempt)
    names = _parse_json_reply(names_reply)
    noise = TEMPLATES["noise_assumption"] if counterfactual else ""
    step2 = (
        _prompt("entity_assignment_step2")
        .replace("<node_labels>", ", ".join(node_name(v) for v in scm.dag.nodes))
        .replace("<entity_name_json>", json.dumps(names, indent=2))
        .replace("<causal_graph_edges>", render_graph(scm.dag, "edge_list"))
        .replace("<probability_relationships>", render_conditions(scm, retained))
        .replace(
            "<optional_selector_variable_assumption_for_counterfactual_queries>", noise
        )
        .replace("<first_node>", node_name(order[0]))
        .replace("<last_node>", node_name(order[-1]))
    )
    return gateway_chat(config, [{"role": "user", "content": step2}], attempt)


_SLOT_RE = re.compile(r"<(if_non_full_variant|query_family_suffix): (.*?)>", re.DOTALL)


def _fill_narrative_prompt(symbolic_text: str, entity_map: EntityMap, pruned: bool) -> str:
    template = _prompt("narrative_generation")

    def sub(m: re.Match) -> str:
        if m.group(1) == "if_non_full_variant":
            return m.group(2) if pruned else ""
        return m.group(2)

    filled = _SLOT_RE.sub(sub, template)
    filled = filled.replace("<symbolic_question_text>", symbolic_text)
    filled = filled.replace("<entity_interpretation_json>", entity_map.to_prompt_json())
    return re.sub(r"\n{3,}", "\n\n", filled)


def narrate(
    scm: Scm,
    query: QuerySpec,
    retained: set[int],
    entity_map: EntityMap,
    config: GatewayConfig,
    pruned: bool,
    variant: SymbolicVariant | None = None,
    attempt: int = 0,
) -> str:
    variant = variant or SymbolicVariant("edge_list", "named_query")
    symbolic_text = render_symbolic(scm, query, retained, variant)
    prompt = _fill_narrative_prompt(symbolic_text, entity_map, pruned)
    return gateway_chat(config, [{"role": "user", "content": prompt}], attempt).strip()


# ---------------------------------------------------------------------------
# validators


def _number_forms(text: str) -> tuple[set[Decimal], set[Decimal]]:
    """Decimal and percent-denoted quantities found in the text."""
    percents: set[Decimal] = set()
    for m in re.finditer(r"(\d+(?:\.\d+)?)\s*(?:%|percent)", text):
        percents.add(Decimal(m.group(1)) / 100)
    decimals: set[Decimal] = set()
    for m in re.finditer(r"\d+\.\d+", text):
        decimals.add(Decimal(m.group(0)))
    return decimals, percents


def validate_nl(text: str, scm: Scm, retained: set[int]) -> NlValidationReport:
    """Reject symbolic-token leakage and missing probability values.

    Numeric fidelity is trailing-zero-insensitive for decimals and requires
    exact value*100 for percentages.
    """
    report = NlValidationReport()
    for pattern in LEAK_PATTERNS:
        report.leaked_tokens.extend(pattern.findall(text))
    decimals, percents = _number_forms(text)
    for v in sorted(retained):
        cpt = scm.cpts[v]
        for row in range(len(cpt.rows)):
            value = Decimal(cpt.value_str(row))
            if not any(value == d for d in decimals) and not any(
                value == p for p in percents
            ):
                report.missing_values.append(cpt.value_str(row))
    return report


# ---------------------------------------------------------------------------
# per-instance pipeline


def render_nl_instance(
    scm: Scm,
    query: QuerySpec,
    retained: set[int],
    passage: Passage,
    config: GatewayConfig,
    pruned: bool,
    retries: int = DEFAULT_NARRATE_RETRIES,
) -> tuple[str, EntityMap, NlValidationReport]:
    """Entities, narrative, validation; narrate retries on validator
    rejection until the attempt budget runs out.
    """
    if query.query_type in GRAPH_ONLY:
        raise ValueError(f"{query.query_type} is symbolic-only")
    counterfactual = query.retrospection
    entity_map = assign_entities(
        scm, passage, config, retained, counterfactual, retries
    )
    last_report: NlValidationReport | None = None
    for attempt in range(retries):
        text = narrate(scm, query, retained, entity_map, config, pruned, attempt=attempt)
        report = validate_nl(text, scm, retained)
        if report.passed:
            return text, entity_map, report
        last_report = report
    raise TranslationFailure(
        f"narrative failed validation after {retries} tries: "
        f"leaked={last_report.leaked_tokens[:3]} missing={last_report.missing_values[:3]}"
    )
