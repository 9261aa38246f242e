"""Stochastic-program rendering of probabilistic instances.

Each instance becomes a Python function whose execution follows the causal
graph in topological order, plus a question about its repeated-execution
statistics.  Interventions arrive as function inputs that overwrite the
sampled treatment; evidence conditioning discards runs via a sentinel
return; counterfactual types use a draw-latents / build-factual /
build-counterfactual skeleton with shared selector maps.  Programs are
plain Python 3 with a single injected random stream, fixed bit-exactly by
the instance and style.
"""

from __future__ import annotations

import random
from dataclasses import dataclass
from itertools import product

from causalgen.queries import GRAPH_ONLY, QuerySpec
from causalgen.scm import Scm

CONTROL_FLOWS = ("branching", "table_lookup", "polynomial_expression")
SAMPLING_IDIOMS = ("choices", "threshold")
NAMINGS = ("semantic", "shuffled_generic")

FORWARD_FAMILY = frozenset({"MP", "CP", "JP", "OD", "ATE", "CTE", "JTE"})
LATENT_FAMILY = frozenset({"CF", "ATT", "PN", "PS", "NDE", "NIE"})

CODE_PREAMBLE = (
    "Consider the following python code without using any external "
    "execution environment."
)


class UnsupportedFormError(ValueError):
    """Graph-only query types have no code form."""


@dataclass(frozen=True)
class CodeStyle:
    control_flow: str
    sampling_idiom: str
    naming: str
    structure: str  # single_function | multi_function (= pruned)

    def to_dict(self) -> dict:
        return {
            "control_flow": self.control_flow,
            "sampling_idiom": self.sampling_idiom,
            "naming": self.naming,
            "structure": self.structure,
        }


def sample_code_style(rng: random.Random, pruned: bool) -> CodeStyle:
    return CodeStyle(
        control_flow=rng.choice(CONTROL_FLOWS),
        sampling_idiom=rng.choice(SAMPLING_IDIOMS),
        naming=rng.choice(NAMINGS),
        structure="multi_function" if pruned else "single_function",
    )


@dataclass
class CodeForm:
    program_text: str
    query_text: str
    entry_point: str
    io_contract: str
    node_vars: dict[int, str]
    style: CodeStyle

    def full_text(self) -> str:
        return f"{CODE_PREAMBLE}\n\n{self.program_text}\n\n{self.query_text}"


# ---------------------------------------------------------------------------
# naming


class _Names:
    def __init__(self, scm: Scm, included: list[int], style: CodeStyle, rng: random.Random):
        self.style = style
        n = len(included)
        if style.naming == "semantic":
            self.value = {v: f"x{v}" for v in included}
            self.table = {v: f"table_x{v}" for v in included}
            self.rowp = {v: f"p_x{v}" for v in included}
            self.helper = {v: f"sample_x{v}" for v in included}
            self.latent_ids = None
            self.selector = {v: f"SELECTOR_KEYS_{v}" for v in included}
        else:
            ids = rng.sample(range(4 * n + 8), 4 * n)
            self.value = {v: f"var_{ids[i]}" for i, v in enumerate(included)}
            self.table = {v: f"var_{ids[n + i]}" for i, v in enumerate(included)}
            self.rowp = {v: f"var_{ids[2 * n + i]}" for i, v in enumerate(included)}
            self.helper = {v: f"func_{ids[3 * n + i]}" for i, v in enumerate(included)}
            sel = rng.sample(range(3 * n + 5), n)
            self.selector = {v: f"SELECTOR_KEYS_{sel[i]}" for i, v in enumerate(included)}
            self.latent_ids = None


# ---------------------------------------------------------------------------
# mechanism snippets (forward family)


def _draw_expr(idiom: str, p: str) -> str:
    if idiom == "choices":
        return f"rng.choices([0, 1], weights=[1 - {p}, {p}])[0]"
    return f"1 if rng.random() < {p} else 0"


def _table_literal(scm: Scm, v: int) -> str:
    cpt = scm.cpts[v]
    k = len(cpt.parents)
    if k == 1:
        return "[" + ", ".join(cpt.value_str(i) for i in range(2)) + "]"
    rows = []
    for first in (0, 1):
        inner = ", ".join(cpt.value_str((first << 1) | second) for second in (0, 1))
        rows.append(f"    [{inner}],")
    return "[\n" + "\n".join(rows) + "\n]"


def _row_prob_lines(
    scm: Scm, v: int, names: _Names, style: CodeStyle, indent: str
) -> list[str]:
    """Lines computing the row probability for a node with parents."""
    cpt = scm.cpts[v]
    parents = cpt.parents
    pvar = names.rowp[v]
    pa = [names.value[p] for p in parents]
    if style.control_flow == "table_lookup":
        idx = "".join(f"[{a}]" for a in pa)
        return [f"{indent}{pvar} = {names.table[v]}{idx}"]
    if style.control_flow == "branching":
        lines = []
        combos = list(product((0, 1), repeat=len(parents)))
        for i, combo in enumerate(combos):
            cond = " and ".join(f"{a} == {b}" for a, b in zip(pa, combo))
            kw = "if" if i == 0 else ("elif" if i < len(combos) - 1 else "else")
            if kw == "else":
                lines.append(f"{indent}else:")
            else:
                lines.append(f"{indent}{kw} {cond}:")
            lines.append(f"{indent}    {pvar} = {cpt.value_str(i)}")
        return lines
    # polynomial row selector over parent bits
    terms = []
    for i, combo in enumerate(product((0, 1), repeat=len(parents))):
        factors = [cpt.value_str(i)]
        for a, b in zip(pa, combo):
            factors.append(a if b else f"(1 - {a})")
        terms.append(" * ".join(factors))
    return [f"{indent}{pvar} = " + " + ".join(terms)]


# ---------------------------------------------------------------------------
# forward-family program


def _forward_program(
    scm: Scm,
    query: QuerySpec,
    included: list[int],
    names: _Names,
    style: CodeStyle,
    arg_map: dict[int, str],
) -> str:
    dag = scm.dag
    order = [v for v in dag.topological_order() if v in included]
    sentinel = bool(query.evidence) and query.query_type in ("CP", "CTE")
    needs_optional = sentinel
    lines = ["import random"]
    if needs_optional:
        lines.append("from typing import Optional")
    lines.append("")

    tables: list[str] = []
    if style.control_flow == "table_lookup":
        for v in order:
            if scm.cpts[v].parents and v not in arg_map:
                tables.append(f"{names.table[v]} = {_table_literal(scm, v)}")
    lines.extend(tables)
    if tables:
        lines.append("")

    args = [arg_map[v] for v in sorted(arg_map, key=lambda v: arg_map[v])]
    ret_type = _return_annotation(query, needs_optional)
    helpers: list[str] = []
    body: list[str] = []
    for name in args:
        body.append(f"    if {name} not in (0, 1):")
        body.append(f'        raise ValueError("{name} must be 0 or 1")')
    if args:
        body.append("")

    for v in order:
        cpt = scm.cpts[v]
        var = names.value[v]
        if v in arg_map:
            # sampled, then immediately overwritten by the intervention input
            body.append(f"    {var} = {_draw_expr(style.sampling_idiom, '0.5')}")
            body.append(f"    {var} = {arg_map[v]}")
            body.append("")
            continue
        if style.structure == "multi_function":
            helper = names.helper[v]
            hargs = [names.value[p] for p in cpt.parents]
            sig = ", ".join(hargs + ["rng: random.Random"])
            helpers.append(f"def {helper}({sig}) -> int:")
            if not cpt.parents:
                helpers.append(
                    f"    return {_draw_expr(style.sampling_idiom, cpt.value_str(0))}"
                )
            else:
                helpers.extend(_row_prob_lines(scm, v, names, style, "    "))
                helpers.append(
                    f"    return {_draw_expr(style.sampling_idiom, names.rowp[v])}"
                )
            helpers.append("")
            call_args = ", ".join([names.value[p] for p in cpt.parents] + ["rng"])
            body.append(f"    {var} = {helper}({call_args})")
            body.append("")
            continue
        if not cpt.parents:
            body.append(f"    {var} = {_draw_expr(style.sampling_idiom, cpt.value_str(0))}")
        else:
            body.extend(_row_prob_lines(scm, v, names, style, "    "))
            body.append(f"    {var} = {_draw_expr(style.sampling_idiom, names.rowp[v])}")
        body.append("")

    if sentinel:
        for node, val in query.evidence:
            body.append(f"    if {names.value[node]} != {val}:")
            body.append("        return None")
        body.append("")
    body.append(f"    return {_return_expr(query, names)}")

    sig_args = ", ".join(f"{a}: int" for a in args)
    sig = f"def func_main({sig_args}{', ' if sig_args else ''}rng: random.Random) -> {ret_type}:"
    out = lines + helpers + [sig] + body
    return "\n".join(out)


def _return_annotation(query: QuerySpec, optional: bool) -> str:
    qt = query.query_type
    if qt in ("JP", "OD"):
        return "tuple[int, int]"
    if optional:
        return "Optional[int]"
    return "int"


def _return_expr(query: QuerySpec, names: _Names) -> str:
    qt = query.query_type
    y = names.value[query.outcome]
    if qt == "JP":
        other = names.value[query.co_targets[0][0]]
        return f"({other}, {y})"
    if qt == "OD":
        return f"({names.value[query.subject]}, {y})"
    return y


# ---------------------------------------------------------------------------
# latent-family program


def _latent_program(
    scm: Scm,
    query: QuerySpec,
    included: list[int],
    retained: set[int],
    names: _Names,
    style: CodeStyle,
    rng: random.Random,
) -> str:
    dag = scm.dag
    order = [v for v in dag.topological_order() if v in included]
    # forced-only nodes (treatment/mediator outside the retained set) carry
    # no mechanism; every world that touches them overrides their value
    mech_nodes = [v for v in order if v in retained]
    n_latents = sum(len(scm.cpts[v].rows) for v in mech_nodes)
    latent_ids = list(range(n_latents))
    if style.naming == "shuffled_generic":
        latent_ids = rng.sample(range(2 * n_latents + 4), n_latents)
    latent_names: dict[tuple[int, int], str] = {}
    cursor = 0
    for v in mech_nodes:
        for row in range(len(scm.cpts[v].rows)):
            latent_names[(v, row)] = f"latent_{latent_ids[cursor]}"
            cursor += 1

    state_key = {v: names.value[v] for v in included}
    lines = ["import random"]
    sentinel = query.query_type in ("CF", "ATT", "PN", "PS")
    if sentinel:
        lines.append("from typing import Optional")
    lines.append("")

    for v in mech_nodes:
        cpt = scm.cpts[v]
        if not cpt.parents:
            continue
        entries = []
        for row, combo in enumerate(product((0, 1), repeat=len(cpt.parents))):
            key = "(" + ", ".join(str(b) for b in combo) + ("," if len(combo) == 1 else "") + ")"
            entries.append(f'{key}: "{latent_names[(v, row)]}"')
        if len(entries) <= 2:
            lines.append(f"{names.selector[v]} = {{{', '.join(entries)}}}")
        else:
            lines.append(f"{names.selector[v]} = {{")
            for e in entries:
                lines.append(f"    {e},")
            lines.append("}")
    lines.append("")

    lines.append("def draw_latents(rng: random.Random) -> dict[str, int]:")
    for v in mech_nodes:
        cpt = scm.cpts[v]
        for row in range(len(cpt.rows)):
            name = latent_names[(v, row)]
            lines.append(
                f"    {name} = {_draw_expr(style.sampling_idiom, cpt.value_str(row))}"
            )
    lines.append("    return {")
    for v in mech_nodes:
        for row in range(len(scm.cpts[v].rows)):
            name = latent_names[(v, row)]
            lines.append(f'        "{name}": {name},')
    lines.append("    }")
    lines.append("")

    # forced-only nodes have no mechanism; in a world that does not override
    # them, anything downstream of the gap is skipped (never needed there)
    maybe_absent: set[int] = set()
    for v in order:
        if v not in mech_nodes or any(p in maybe_absent for p in scm.cpts[v].parents):
            maybe_absent.add(v)

    for fname in ("build_factual_state", "build_counterfactual_state"):
        lines.append(
            f"def {fname}(latents: dict[str, int], overrides: dict[str, int]) -> dict[str, int]:"
        )
        lines.append("    state = dict(overrides)")
        for v in order:
            if v not in mech_nodes:
                continue
            cpt = scm.cpts[v]
            key = state_key[v]
            cond = f'"{key}" not in state'
            for p in cpt.parents:
                if p in maybe_absent:
                    cond += f' and "{state_key[p]}" in state'
            lines.append(f"    if {cond}:")
            if not cpt.parents:
                lines.append(f'        state["{key}"] = latents["{latent_names[(v, 0)]}"]')
            else:
                tup = (
                    "("
                    + ", ".join(f'state["{state_key[p]}"]' for p in cpt.parents)
                    + ("," if len(cpt.parents) == 1 else "")
                    + ")"
                )
                lines.append(f"        selector_name = {names.selector[v]}[{tup}]")
                lines.append(f'        state["{key}"] = latents[selector_name]')
        lines.append("    return state")
        lines.append("")

    lines.extend(_latent_main(scm, query, state_key, sentinel))
    return "\n".join(lines)


def _latent_main(
    scm: Scm, query: QuerySpec, key: dict[int, str], sentinel: bool
) -> list[str]:
    qt = query.query_type
    y = key[query.outcome]
    t = key[query.treatments[0]]
    ret = "Optional[int]" if qt in ("CF", "PN", "PS") else (
        "Optional[tuple[int, int]]" if qt == "ATT" else "tuple[int, int]"
    )
    lines = [f"def func_main(rng: random.Random) -> {ret}:"]
    lines.append("    latents = draw_latents(rng)")
    if qt in ("CF", "ATT", "PN", "PS"):
        lines.append("    baseline_state = build_factual_state(latents, {})")
        if qt == "CF":
            conds = " and ".join(
                f'baseline_state["{key[n]}"] == {v}' for n, v in query.evidence
            )
        elif qt == "ATT":
            conds = f'baseline_state["{t}"] == 1'
        elif qt == "PN":
            conds = f'baseline_state["{t}"] == 1 and baseline_state["{y}"] == 1'
        else:  # PS
            conds = f'baseline_state["{t}"] == 0 and baseline_state["{y}"] == 0'
        lines.append(f"    accepted = {conds}")
        lines.append("    if not accepted:")
        lines.append("        return None")
        if qt == "CF":
            forced = query.treatment_values[0]
        elif qt in ("ATT", "PN"):
            forced = 0
        else:
            forced = 1
        lines.append(
            f'    shifted_state = build_counterfactual_state(latents, {{"{t}": {forced}}})'
        )
        if qt == "ATT":
            lines.append(f'    return (baseline_state["{y}"], shifted_state["{y}"])')
        else:
            lines.append(f'    return shifted_state["{y}"]')
        return lines
    # NDE / NIE
    m = key[query.mediator]
    if qt == "NDE":
        lines.append(f'    natural_state = build_factual_state(latents, {{"{t}": 0}})')
        lines.append(f'    held = natural_state["{m}"]')
        lines.append(
            f'    treated_state = build_counterfactual_state(latents, {{"{t}": 1, "{m}": held}})'
        )
        lines.append(
            f'    control_state = build_counterfactual_state(latents, {{"{t}": 0, "{m}": held}})'
        )
        lines.append(f'    return (treated_state["{y}"], control_state["{y}"])')
    else:
        lines.append(f'    natural_high = build_factual_state(latents, {{"{t}": 1}})')
        lines.append(f'    natural_low = build_factual_state(latents, {{"{t}": 0}})')
        lines.append(
            f'    shifted_state = build_counterfactual_state(latents, {{"{t}": 0, "{m}": natural_high["{m}"]}})'
        )
        lines.append(
            f'    control_state = build_counterfactual_state(latents, {{"{t}": 0, "{m}": natural_low["{m}"]}})'
        )
        lines.append(f'    return (shifted_state["{y}"], control_state["{y}"])')
    return lines


# ---------------------------------------------------------------------------
# query texts


def _query_text(query: QuerySpec) -> str:
    qt = query.query_type
    if qt == "MP":
        return (
            "Suppose you call func_main a large number of times with fresh "
            f"randomness. What fraction of the calls return {query.target_value}?"
        )
    if qt == "CP":
        return (
            "Run func_main many times, and discard every call that returns None. "
            f"Among the kept calls, what is the rate at which the returned value "
            f"equals {query.target_value}?"
        )
    if qt == "JP":
        (xn, xv) = query.co_targets[0]
        return (
            "Suppose you call func_main a large number of times. Each call "
            "returns (s, y), where s is the first returned value and y is the "
            f"second returned value. What fraction of the calls have s = {xv} "
            f"and y = {query.target_value} simultaneously?"
        )
    if qt == "OD":
        return (
            "Suppose you call func_main a large number of times. Each call "
            "returns (s, y), where s is the first returned value and y is the "
            "second returned value. Among calls where s = 1, compute the "
            "fraction with y = 1. Separately, do the same among calls where "
            "s = 0. What is the first fraction minus the second?"
        )
    if qt == "ATE":
        return (
            "Run func_main many times with the input set to 1, then separately "
            "run it many times with the input set to 0. What is the rate of "
            "returning 1 in the first group minus the rate of returning 1 in "
            "the second group?"
        )
    if qt == "CTE":
        return (
            "Run func_main many times with the input set to 1, and discard "
            "every call that returns None. Separately, do the same with the "
            "input set to 0. Among the kept results in each group, what is the "
            "difference in the rate of returning 1?"
        )
    if qt == "JTE":
        a1, a2 = query.treatment_values
        b1, b2 = query.setting_b
        return (
            f"Run func_main many times with the inputs set to ({a1}, {a2}), "
            f"then separately with the inputs set to ({b1}, {b2}). What is the "
            "rate of returning 1 in the first group minus the rate of "
            "returning 1 in the second group?"
        )
    if qt == "CF":
        return (
            "Run func_main many times, and discard every call that returns "
            "None. Among the kept calls, what is the rate at which the "
            f"returned counterfactual outcome equals {query.target_value}?"
        )
    if qt == "ATT":
        return (
            "Run func_main many times, and discard every call that returns "
            "None. Each kept call returns (a, b), the factual outcome and the "
            "counterfactual outcome. What is the rate of a = 1 minus the rate "
            "of b = 1 among the kept calls?"
        )
    if qt == "PN":
        return (
            "Run func_main many times, and discard every call that returns "
            "None. Among the kept calls, what is the rate at which the "
            "returned counterfactual outcome equals 0?"
        )
    if qt == "PS":
        return (
            "Run func_main many times, and discard every call that returns "
            "None. Among the kept calls, what is the rate at which the "
            "returned counterfactual outcome equals 1?"
        )
    if qt in ("NDE", "NIE"):
        return (
            "Run func_main many times. Each call returns (a, b), two outcomes "
            "built from the same random draws. What is the rate of a = 1 minus "
            "the rate of b = 1 across all calls?"
        )
    raise UnsupportedFormError(qt)


# ---------------------------------------------------------------------------
# entry point


def render_code(
    scm: Scm,
    query: QuerySpec,
    retained: set[int],
    style: CodeStyle,
    rng: random.Random,
) -> CodeForm:
    """Emit the program + statistics question for a probabilistic instance."""
    qt = query.query_type
    if qt in GRAPH_ONLY:
        raise UnsupportedFormError(f"{qt} is symbolic-only")
    included_set = set(retained) | set(query.treatments)
    if query.mediator is not None:
        included_set.add(query.mediator)
    included_set.add(query.outcome)
    for n, _ in query.evidence:
        included_set.add(n)
    if query.subject is not None:
        included_set.add(query.subject)
    for n, _ in query.co_targets:
        included_set.add(n)
    order = [v for v in scm.dag.topological_order() if v in included_set]
    names = _Names(scm, order, style, rng)

    if qt in FORWARD_FAMILY:
        arg_map: dict[int, str] = {}
        if qt in ("ATE", "CTE"):
            arg_map[query.treatments[0]] = "arg_0"
        elif qt == "JTE":
            arg_map[query.treatments[0]] = "arg_0"
            arg_map[query.treatments[1]] = "arg_1"
        program = _forward_program(scm, query, order, names, style, arg_map)
    else:
        program = _latent_program(scm, query, order, retained, names, style, rng)

    io_contract = _io_contract(query)
    return CodeForm(
        program_text=program,
        query_text=_query_text(query),
        entry_point="func_main",
        io_contract=io_contract,
        node_vars={v: names.value[v] for v in order},
        style=style,
    )


def _io_contract(query: QuerySpec) -> str:
    qt = query.query_type
    if qt in ("JP", "OD", "NDE", "NIE"):
        return "tuple_return"
    if qt in ("CP", "CTE", "CF", "ATT", "PN", "PS"):
        return "optional_return"
    return "plain_return"
