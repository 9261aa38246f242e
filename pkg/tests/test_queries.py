from __future__ import annotations

import random

import pytest

from causalgen.graphs import Dag, sample_graph_pool
from causalgen.queries import (
    GRAPH_ONLY,
    PROBABILISTIC,
    QUERY_TYPES,
    GroundTruth,
    NaivetyUndefinedError,
    QuerySpec,
    exact_value,
    generate_instances,
    ground_truth,
    is_naive,
    requisite_nodes,
    round4,
    sample_query,
)
from causalgen.scm import Cpt, Scm, sample_cpts

import oracles


@pytest.fixture(scope="module")
def pool():
    return sample_graph_pool(120, (3, 10), random.Random(17)).dags


# ---------------------------------------------------------------------------
# rounding and answer formats


def test_round4_half_up():
    assert round4(0.12345) == 0.1235
    assert round4(-0.12012) == -0.1201
    assert round4(-0.00005) == -0.0001
    assert round4(0.9) == 0.9


def test_answer_text_formats():
    assert GroundTruth("numeric", -0.096).answer_text() == "-0.0960"
    assert GroundTruth("boolean", True).answer_text() == "yes"


# ---------------------------------------------------------------------------
# role sampling and abnormality


def test_mp_target_never_root_on_chain():
    chain = Dag(3, ((0, 1), (1, 2)))
    scm = sample_cpts(chain, random.Random(0))
    for seed in range(25):
        spec, _ = sample_query(scm, "MP", random.Random(seed))
        assert spec.outcome != 0


def test_treatment_types_require_directed_path(pool):
    rng = random.Random(5)
    for qt in ("ATE", "CTE", "ATT", "PN", "PS", "CF", "ID", "BD", "FD"):
        for _ in range(15):
            scm = sample_cpts(rng.choice(pool), rng)
            try:
                spec, _ = sample_query(scm, qt, rng)
            except Exception:
                continue
            t, y = spec.treatments[0], spec.outcome
            assert scm.dag.has_directed_path(t, y)


def test_jte_requires_paths_from_both_treatments(pool):
    rng = random.Random(6)
    hits = 0
    for _ in range(30):
        scm = sample_cpts(rng.choice(pool), rng)
        try:
            spec, _ = sample_query(scm, "JTE", rng)
        except Exception:
            continue
        hits += 1
        for t in spec.treatments:
            assert scm.dag.has_directed_path(t, spec.outcome)
        assert spec.treatment_values != spec.setting_b
    assert hits > 10


def test_mediation_roles_form_direct_triple(pool):
    rng = random.Random(7)
    hits = 0
    for _ in range(40):
        scm = sample_cpts(rng.choice(pool), rng)
        try:
            spec, _ = sample_query(scm, "NDE", rng)
        except Exception:
            continue
        hits += 1
        t, m, y = spec.treatments[0], spec.mediator, spec.outcome
        assert m in scm.dag.children(t)
        assert y in scm.dag.children(m)
    assert hits > 5


def test_running_fixture_cte_roles_admissible(running_scm):
    # treatment X1, outcome X2, evidence X0 must be an admissible CTE draw
    found = False
    for seed in range(200):
        spec, _ = sample_query(running_scm, "CTE", random.Random(seed))
        if spec.treatments == (1,) and spec.outcome == 2 and spec.evidence[0][0] == 0:
            found = True
            break
    assert found


def test_query_spec_roundtrip(pool):
    rng = random.Random(8)
    for qt in QUERY_TYPES:
        for _ in range(6):
            scm = sample_cpts(rng.choice(pool), rng)
            try:
                spec, _ = sample_query(scm, qt, rng)
            except Exception:
                continue
            assert QuerySpec.from_dict(spec.to_dict()) == spec


# ---------------------------------------------------------------------------
# naivety


def test_naive_ate_example_from_edge_deleted_separation():
    # treatment 4, outcome 2: deleting 4's outgoing edges isolates it from 2
    dag = Dag(5, ((3, 4), (3, 0), (4, 0), (4, 1), (4, 2)))
    spec = QuerySpec("ATE", outcome=2, target_value=1, treatments=(4,))
    assert is_naive(dag, spec)


def test_naive_cte_example():
    dag = Dag(5, ((4, 1), (4, 2), (4, 3), (1, 2), (1, 3), (3, 0)))
    spec = QuerySpec(
        "CTE", outcome=1, target_value=1, treatments=(4,), evidence=((2, 1),)
    )
    assert is_naive(dag, spec)


def test_naive_cf_pre_treatment_example():
    dag = Dag(5, ((0, 2), (0, 1), (2, 1), (2, 3), (2, 4), (1, 3)))
    spec = QuerySpec(
        "CF",
        outcome=3,
        target_value=1,
        treatments=(1,),
        treatment_values=(1,),
        evidence=((2, 0),),
        retrospection=True,
    )
    assert is_naive(dag, spec)


def test_cf_with_evidence_parent_of_treatment_is_naive():
    dag = Dag(3, ((0, 1), (1, 2)))
    spec = QuerySpec(
        "CF",
        outcome=2,
        target_value=1,
        treatments=(1,),
        treatment_values=(1,),
        evidence=((0, 0),),
        retrospection=True,
    )
    assert is_naive(dag, spec)


def test_cf_with_post_treatment_evidence_not_naive(running_scm):
    spec = QuerySpec(
        "CF",
        outcome=2,
        target_value=1,
        treatments=(1,),
        treatment_values=(1,),
        evidence=((0, 0),),
        retrospection=True,
    )
    assert not is_naive(running_scm.dag, spec)


def test_pn_ps_never_naive(pool):
    rng = random.Random(9)
    for qt in ("PN", "PS"):
        for item in generate_instances(pool, qt, 60, seed=31, naive_cap=None):
            assert not item.flags.naive


def test_naivety_undefined_for_association(running_scm):
    spec = QuerySpec("MP", outcome=2, target_value=1)
    with pytest.raises(NaivetyUndefinedError):
        is_naive(running_scm.dag, spec)


def test_naive_ate_matches_observational_shortcut(pool):
    rng = random.Random(10)
    checked = 0
    for item in generate_instances(pool, "ATE", 80, seed=77, naive_cap=None):
        if not item.flags.naive:
            continue
        t, y = item.query.treatments[0], item.query.outcome
        shortcut = oracles.conditional(item.scm, {y: 1}, {t: 1}) - oracles.conditional(
            item.scm, {y: 1}, {t: 0}
        )
        assert abs(exact_value(item.scm, item.query) - shortcut) < 1e-9
        checked += 1
    assert checked > 10


# ---------------------------------------------------------------------------
# generation gates


def test_naive_gate_respects_cap(pool):
    cap = 0.30
    items = list(generate_instances(pool, "ATE", 150, seed=55, naive_cap=cap))
    ratio = sum(i.flags.naive for i in items) / len(items)
    assert ratio <= cap + 1e-9


def test_generation_deterministic(pool):
    a = list(generate_instances(pool, "CTE", 25, seed=123))
    b = list(generate_instances(pool, "CTE", 25, seed=123))
    assert [(i.query, i.truth, i.seed) for i in a] == [
        (i.query, i.truth, i.seed) for i in b
    ]


def test_graph_only_balance(pool):
    for qt in sorted(GRAPH_ONLY):
        items = list(generate_instances(pool, qt, 200, seed=44))
        yes = sum(1 for i in items if i.truth.value) / len(items)
        assert 0.40 <= yes <= 0.60


def test_truth_reproducible_from_serialized_parts(pool):
    rng = random.Random(11)
    for qt in QUERY_TYPES:
        items = list(generate_instances(pool, qt, 4, seed=66))
        for item in items:
            scm = Scm.from_dict(item.scm.to_dict())
            spec = QuerySpec.from_dict(item.query.to_dict())
            assert ground_truth(scm, spec) == item.truth


# ---------------------------------------------------------------------------
# pruning / requisite conditions


def _scrub(scm: Scm, retained: set[int]) -> Scm:
    """Replace rows of non-retained nodes with 0.5 placeholders; answers must
    not depend on them.
    """
    half = 5 * 10 ** (scm.precision - 1)
    cpts = []
    for v in scm.dag.nodes:
        old = scm.cpts[v]
        if v in retained:
            cpts.append(old)
        else:
            cpts.append(Cpt(v, old.parents, (half,) * len(old.rows), scm.precision))
    return Scm(scm.dag, tuple(cpts), scm.precision)


def test_requisite_nodes_answer_invariance(pool):
    for qt in PROBABILISTIC:
        checked = 0
        for item in generate_instances(pool, qt, 6, seed=88):
            req = requisite_nodes(item.scm, item.query)
            scrubbed = _scrub(item.scm, req)
            assert abs(
                exact_value(scrubbed, item.query) - exact_value(item.scm, item.query)
            ) < 1e-12
            checked += 1
        assert checked == 6


def test_pruned_items_keep_enough_rows_to_reproduce_answer(pool):
    seen_pruned = 0
    for qt in ("ATE", "CF", "PN", "NIE"):
        for item in generate_instances(pool, qt, 10, seed=99):
            if not item.flags.pruned:
                continue
            seen_pruned += 1
            scrubbed = _scrub(item.scm, item.retained)
            assert ground_truth(scrubbed, item.query) == item.truth
    assert seen_pruned > 5


def test_graph_only_items_never_pruned(pool):
    for qt in sorted(GRAPH_ONLY):
        for item in generate_instances(pool, qt, 10, seed=13):
            assert not item.flags.pruned
            assert item.retained == set(item.scm.dag.nodes)


def test_numeric_answers_respect_bounds(pool):
    probabilities = {"MP", "CP", "JP", "CF", "PN", "PS"}
    for qt in PROBABILISTIC:
        for item in generate_instances(pool, qt, 5, seed=121):
            value = exact_value(item.scm, item.query)
            if qt in probabilities:
                assert -1e-12 <= value <= 1 + 1e-12
            else:
                assert -1 - 1e-12 <= value <= 1 + 1e-12
