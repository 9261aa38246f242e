from __future__ import annotations

import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causalgen.graphs import (
    Dag,
    canonical_form,
    load_or_build_pool,
    read_pool_manifest,
    sample_dag,
    sample_graph_pool,
    write_pool_manifest,
)


def permute(dag: Dag, perm: list[int]) -> Dag:
    return Dag(dag.node_count, tuple((perm[a], perm[b]) for a, b in dag.edges))


def test_sampled_dags_satisfy_invariants():
    rng = random.Random(7)
    for _ in range(300):
        n = rng.randint(3, 10)
        dag = sample_dag(n, rng)
        dag.validate()
        assert dag.topological_order() is not None
        assert len(dag.roots()) >= 1
        indeg = {v: len(dag.parents(v)) for v in dag.nodes}
        for v in dag.nodes:
            assert indeg[v] <= 2
            if v not in dag.roots():
                assert indeg[v] in (1, 2)


def test_sample_dag_rejects_bad_sizes():
    rng = random.Random(0)
    with pytest.raises(ValueError):
        sample_dag(2, rng)
    with pytest.raises(ValueError):
        sample_dag(11, rng)


def test_sample_dag_deterministic():
    a = sample_dag(8, random.Random(1234))
    b = sample_dag(8, random.Random(1234))
    assert a.edges == b.edges


def test_canonical_chain_relabelings_match():
    chain1 = Dag(3, ((0, 1), (1, 2)))
    chain2 = Dag(3, ((2, 0), (0, 1)))
    assert canonical_form(chain1) == canonical_form(chain2)


def test_canonical_chain_vs_fork_differ():
    chain = Dag(3, ((0, 1), (1, 2)))
    fork = Dag(3, ((0, 1), (0, 2)))
    collider = Dag(3, ((0, 2), (1, 2)))
    assert canonical_form(chain) != canonical_form(fork)
    assert canonical_form(chain) != canonical_form(collider)
    assert canonical_form(fork) != canonical_form(collider)


@settings(max_examples=60, deadline=None)
@given(seed=st.integers(0, 10**6), perm_seed=st.integers(0, 10**6))
def test_canonical_invariant_under_permutation(seed: int, perm_seed: int):
    rng = random.Random(seed)
    dag = sample_dag(rng.randint(3, 8), rng)
    perm = list(range(dag.node_count))
    random.Random(perm_seed).shuffle(perm)
    assert canonical_form(dag) == canonical_form(permute(dag, perm))


def test_pool_keys_distinct():
    pool = sample_graph_pool(50, (3, 10), random.Random(42))
    assert len(pool.dags) == 50
    assert pool.missing == 0
    keys = pool.keys
    assert len(set(keys)) == 50


def test_pool_shortfall_when_classes_exhausted():
    # only a handful of isomorphism classes exist at n=3 under the parent cap
    pool = sample_graph_pool(40, (3, 3), random.Random(0), retry_budget=300)
    assert pool.missing > 0
    assert pool.exhausted_sizes == [3]
    assert pool.shortfall_report()["missing"] == pool.missing


def test_pool_deterministic():
    a = sample_graph_pool(20, (3, 8), random.Random(5))
    b = sample_graph_pool(20, (3, 8), random.Random(5))
    assert [d.edges for d in a.dags] == [d.edges for d in b.dags]


def test_pool_manifest_roundtrip(tmp_path):
    pool = sample_graph_pool(12, (3, 6), random.Random(9))
    path = tmp_path / "pool.jsonl"
    write_pool_manifest(path, pool)
    back = read_pool_manifest(path)
    assert [d.edges for d in back.dags] == [d.edges for d in pool.dags]
    assert back.seeds == pool.seeds


def test_load_or_build_pool_extends(tmp_path):
    path = tmp_path / "pool.jsonl"
    first = load_or_build_pool(path, 8, (3, 6), seed=11)
    assert len(first.dags) == 8
    second = load_or_build_pool(path, 14, (3, 6), seed=11)
    assert len(second.dags) == 14
    assert [d.edges for d in second.dags[:8]] == [d.edges for d in first.dags]
    keys = {canonical_form(d) for d in second.dags}
    assert len(keys) == 14
