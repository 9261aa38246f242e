from __future__ import annotations

import random

import pytest

from causalgen.graphs import Dag, sample_dag
from causalgen.identify import Admg, id_identifiable, identifiable, latent_project


def test_fully_observed_always_identifiable():
    rng = random.Random(61)
    for _ in range(50):
        dag = sample_dag(rng.randint(3, 8), rng)
        x, y = rng.sample(list(dag.nodes), 2)
        assert identifiable(dag, set(), {x}, {y})


def test_bow_graph_not_identifiable():
    # 0 -> 1 with latent 2 confounding both
    dag = Dag(3, ((0, 1), (2, 0), (2, 1)))
    assert not identifiable(dag, {2}, {0}, {1})


def test_frontdoor_graph_identifiable():
    # latent 0 confounds 1 and 3; 1 -> 2 -> 3
    dag = Dag(4, ((0, 1), (0, 3), (1, 2), (2, 3)))
    assert identifiable(dag, {0}, {1}, {3})


def test_backdoor_observed_confounder_identifiable():
    dag = Dag(3, ((0, 1), (0, 2), (1, 2)))
    assert identifiable(dag, set(), {1}, {2})


def test_latent_projection_edges():
    # 0 -> L(1) -> 2 gives directed 0 -> 2; L also reaches 3: bidirected 2 <-> 3
    dag = Dag(4, ((0, 1), (1, 2), (1, 3)))
    admg = latent_project(dag, {1})
    assert admg.nodes == frozenset({0, 2, 3})
    assert (0, 2) in admg.directed and (0, 3) in admg.directed
    assert frozenset({2, 3}) in admg.bidirected


def test_latent_projection_chained_latents():
    # 0 <- L1 -> L2 -> 3: divergent path through two latents
    dag = Dag(4, ((1, 0), (1, 2), (2, 3)))
    admg = latent_project(dag, {1, 2})
    assert frozenset({0, 3}) in admg.bidirected


def test_districts_split_on_bidirected_components():
    admg = Admg(
        frozenset({0, 1, 2}),
        frozenset({(0, 1)}),
        frozenset({frozenset({1, 2})}),
    )
    comps = admg.districts()
    assert {frozenset(c) for c in comps} == {frozenset({0}), frozenset({1, 2})}


def test_id_rejects_overlap():
    dag = Dag(3, ((0, 1), (1, 2)))
    with pytest.raises(ValueError):
        identifiable(dag, set(), {0}, {0})
    with pytest.raises(ValueError):
        identifiable(dag, {0}, {0}, {2})


def test_instrument_like_graph_not_identifiable():
    # instrument 0 -> 1 -> 2 with latent 3 confounding 1 and 2: P(2|do(1))
    # is not identifiable (bow between treatment and outcome remains)
    dag = Dag(4, ((0, 1), (1, 2), (3, 1), (3, 2)))
    assert not identifiable(dag, {3}, {1}, {2})


def test_id_on_admg_without_projection():
    # 0 -> 1 -> 2 with 0 <-> 2: adjusting for 0 blocks the backdoor, so
    # P(2 | do(1)) is identifiable; so is P(1 | do(0)).
    g = Admg(
        frozenset({0, 1, 2}),
        frozenset({(0, 1), (1, 2)}),
        frozenset({frozenset({0, 2})}),
    )
    assert id_identifiable(g, {0}, {1})
    assert id_identifiable(g, {1}, {2})
