from __future__ import annotations

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from causalgen.factors import Factor, eliminate_to, min_fill_order


def _random_factor(rng, var_pool):
    k = rng.randint(1, 3)
    scope = tuple(sorted(rng.sample(var_pool, k)))
    cards = tuple(2 for _ in scope)
    table = rng_array(rng, cards)
    return Factor(scope, cards, table)


def rng_array(rng, cards):
    flat = [rng.random() for _ in range(int(np.prod(cards)))]
    return np.array(flat).reshape(cards)


def test_factor_rejects_negative_entries():
    with pytest.raises(ValueError):
        Factor(("a",), (2,), np.array([0.5, -0.1]))


def test_multiply_matches_manual_table():
    fa = Factor(("a",), (2,), np.array([0.25, 0.75]))
    fb = Factor(("a", "b"), (2, 2), np.array([[0.5, 0.5], [0.1, 0.9]]))
    joined = fa.multiply(fb)
    assert set(joined.scope) == {"a", "b"}
    for a in range(2):
        for b in range(2):
            idx = tuple(
                (a if v == "a" else b) for v in joined.scope
            )
            assert joined.table[idx] == pytest.approx(
                fa.table[a] * fb.table[a, b]
            )


def test_marginalize_then_total():
    f = Factor(("a", "b"), (2, 2), np.array([[0.1, 0.2], [0.3, 0.4]]))
    m = f.marginalize("a")
    assert m.scope == ("b",)
    assert m.table == pytest.approx(np.array([0.4, 0.6]))
    assert m.total() == pytest.approx(1.0)


def test_reduce_selects_slice():
    f = Factor(("a", "b"), (2, 2), np.array([[0.1, 0.2], [0.3, 0.4]]))
    r = f.reduce("a", 1)
    assert r.scope == ("b",)
    assert r.table == pytest.approx(np.array([0.3, 0.4]))


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10**6))
def test_elimination_equals_brute_force(seed):
    import random

    rng = random.Random(seed)
    var_pool = ["a", "b", "c", "d", "e"]
    factors = [_random_factor(rng, var_pool) for _ in range(rng.randint(2, 5))]
    keep = {rng.choice(var_pool)}
    result = eliminate_to(factors, keep)

    all_vars = sorted({v for f in factors for v in f.scope})
    brute = {}
    from itertools import product

    for assign in product((0, 1), repeat=len(all_vars)):
        env = dict(zip(all_vars, assign))
        p = 1.0
        for f in factors:
            idx = tuple(env[v] for v in f.scope)
            p *= float(f.table[idx])
        key = tuple(env[v] for v in sorted(keep & set(all_vars)))
        brute[key] = brute.get(key, 0.0) + p

    if not (keep & set(all_vars)):
        assert result.total() == pytest.approx(sum(brute.values()))
        return
    for key, want in brute.items():
        idx = tuple(
            key[sorted(keep & set(all_vars)).index(v)] for v in result.scope
        )
        assert float(result.table[idx]) == pytest.approx(want, abs=1e-12)


def test_min_fill_covers_requested_variables():
    f1 = Factor(("a", "b"), (2, 2), np.ones((2, 2)))
    f2 = Factor(("b", "c"), (2, 2), np.ones((2, 2)))
    order = min_fill_order([f1, f2], {"a", "b", "c"})
    assert set(order) == {"a", "b", "c"}
