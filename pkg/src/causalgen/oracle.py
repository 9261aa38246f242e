"""Monte-Carlo estimator used to cross-check every exact solver.

Observational types use forward sampling (conditionals via rejection);
interventional types sample the mutilated mechanisms directly; counterfactual
and mediation types draw per-row latent selector bits, accept runs whose
factual world matches the evidence, and evaluate the hypothetical worlds
deterministically from the shared latents.  No code is shared with the
variable-elimination engine.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

from causalgen.queries import GRAPH_ONLY, QuerySpec
from causalgen.scm import Scm

MIN_ACCEPTED = 100


class InsufficientAcceptanceError(RuntimeError):
    """Evidence too rare for the trial budget, even after escalation."""


@dataclass(frozen=True)
class Estimate:
    mean: float
    stderr: float
    accepted: int


def _rate(mask: np.ndarray) -> tuple[float, float]:
    n = mask.size
    p = float(mask.mean())
    return p, math.sqrt(max(p * (1.0 - p), 0.0) / n)


def _diff_err(a: tuple[float, float], b: tuple[float, float]) -> float:
    return math.sqrt(a[1] ** 2 + b[1] ** 2)


def _paired(a: np.ndarray, b: np.ndarray) -> Estimate:
    d = a.astype(np.float64) - b.astype(np.float64)
    n = d.size
    se = float(d.std(ddof=1)) / math.sqrt(n) if n > 1 else 0.0
    return Estimate(float(d.mean()), se, n)


def _forward(scm: Scm, gen: np.random.Generator, n: int, do: dict | None = None) -> np.ndarray:
    do = do or {}
    order = scm.dag.topological_order()
    assert order is not None
    vals = np.empty((n, scm.dag.node_count), dtype=np.int8)
    for v in order:
        if v in do:
            vals[:, v] = do[v]
            continue
        cpt = scm.cpts[v]
        if not cpt.parents:
            vals[:, v] = gen.random(n) < cpt.p1(0)
        else:
            idx = np.zeros(n, dtype=np.int64)
            for p in cpt.parents:
                idx = (idx << 1) | vals[:, p]
            row_p = np.array([cpt.p1(i) for i in range(len(cpt.rows))])[idx]
            vals[:, v] = gen.random(n) < row_p
    return vals


def _latent_bits(scm: Scm, gen: np.random.Generator, n: int) -> dict[int, np.ndarray]:
    bits = {}
    for v in scm.dag.nodes:
        cpt = scm.cpts[v]
        row_p = np.array([cpt.p1(i) for i in range(len(cpt.rows))])
        bits[v] = gen.random((n, len(cpt.rows))) < row_p
    return bits


def _world(scm: Scm, bits: dict[int, np.ndarray], do: dict) -> np.ndarray:
    order = scm.dag.topological_order()
    assert order is not None
    n = next(iter(bits.values())).shape[0]
    vals = np.empty((n, scm.dag.node_count), dtype=np.int8)
    for v in order:
        if v in do:
            vals[:, v] = do[v]
            continue
        cpt = scm.cpts[v]
        idx = np.zeros(n, dtype=np.int64)
        for p in cpt.parents:
            idx = (idx << 1) | vals[:, p]
        vals[:, v] = bits[v][np.arange(n), idx]
    return vals


def estimate(scm: Scm, query: QuerySpec, trials: int, rng: random.Random) -> Estimate:
    """Estimate the query value with `trials` samples; rare-evidence queries
    escalate the budget x10 once before raising.
    """
    if query.query_type in GRAPH_ONLY:
        raise ValueError("graph-only queries have no Monte-Carlo estimate")
    if trials < 10_000:
        raise ValueError("use at least 1e4 trials")
    gen = np.random.default_rng(rng.getrandbits(63))
    est = _estimate(scm, query, trials, gen)
    if est is None:
        est = _estimate(scm, query, trials * 10, gen)
    if est is None:
        raise InsufficientAcceptanceError(query.query_type)
    return est


def _estimate(
    scm: Scm, query: QuerySpec, trials: int, gen: np.random.Generator
) -> Estimate | None:
    qt = query.query_type
    y, yv = query.outcome, query.target_value

    if qt == "MP":
        vals = _forward(scm, gen, trials)
        p, se = _rate(vals[:, y] == yv)
        return Estimate(p, se, trials)

    if qt == "CP":
        vals = _forward(scm, gen, trials)
        mask = np.ones(trials, dtype=bool)
        for node, val in query.evidence:
            mask &= vals[:, node] == val
        kept = int(mask.sum())
        if kept < MIN_ACCEPTED:
            return None
        p, se = _rate(vals[mask, y] == yv)
        return Estimate(p, se, kept)

    if qt == "JP":
        vals = _forward(scm, gen, trials)
        mask = vals[:, y] == yv
        for node, val in query.co_targets:
            mask &= vals[:, node] == val
        p, se = _rate(mask)
        return Estimate(p, se, trials)

    if qt == "OD":
        vals = _forward(scm, gen, trials)
        x = query.subject
        g1 = vals[vals[:, x] == 1, y] == 1
        g0 = vals[vals[:, x] == 0, y] == 1
        if min(g1.size, g0.size) < MIN_ACCEPTED:
            return None
        r1, r0 = _rate(g1), _rate(g0)
        return Estimate(r1[0] - r0[0], _diff_err(r1, r0), min(g1.size, g0.size))

    if qt in ("ATE", "CTE"):
        t = query.treatments[0]
        evid = list(query.evidence)
        rates = []
        kept_min = trials
        for val in (1, 0):
            vals = _forward(scm, gen, trials, do={t: val})
            mask = np.ones(trials, dtype=bool)
            for node, ev in evid:
                mask &= vals[:, node] == ev
            kept = int(mask.sum())
            kept_min = min(kept_min, kept)
            if kept < MIN_ACCEPTED:
                return None
            rates.append(_rate(vals[mask, y] == 1))
        return Estimate(rates[0][0] - rates[1][0], _diff_err(*rates), kept_min)

    if qt == "JTE":
        rates = []
        for setting in (query.treatment_values, query.setting_b):
            do = dict(zip(query.treatments, setting))
            vals = _forward(scm, gen, trials, do=do)
            rates.append(_rate(vals[:, y] == 1))
        return Estimate(rates[0][0] - rates[1][0], _diff_err(*rates), trials)

    # counterfactual family: shared latent bits
    bits = _latent_bits(scm, gen, trials)
    factual = _world(scm, bits, {})

    if qt == "CF":
        mask = np.ones(trials, dtype=bool)
        for node, val in query.evidence:
            mask &= factual[:, node] == val
        kept = int(mask.sum())
        if kept < MIN_ACCEPTED:
            return None
        do = dict(zip(query.treatments, query.treatment_values))
        twin = _world(scm, _mask_bits(bits, mask), do)
        p, se = _rate(twin[:, y] == yv)
        return Estimate(p, se, kept)

    if qt in ("PN", "PS"):
        x = query.treatments[0]
        want_x, want_y, force, target = (
            (1, 1, 0, 0) if qt == "PN" else (0, 0, 1, 1)
        )
        mask = (factual[:, x] == want_x) & (factual[:, y] == want_y)
        kept = int(mask.sum())
        if kept < MIN_ACCEPTED:
            return None
        twin = _world(scm, _mask_bits(bits, mask), {x: force})
        p, se = _rate(twin[:, y] == target)
        return Estimate(p, se, kept)

    if qt == "ATT":
        x = query.treatments[0]
        mask = factual[:, x] == 1
        kept = int(mask.sum())
        if kept < MIN_ACCEPTED:
            return None
        sub = _mask_bits(bits, mask)
        twin = _world(scm, sub, {x: 0})
        return _paired(factual[mask, y] == 1, twin[:, y] == 1)

    if qt in ("NDE", "NIE"):
        t, m = query.treatments[0], query.mediator
        if qt == "NDE":
            m_nat = _world(scm, bits, {t: 0})[:, m]
            a = _world(scm, bits, {t: 1, m: m_nat})[:, y]
            b = _world(scm, bits, {t: 0, m: m_nat})[:, y]
        else:
            m_hi = _world(scm, bits, {t: 1})[:, m]
            m_lo = _world(scm, bits, {t: 0})[:, m]
            a = _world(scm, bits, {t: 0, m: m_hi})[:, y]
            b = _world(scm, bits, {t: 0, m: m_lo})[:, y]
        return _paired(a == 1, b == 1)

    raise ValueError(f"unknown query type {qt}")


def _mask_bits(bits: dict[int, np.ndarray], mask: np.ndarray) -> dict[int, np.ndarray]:
    return {v: b[mask] for v, b in bits.items()}
