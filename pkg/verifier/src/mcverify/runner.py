"""Run emitted stochastic programs and compare statistics to exact answers.

A record passes when its Monte-Carlo estimate lands within
max(0.015, 4 * stderr) of the stored exact value.  Any exception raised by
the program, or a return value outside its io contract, is a hard failure;
too few sentinel-accepted runs make the record inconclusive rather than
failed.  Programs execute in-process with a restricted namespace: standard
library imports only, nothing else reachable.
"""

from __future__ import annotations

import builtins
import json
import math
import random
import traceback
from dataclasses import dataclass
from pathlib import Path

MIN_ACCEPTED = 100
FLOOR_TOLERANCE = 0.015

_ALLOWED_MODULES = {"random", "typing", "math", "itertools"}

_SAFE_BUILTIN_NAMES = (
    "abs", "bool", "dict", "enumerate", "float", "frozenset", "int", "len",
    "list", "max", "min", "range", "round", "set", "sorted", "str", "sum",
    "tuple", "zip", "ValueError", "KeyError", "TypeError", "IndexError",
    "AttributeError", "RuntimeError", "ZeroDivisionError", "StopIteration",
    "Exception", "True", "False", "None", "isinstance", "print",
)


def _restricted_import(name, globals=None, locals=None, fromlist=(), level=0):
    if name.split(".")[0] not in _ALLOWED_MODULES:
        raise ImportError(f"import of {name!r} is not allowed in emitted programs")
    return builtins.__import__(name, globals, locals, fromlist, level)


def load_program(program_text: str, entry_point: str):
    """Compile and execute the program body in a restricted namespace and
    return its entry point.
    """
    safe = {name: getattr(builtins, name) for name in _SAFE_BUILTIN_NAMES if hasattr(builtins, name)}
    safe["__import__"] = _restricted_import
    safe["__build_class__"] = builtins.__build_class__
    namespace = {"__builtins__": safe, "__name__": "emitted_program"}
    exec(compile(program_text, "<emitted-program>", "exec"), namespace)
    fn = namespace.get(entry_point)
    if not callable(fn):
        raise ValueError(f"entry point {entry_point!r} not found")
    return fn


@dataclass
class VerifyResult:
    record_id: str
    query_type: str
    estimate: float | None
    stderr: float | None
    exact: float
    passed: bool
    accepted: int
    inconclusive: bool = False
    error: str | None = None

    def to_dict(self) -> dict:
        return {
            "id": self.record_id,
            "query_type": self.query_type,
            "estimate": self.estimate,
            "stderr": self.stderr,
            "exact": self.exact,
            "passed": self.passed,
            "accepted": self.accepted,
            "inconclusive": self.inconclusive,
            "error": self.error,
        }


def _rate(hits: int, n: int) -> tuple[float, float]:
    p = hits / n
    return p, math.sqrt(max(p * (1 - p), 0.0) / n)


def _check_bit(value) -> int:
    if value is True or value is False or value not in (0, 1):
        raise ValueError(f"out-of-contract return value {value!r}")
    return value


def _collect(fn, rng: random.Random, trials: int, args: tuple = ()):  # -> list
    return [fn(*args, rng) for _ in range(trials)]


def _kept_bits(outs) -> list[int]:
    return [_check_bit(o) for o in outs if o is not None]


def _kept_pairs(outs) -> list[tuple[int, int]]:
    pairs = []
    for o in outs:
        if o is None:
            continue
        if not isinstance(o, tuple) or len(o) != 2:
            raise ValueError(f"out-of-contract return value {o!r}")
        pairs.append((_check_bit(o[0]), _check_bit(o[1])))
    return pairs


def _paired_diff(pairs) -> tuple[float, float, int]:
    n = len(pairs)
    diffs = [a - b for a, b in pairs]
    mean = sum(diffs) / n
    if n > 1:
        var = sum((d - mean) ** 2 for d in diffs) / (n - 1)
        se = math.sqrt(var / n)
    else:
        se = 0.0
    return mean, se, n


def _statistic(fn, roles: dict, trials: int, rng: random.Random):
    """Returns (estimate, stderr, accepted) or None when acceptance is too
    low for a verdict.
    """
    qt = roles["query_type"]
    target = roles.get("target_value")

    if qt in ("ATE", "CTE"):
        groups = []
        kept_min = trials
        for val in (1, 0):
            bits = _kept_bits(_collect(fn, rng, trials, (val,)))
            if len(bits) < MIN_ACCEPTED:
                return None
            kept_min = min(kept_min, len(bits))
            groups.append(_rate(sum(bits), len(bits)))
        (p1, s1), (p0, s0) = groups
        return p1 - p0, math.sqrt(s1**2 + s0**2), kept_min

    if qt == "JTE":
        groups = []
        for setting in (roles["treatment_values"], roles["setting_b"]):
            bits = _kept_bits(_collect(fn, rng, trials, tuple(setting)))
            groups.append(_rate(sum(bits), len(bits)))
        (p1, s1), (p0, s0) = groups
        return p1 - p0, math.sqrt(s1**2 + s0**2), trials

    outs = _collect(fn, rng, trials)

    if qt == "MP":
        bits = _kept_bits(outs)
        p, se = _rate(sum(1 for b in bits if b == target), len(bits))
        return p, se, len(bits)

    if qt in ("CP", "CF"):
        bits = _kept_bits(outs)
        if len(bits) < MIN_ACCEPTED:
            return None
        p, se = _rate(sum(1 for b in bits if b == target), len(bits))
        return p, se, len(bits)

    if qt in ("PN", "PS"):
        want = 0 if qt == "PN" else 1
        bits = _kept_bits(outs)
        if len(bits) < MIN_ACCEPTED:
            return None
        p, se = _rate(sum(1 for b in bits if b == want), len(bits))
        return p, se, len(bits)

    if qt == "JP":
        pairs = _kept_pairs(outs)
        sv = roles["co_targets"][0][1]
        hits = sum(1 for s, y in pairs if s == sv and y == target)
        p, se = _rate(hits, len(pairs))
        return p, se, len(pairs)

    if qt == "OD":
        pairs = _kept_pairs(outs)
        g1 = [y for s, y in pairs if s == 1]
        g0 = [y for s, y in pairs if s == 0]
        if min(len(g1), len(g0)) < MIN_ACCEPTED:
            return None
        p1, s1 = _rate(sum(g1), len(g1))
        p0, s0 = _rate(sum(g0), len(g0))
        return p1 - p0, math.sqrt(s1**2 + s0**2), min(len(g1), len(g0))

    if qt in ("ATT", "NDE", "NIE"):
        pairs = _kept_pairs(outs)
        if qt == "ATT" and len(pairs) < MIN_ACCEPTED:
            return None
        mean, se, n = _paired_diff(pairs)
        return mean, se, n

    raise ValueError(f"unsupported query type {qt}")


def run_record(record: dict, trials: int, seed: int) -> VerifyResult:
    """Execute one code-form record and judge it against its stored answer."""
    exact = float(record["answer"]["value"])
    rid = record.get("id", "?")
    qt = record["query_type"]
    roles = dict(record["roles"])
    roles["query_type"] = qt
    try:
        fn = load_program(record["program_text"], record["entry_point"])
        rng = random.Random(seed)
        stat = _statistic(fn, roles, trials, rng)
    except Exception:
        return VerifyResult(
            record_id=rid,
            query_type=qt,
            estimate=None,
            stderr=None,
            exact=exact,
            passed=False,
            accepted=0,
            error=traceback.format_exc(limit=4),
        )
    if stat is None:
        return VerifyResult(
            record_id=rid,
            query_type=qt,
            estimate=None,
            stderr=None,
            exact=exact,
            passed=False,
            accepted=0,
            inconclusive=True,
        )
    estimate, stderr, accepted = stat
    tolerance = max(FLOOR_TOLERANCE, 4 * stderr)
    return VerifyResult(
        record_id=rid,
        query_type=qt,
        estimate=estimate,
        stderr=stderr,
        exact=exact,
        passed=abs(estimate - exact) <= tolerance,
        accepted=accepted,
    )


def verify_corpus(
    path: Path,
    trials: int,
    seed: int,
    per_type_limit: int | None = None,
    types: set[str] | None = None,
) -> dict:
    """Verify records from a code-form corpus file; returns the report."""
    results: list[VerifyResult] = []
    counts: dict[str, int] = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            if rec.get("form") != "code":
                continue
            qt = rec["query_type"]
            if types and qt not in types:
                continue
            if per_type_limit is not None and counts.get(qt, 0) >= per_type_limit:
                continue
            counts[qt] = counts.get(qt, 0) + 1
            results.append(run_record(rec, trials, seed))
    passed = sum(1 for r in results if r.passed)
    errors = sum(1 for r in results if r.error)
    inconclusive = sum(1 for r in results if r.inconclusive)
    conclusive = len(results) - inconclusive
    return {
        "corpus": str(path),
        "trials": trials,
        "seed": seed,
        "summary": {
            "records": len(results),
            "passed": passed,
            "failed": conclusive - passed,
            "inconclusive": inconclusive,
            "errors": errors,
            "pass_rate": passed / conclusive if conclusive else 0.0,
        },
        "results": [r.to_dict() for r in results],
    }
