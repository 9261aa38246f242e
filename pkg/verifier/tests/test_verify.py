from __future__ import annotations

import json
import re

import pytest

from mcverify.runner import load_program, run_record, verify_corpus

SENTINEL_PROGRAM = """import random
from typing import Optional

def func_main(rng: random.Random) -> Optional[int]:
    if rng.random() < 0.0005:
        return 1
    return None
"""


def _records(path, qt=None, limit=None):
    out = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            if qt and rec["query_type"] != qt:
                continue
            out.append(rec)
            if limit and len(out) >= limit:
                break
    return out


def test_fresh_records_pass(code_corpus):
    report = verify_corpus(code_corpus, trials=30_000, seed=3, per_type_limit=2)
    assert report["summary"]["records"] == 26
    assert report["summary"]["errors"] == 0
    assert report["summary"]["failed"] == 0


def test_report_fields(code_corpus):
    rec = _records(code_corpus, qt="MP", limit=1)[0]
    result = run_record(rec, trials=30_000, seed=5)
    assert result.passed
    assert result.accepted > 0
    assert result.stderr is not None and result.stderr >= 0
    assert result.error is None
    d = result.to_dict()
    assert set(d) == {
        "id", "query_type", "estimate", "stderr", "exact",
        "passed", "accepted", "inconclusive", "error",
    }


def test_corrupted_probability_row_fails(code_corpus):
    # flattening every probability to 0.5 drags the statistic to 0.5, far
    # from any stored answer that is not already near 0.5
    recs = [
        r
        for r in _records(code_corpus, qt="MP")
        if abs(r["answer"]["value"] - 0.5) > 0.15
    ]
    assert recs, "need an MP record with answer away from 0.5"
    rec = dict(recs[0])
    rec["program_text"] = re.sub(r"0\.\d+", "0.5", rec["program_text"])
    result = run_record(rec, trials=30_000, seed=7)
    assert result.error is None
    assert not result.passed


def test_raising_program_is_hard_failure(code_corpus):
    rec = dict(_records(code_corpus, qt="ATE", limit=1)[0])
    rec["program_text"] = (
        "import random\n\ndef func_main(arg_0: int, rng: random.Random) -> int:\n"
        "    raise RuntimeError('boom')\n"
    )
    result = run_record(rec, trials=10_000, seed=9)
    assert not result.passed
    assert result.error and "boom" in result.error


def test_out_of_contract_return_is_hard_failure(code_corpus):
    rec = dict(_records(code_corpus, qt="MP", limit=1)[0])
    rec["program_text"] = (
        "import random\n\ndef func_main(rng: random.Random) -> int:\n    return 2\n"
    )
    result = run_record(rec, trials=10_000, seed=11)
    assert not result.passed
    assert result.error and "out-of-contract" in result.error


def test_low_acceptance_is_inconclusive(code_corpus):
    rec = dict(_records(code_corpus, qt="CP", limit=1)[0])
    rec["program_text"] = SENTINEL_PROGRAM
    result = run_record(rec, trials=20_000, seed=13)
    assert result.inconclusive
    assert not result.passed
    assert result.error is None


def test_restricted_namespace_blocks_imports():
    with pytest.raises(ImportError):
        load_program("import os\n\ndef func_main(rng):\n    return 0\n", "func_main")


def test_restricted_namespace_allows_random_and_typing():
    fn = load_program(
        "import random\nfrom typing import Optional\n\n"
        "def func_main(rng: random.Random) -> Optional[int]:\n"
        "    return 1 if rng.random() < 0.5 else 0\n",
        "func_main",
    )
    import random as _random

    assert fn(_random.Random(1)) in (0, 1)


def test_missing_entry_point_is_error(code_corpus):
    rec = dict(_records(code_corpus, qt="MP", limit=1)[0])
    rec["entry_point"] = "nonexistent"
    result = run_record(rec, trials=10_000, seed=15)
    assert result.error
