from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

import pytest

PROBABILISTIC = (
    "MP", "CP", "JP", "OD", "ATE", "CTE", "JTE",
    "CF", "ATT", "NIE", "NDE", "PN", "PS",
)


@pytest.fixture(scope="session")
def corpus_dir(tmp_path_factory) -> Path:
    """Build a small code-form corpus through the generator CLI; the verifier
    only ever touches the resulting JSONL files.
    """
    out = tmp_path_factory.mktemp("corpus")
    config = {
        "master_seed": 515151,
        "splits": ["train"],
        "graph_counts": {"train": 40},
        "size_range": [3, 10],
        "counts": {qt: {"symbolic": [20, 0], "code": [20, 0]} for qt in PROBABILISTIC},
    }
    cfg_path = out / "config.json"
    cfg_path.write_text(json.dumps(config))
    subprocess.run(
        [
            sys.executable,
            "-m",
            "causalgen.cli",
            "generate",
            "--config",
            str(cfg_path),
            "--out",
            str(out),
        ],
        check=True,
        capture_output=True,
    )
    return out


@pytest.fixture(scope="session")
def code_corpus(corpus_dir) -> Path:
    return corpus_dir / "train_code.jsonl"
