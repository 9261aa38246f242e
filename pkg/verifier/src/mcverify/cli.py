"""CLI: verify code-form corpus records and write a JSON report."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from mcverify.runner import verify_corpus


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="mcverify",
        description="Execute code-form corpus programs and check their statistics.",
    )
    parser.add_argument("corpus", help="code-form corpus .jsonl")
    parser.add_argument("--trials", type=int, default=200_000)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--out", help="report path (default: stdout)")
    parser.add_argument("--per-type-limit", type=int, help="cap records per query type")
    parser.add_argument("--types", help="comma-separated query types to verify")
    args = parser.parse_args(argv)

    report = verify_corpus(
        Path(args.corpus),
        trials=args.trials,
        seed=args.seed,
        per_type_limit=args.per_type_limit,
        types=set(args.types.split(",")) if args.types else None,
    )
    blob = json.dumps(report, indent=2, sort_keys=True)
    if args.out:
        Path(args.out).write_text(blob, encoding="utf-8")
        print(json.dumps(report["summary"], sort_keys=True))
    else:
        print(blob)
    return 0 if report["summary"]["failed"] == 0 and report["summary"]["errors"] == 0 else 1


if __name__ == "__main__":
    sys.exit(main())
