"""Command-line surface: generate, stats, grade, validate, render-nl."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from causalgen.builder import (
    GenerationConfig,
    build,
    corpus_stats,
    grade,
    record_truth,
    render_nl_corpus,
    validate_corpus,
)
from causalgen.nl import GatewayConfig


def _load_config(path: str | None, preset: str | None) -> GenerationConfig:
    if path:
        return GenerationConfig.from_dict(json.loads(Path(path).read_text()))
    if preset == "full":
        return GenerationConfig.full_scale()
    return GenerationConfig.desk()


def cmd_generate(args: argparse.Namespace) -> int:
    config = _load_config(args.config, args.preset)
    if args.seed is not None:
        config.master_seed = args.seed
    manifest = build(config, Path(args.out))
    totals = {
        split: {form: sum(c.values()) for form, c in forms.items()}
        for split, forms in manifest.counts.items()
    }
    print(json.dumps({"out": args.out, "totals": totals}, indent=2, sort_keys=True))
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    stats = corpus_stats(Path(args.corpus))
    print(json.dumps(stats, indent=2, sort_keys=True))
    return 0


def cmd_grade(args: argparse.Namespace) -> int:
    gold_by_id = {}
    with open(args.corpus, encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            gold_by_id[rec["id"]] = record_truth(rec)
    total = 0
    correct = 0
    with open(args.predictions, encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            gold = gold_by_id.get(rec["id"])
            if gold is None:
                continue
            total += 1
            correct += grade(rec["prediction"], gold)
    accuracy = correct / total if total else 0.0
    print(json.dumps({"graded": total, "correct": correct, "accuracy": accuracy}))
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    report = validate_corpus(Path(args.corpus))
    if args.code_report:
        code = json.loads(Path(args.code_report).read_text())
        report["code_verification"] = {
            "records": len(code.get("results", [])),
            "passed": sum(1 for r in code.get("results", []) if r.get("passed")),
            "errors": [r for r in code.get("results", []) if r.get("error")],
        }
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0 if report["ok"] else 1


def cmd_render_nl(args: argparse.Namespace) -> int:
    config = _load_config(args.config, args.preset)
    if args.passages:
        config.passages_path = args.passages
    gateway = GatewayConfig(
        endpoint=args.endpoint,
        model=args.model,
        credential_env=args.credential_env,
        cache_dir=Path(args.cache_dir) if args.cache_dir else None,
        stub_path=Path(args.stub) if args.stub else None,
    )
    splits = tuple(args.splits.split(",")) if args.splits else None
    report = render_nl_corpus(config, Path(args.out), gateway, splits)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="causalgen",
        description="Generate and check verifiable causal-reasoning corpora.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="build symbolic and code corpora")
    p.add_argument("--config", help="JSON config path")
    p.add_argument("--preset", choices=("desk", "full"), default="desk")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--seed", type=int, help="override master seed")
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("stats", help="corpus statistics")
    p.add_argument("corpus", help="corpus .jsonl path")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("grade", help="grade predictions against a corpus")
    p.add_argument("predictions", help='JSONL of {"id", "prediction"}')
    p.add_argument("corpus", help="corpus .jsonl with gold answers")
    p.set_defaults(func=cmd_grade)

    p = sub.add_parser("validate", help="re-solve every record and compare")
    p.add_argument("corpus", help="corpus .jsonl path")
    p.add_argument("--code-report", help="verification report from the code runner")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("render-nl", help="render the NL form via the gateway")
    p.add_argument("--config", help="JSON config path")
    p.add_argument("--preset", choices=("desk", "full"), default="desk")
    p.add_argument("--out", required=True, help="directory with built corpora")
    p.add_argument("--passages", help="line-delimited passages file")
    p.add_argument("--endpoint", default=GatewayConfig.endpoint)
    p.add_argument("--model", default=GatewayConfig.model)
    p.add_argument("--credential-env", default=GatewayConfig.credential_env)
    p.add_argument("--cache-dir", help="reply cache directory")
    p.add_argument("--stub", help="stub replies file (offline mode)")
    p.add_argument("--splits", help="comma-separated splits (default: all)")
    p.set_defaults(func=cmd_render_nl)

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
