"""Corpus orchestration: seeded builds, serialization, grading, statistics.

A build walks (split, query type) streams, renders each accepted instance in
the requested forms, and writes line-delimited JSON corpora per (split,
form) plus a manifest echoing the config, counts, naive ratios, and
shortfalls.  Instances carry their full provenance (complete CPTs, graph
key, per-instance seed) so every record can be re-solved and regenerated.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path

from causalgen import __version__
from causalgen.codegen import render_code, sample_code_style
from causalgen.graphs import load_or_build_pool
from causalgen.nl import (
    GatewayConfig,
    TranslationFailure,
    load_passages,
    render_nl_instance,
)
from causalgen.queries import (
    DEFAULT_NAIVE_CAPS,
    GRAPH_ONLY,
    QUERY_TYPES,
    GroundTruth,
    QuerySpec,
    generate_instances,
    ground_truth,
)
from causalgen.rng import derive_rng, derive_seed
from causalgen.scm import Scm
from causalgen.symbolic import render_symbolic, sample_variant

FORMS = ("symbolic", "code", "nl")

# per-type (train, eval) targets at full scale; graph-only types are
# symbolic-only
FULL_COUNTS: dict[str, dict[str, tuple[int, int]]] = {
    "MP": {"symbolic": (500, 100), "code": (500, 100), "nl": (500, 100)},
    "CP": {"symbolic": (500, 100), "code": (500, 100), "nl": (500, 100)},
    "JP": {"symbolic": (500, 100), "code": (500, 100), "nl": (500, 100)},
    "OD": {"symbolic": (500, 100), "code": (500, 100), "nl": (500, 100)},
    "IT": {"symbolic": (1500, 300)},
    "MB": {"symbolic": (1500, 300)},
    "ATE": {"symbolic": (2000, 400), "code": (2000, 400), "nl": (2000, 400)},
    "CTE": {"symbolic": (1960, 392), "code": (1960, 392), "nl": (1960, 392)},
    "JTE": {"symbolic": (1960, 392), "code": (1960, 392), "nl": (1960, 392)},
    "ID": {"symbolic": (1500, 300)},
    "FD": {"symbolic": (1500, 300)},
    "BD": {"symbolic": (1500, 300)},
    "CF": {"symbolic": (1960, 392), "code": (1960, 392), "nl": (1960, 392)},
    "ATT": {"symbolic": (2000, 400), "code": (2000, 400), "nl": (2000, 400)},
    "NIE": {"symbolic": (1960, 392), "code": (1960, 392), "nl": (1960, 392)},
    "NDE": {"symbolic": (1960, 392), "code": (1960, 392), "nl": (1960, 392)},
    "PN": {"symbolic": (1960, 392), "code": (1960, 392), "nl": (1960, 392)},
    "PS": {"symbolic": (1960, 392), "code": (1960, 392), "nl": (1960, 392)},
}

FULL_GRAPHS = {"train": 4238, "eval": 372}


@dataclass
class GenerationConfig:
    master_seed: int = 20240
    splits: tuple[str, ...] = ("train", "eval")
    graph_counts: dict = field(default_factory=lambda: dict(FULL_GRAPHS))
    size_range: tuple[int, int] = (3, 10)
    counts: dict = field(default_factory=lambda: {})
    naive_caps: dict = field(default_factory=lambda: dict(DEFAULT_NAIVE_CAPS))
    pruning_prob: float = 0.5
    passages_path: str | None = None
    nl_retries: int = 3

    def count_for(self, split: str, qtype: str, form: str) -> int:
        split_idx = 0 if split == "train" else 1
        entry = self.counts.get(qtype, {})
        if form not in entry:
            return 0
        return entry[form][split_idx]

    def to_dict(self) -> dict:
        return {
            "master_seed": self.master_seed,
            "splits": list(self.splits),
            "graph_counts": dict(self.graph_counts),
            "size_range": list(self.size_range),
            "counts": {
                qt: {f: list(v) for f, v in entry.items()}
                for qt, entry in self.counts.items()
            },
            "naive_caps": dict(self.naive_caps),
            "pruning_prob": self.pruning_prob,
            "passages_path": self.passages_path,
            "nl_retries": self.nl_retries,
        }

    @staticmethod
    def from_dict(data: dict) -> "GenerationConfig":
        cfg = GenerationConfig()
        cfg.master_seed = data.get("master_seed", cfg.master_seed)
        cfg.splits = tuple(data.get("splits", cfg.splits))
        cfg.graph_counts = dict(data.get("graph_counts", cfg.graph_counts))
        cfg.size_range = tuple(data.get("size_range", cfg.size_range))
        cfg.counts = {
            qt: {f: tuple(v) for f, v in entry.items()}
            for qt, entry in data.get("counts", {}).items()
        }
        caps = data.get("naive_caps")
        if caps is not None:
            cfg.naive_caps = {k: caps.get(k) for k in caps}
        cfg.pruning_prob = data.get("pruning_prob", cfg.pruning_prob)
        cfg.passages_path = data.get("passages_path")
        cfg.nl_retries = data.get("nl_retries", cfg.nl_retries)
        return cfg

    @staticmethod
    def full_scale() -> "GenerationConfig":
        cfg = GenerationConfig()
        cfg.counts = {qt: dict(entry) for qt, entry in FULL_COUNTS.items()}
        return cfg

    @staticmethod
    def desk(scale: int = 20) -> "GenerationConfig":
        cfg = GenerationConfig.full_scale()
        cfg.counts = {
            qt: {
                f: (max(1, round(tr / scale)), max(1, round(ev / scale)))
                for f, (tr, ev) in entry.items()
            }
            for qt, entry in cfg.counts.items()
        }
        cfg.graph_counts = {
            s: max(8, round(n / scale)) for s, n in cfg.graph_counts.items()
        }
        return cfg


# ---------------------------------------------------------------------------
# record (de)serialization


def record_to_json(rec: dict) -> str:
    return json.dumps(rec, sort_keys=True, separators=(",", ":"))


def _base_record(item, split: str, qtype: str, idx: int, graph_key: str) -> dict:
    return {
        "base_id": f"{split}-{qtype}-{idx:05d}",
        "query_type": qtype,
        "answer": {"kind": item.truth.kind, "value": item.truth.value},
        "scm": item.scm.to_dict(keep=item.retained),
        "provenance": {
            "scm": item.scm.to_dict(),
            "graph_key": graph_key,
            "graph_index": item.graph_index,
        },
        "roles": item.query.to_dict(),
        "flags": {
            "naive": item.flags.naive,
            "pruned": item.flags.pruned,
            "abnormal_rejections": item.flags.abnormal_rejections,
        },
        "seed": item.seed,
    }


def record_scm(rec: dict) -> Scm:
    return Scm.from_dict(rec["provenance"]["scm"])


def record_query(rec: dict) -> QuerySpec:
    return QuerySpec.from_dict(rec["roles"])


def record_truth(rec: dict) -> GroundTruth:
    ans = rec["answer"]
    return GroundTruth(ans["kind"], ans["value"])


# ---------------------------------------------------------------------------
# build


@dataclass
class Manifest:
    tool_version: str
    master_seed: int
    config: dict
    counts: dict
    naive_ratios: dict
    shortfalls: dict

    def to_dict(self) -> dict:
        return {
            "tool_version": self.tool_version,
            "master_seed": self.master_seed,
            "config": self.config,
            "counts": self.counts,
            "naive_ratios": self.naive_ratios,
            "shortfalls": self.shortfalls,
        }


def build(config: GenerationConfig, out_dir: Path) -> Manifest:
    """Generate symbolic and code corpora for every split; NL rendering runs
    separately through the gateway (see ``render_nl_corpus``).
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    counts: dict = {}
    naive_ratios: dict = {}
    shortfalls: dict = {"pools": {}}
    exclude: set[bytes] = set()
    for split in config.splits:
        pool = load_or_build_pool(
            out_dir / f"{split}_graphs.jsonl",
            config.graph_counts[split],
            config.size_range,
            derive_seed(config.master_seed, "graphs", split),
            exclude=exclude,
        )
        keys = pool.keys
        exclude |= set(keys)
        if pool.missing:
            shortfalls["pools"][split] = pool.shortfall_report()
        writers = {
            form: open(out_dir / f"{split}_{form}.jsonl", "w", encoding="utf-8")
            for form in ("symbolic", "code")
        }
        split_counts = {"symbolic": {}, "code": {}}
        split_naive: dict = {}
        for qtype in QUERY_TYPES:
            n_sym = config.count_for(split, qtype, "symbolic")
            n_code = config.count_for(split, qtype, "code") if qtype not in GRAPH_ONLY else 0
            need = max(n_sym, n_code)
            if need == 0:
                continue
            stream_seed = derive_seed(config.master_seed, split, qtype)
            naive_count = 0
            produced = 0
            for idx, item in enumerate(
                generate_instances(
                    pool.dags,
                    qtype,
                    need,
                    stream_seed,
                    naive_cap=config.naive_caps.get(qtype),
                    prune_prob=config.pruning_prob,
                )
            ):
                graph_key = keys[item.graph_index].hex()
                base = _base_record(item, split, qtype, idx, graph_key)
                produced += 1
                naive_count += item.flags.naive
                if idx < n_sym:
                    variant = sample_variant(derive_rng(item.seed, "render-sym"))
                    rec = dict(base)
                    rec["id"] = base["base_id"] + "-symbolic"
                    rec["form"] = "symbolic"
                    rec["render_variant"] = variant.to_dict()
                    rec["text"] = render_symbolic(
                        item.scm, item.query, item.retained, variant
                    )
                    writers["symbolic"].write(record_to_json(rec) + "\n")
                if idx < n_code:
                    rng = derive_rng(item.seed, "render-code")
                    style = sample_code_style(rng, item.flags.pruned)
                    form = render_code(item.scm, item.query, item.retained, style, rng)
                    rec = dict(base)
                    rec["id"] = base["base_id"] + "-code"
                    rec["form"] = "code"
                    rec["render_variant"] = style.to_dict()
                    rec["program_text"] = form.program_text
                    rec["query_text"] = form.query_text
                    rec["entry_point"] = form.entry_point
                    rec["io_contract"] = form.io_contract
                    rec["text"] = form.full_text()
                    writers["code"].write(record_to_json(rec) + "\n")
            split_counts["symbolic"][qtype] = min(n_sym, produced)
            split_counts["code"][qtype] = min(n_code, produced)
            if produced:
                split_naive[qtype] = naive_count / produced
        for w in writers.values():
            w.close()
        counts[split] = split_counts
        naive_ratios[split] = split_naive
    manifest = Manifest(
        tool_version=__version__,
        master_seed=config.master_seed,
        config=config.to_dict(),
        counts=counts,
        naive_ratios=naive_ratios,
        shortfalls=shortfalls,
    )
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest.to_dict(), indent=2, sort_keys=True), encoding="utf-8"
    )
    return manifest


# ---------------------------------------------------------------------------
# NL corpus rendering (separate pass; needs a gateway or stub)


def render_nl_corpus(
    config: GenerationConfig,
    out_dir: Path,
    gateway: GatewayConfig,
    splits: tuple[str, ...] | None = None,
) -> dict:
    """Render the NL form for already-built corpora; returns per-split
    shortfall report and updates the manifest.
    """
    if config.passages_path is None:
        raise ValueError("config.passages_path required for NL rendering")
    passages = load_passages(Path(config.passages_path))
    report: dict = {}
    manifest_path = out_dir / "manifest.json"
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    for split in splits or config.splits:
        targets = {
            qt: config.count_for(split, qt, "nl")
            for qt in QUERY_TYPES
            if qt not in GRAPH_ONLY and config.count_for(split, qt, "nl") > 0
        }
        remaining = dict(targets)
        produced: dict[str, int] = {qt: 0 for qt in targets}
        failures: dict[str, int] = {qt: 0 for qt in targets}
        out_path = out_dir / f"{split}_nl.jsonl"
        with open(out_dir / f"{split}_symbolic.jsonl", encoding="utf-8") as src, open(
            out_path, "w", encoding="utf-8"
        ) as dst:
            for line in src:
                rec = json.loads(line)
                qt = rec["query_type"]
                if remaining.get(qt, 0) <= 0:
                    continue
                remaining[qt] -= 1
                scm = record_scm(rec)
                query = record_query(rec)
                retained = {int(v) for v in rec["scm"]["cpts"]}
                rng = derive_rng(rec["seed"], "render-nl")
                passage = passages[rng.randrange(len(passages))]
                try:
                    text, entity_map, _ = render_nl_instance(
                        scm,
                        query,
                        retained,
                        passage,
                        gateway,
                        rec["flags"]["pruned"],
                        retries=config.nl_retries,
                    )
                except TranslationFailure:
                    failures[qt] += 1
                    continue
                nl_rec = dict(rec)
                nl_rec["id"] = rec["base_id"] + "-nl"
                nl_rec["form"] = "nl"
                nl_rec["text"] = text
                nl_rec["render_variant"] = {
                    "passage_id": passage.id,
                    "passage_source": passage.source,
                    "entities": [list(e) for e in entity_map.entries],
                }
                dst.write(record_to_json(nl_rec) + "\n")
                produced[qt] += 1
        report[split] = {
            "produced": produced,
            "failures": failures,
            "shortfall": {
                qt: targets[qt] - produced[qt]
                for qt in targets
                if targets[qt] - produced[qt] > 0
            },
        }
        manifest["counts"].setdefault(split, {})["nl"] = produced
        manifest.setdefault("shortfalls", {}).setdefault(split, {})["nl"] = report[
            split
        ]["shortfall"]
    manifest_path.write_text(
        json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
    )
    return report


# ---------------------------------------------------------------------------
# grading


_NUMBER_RE = re.compile(r"-?\d+(?:\.\d+)?(?:[eE][-+]?\d+)?")
_YESNO_RE = re.compile(r"\b(yes|no)\b", re.IGNORECASE)


def grade(prediction_text: str, gold: GroundTruth) -> bool:
    """Extract the final answer (last number or yes/no token) and compare:
    numeric predictions are correct iff they round (half-up, 4 decimals) to
    the gold value; unparseable predictions are incorrect.
    """
    if gold.kind == "boolean":
        matches = _YESNO_RE.findall(prediction_text)
        if not matches:
            return False
        return (matches[-1].lower() == "yes") == bool(gold.value)
    matches = _NUMBER_RE.findall(prediction_text)
    if not matches:
        return False
    try:
        value = float(matches[-1])
    except ValueError:
        return False
    rounded = float(
        Decimal(repr(value)).quantize(Decimal("0.0001"), rounding=ROUND_HALF_UP)
    )
    return rounded == gold.value


# ---------------------------------------------------------------------------
# statistics and validation


def corpus_stats(path: Path) -> dict:
    """Counts, naive ratios, precision histogram, pruned fraction, and
    yes/no balance, straight from a corpus file.
    """
    counts: dict[str, int] = {}
    naive: dict[str, int] = {}
    pruned = 0
    total = 0
    precisions: dict[int, int] = {1: 0, 2: 0, 3: 0, 4: 0}
    yes: dict[str, list[int]] = {}
    errors: list[int] = []
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            try:
                rec = json.loads(line)
                qt = rec["query_type"]
                counts[qt] = counts.get(qt, 0) + 1
                naive[qt] = naive.get(qt, 0) + bool(rec["flags"]["naive"])
                pruned += bool(rec["flags"]["pruned"])
                precisions[rec["scm"]["precision"]] += 1
                total += 1
                if rec["answer"]["kind"] == "boolean":
                    yes.setdefault(qt, []).append(1 if rec["answer"]["value"] else 0)
            except (KeyError, ValueError) as exc:
                errors.append(lineno)
    if errors:
        raise ValueError(f"malformed records at lines {errors[:20]}")
    return {
        "total": total,
        "counts": counts,
        "naive_ratios": {
            qt: naive[qt] / counts[qt] for qt in counts if counts[qt]
        },
        "pruned_fraction": pruned / total if total else 0.0,
        "precision_histogram": {
            d: precisions[d] / total if total else 0.0 for d in precisions
        },
        "yes_balance": {qt: sum(v) / len(v) for qt, v in yes.items()},
    }


def validate_corpus(path: Path) -> dict:
    """Re-solve every record from its provenance and compare answers."""
    checked = 0
    failures: list[dict] = []
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            rec = json.loads(line)
            truth = ground_truth(record_scm(rec), record_query(rec))
            checked += 1
            stored = record_truth(rec)
            if truth != stored:
                failures.append(
                    {"id": rec["id"], "stored": stored.value, "resolved": truth.value}
                )
    return {"checked": checked, "failures": failures, "ok": not failures}
