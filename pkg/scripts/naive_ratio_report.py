"""Measure per-type naive ratios with and without caps.

Reproduces the shortcut-rate table: uncapped ratios show how often sampling
lands on questions solvable by a degraded lower-level calculation; capped
ratios show the streaming gate holding each type at its target.

Usage: python scripts/naive_ratio_report.py [n_per_type] [seed]
"""

from __future__ import annotations

import random
import sys

from causalgen.graphs import sample_graph_pool
from causalgen.queries import DEFAULT_NAIVE_CAPS, generate_instances

TYPES = ("ATE", "CTE", "JTE", "ID", "BD", "FD", "CF", "ATT", "NIE", "NDE", "PN", "PS")


def main() -> None:
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 500
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 2024
    pool = sample_graph_pool(400, (3, 10), random.Random(seed)).dags
    print(f"{'type':5s} {'uncapped':>9s} {'capped':>8s} {'cap':>6s}")
    free_total = 0.0
    capped_total = 0.0
    for qt in TYPES:
        free = list(generate_instances(pool, qt, n, seed=seed + 1, naive_cap=None))
        capped = list(
            generate_instances(pool, qt, n, seed=seed + 2, naive_cap=DEFAULT_NAIVE_CAPS[qt])
        )
        fr = sum(i.flags.naive for i in free) / n
        cr = sum(i.flags.naive for i in capped) / n
        free_total += fr
        capped_total += cr
        cap = DEFAULT_NAIVE_CAPS[qt]
        print(f"{qt:5s} {fr:9.3f} {cr:8.3f} {cap if cap is not None else float('nan'):6.3f}")
    print(f"{'aggr':5s} {free_total / len(TYPES):9.3f} {capped_total / len(TYPES):8.3f}")


if __name__ == "__main__":
    main()
