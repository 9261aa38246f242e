"""Render one instance of a chosen query type in all applicable forms.

Usage: python scripts/show_instance.py [query_type] [seed]
"""

from __future__ import annotations

import random
import sys

from causalgen.codegen import render_code, sample_code_style
from causalgen.graphs import sample_graph_pool
from causalgen.queries import GRAPH_ONLY, generate_instances
from causalgen.rng import derive_rng
from causalgen.symbolic import render_symbolic, sample_variant


def main() -> None:
    qtype = sys.argv[1] if len(sys.argv) > 1 else "CTE"
    seed = int(sys.argv[2]) if len(sys.argv) > 2 else 7
    pool = sample_graph_pool(50, (3, 10), random.Random(seed)).dags
    item = next(iter(generate_instances(pool, qtype, 1, seed=seed)))
    variant = sample_variant(derive_rng(item.seed, "render-sym"))
    print("=" * 72)
    print(render_symbolic(item.scm, item.query, item.retained, variant))
    print("=" * 72)
    print(f"answer: {item.truth.answer_text()}   flags: {item.flags}")
    if qtype not in GRAPH_ONLY:
        rng = derive_rng(item.seed, "render-code")
        style = sample_code_style(rng, item.flags.pruned)
        form = render_code(item.scm, item.query, item.retained, style, rng)
        print("=" * 72)
        print(form.full_text())


if __name__ == "__main__":
    main()
