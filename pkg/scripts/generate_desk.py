"""Build the desk-scale corpus (full-scale counts / 20) into ./corpus_desk.

Usage: python scripts/generate_desk.py [out_dir] [master_seed]
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from causalgen.builder import GenerationConfig, build


def main() -> None:
    out = Path(sys.argv[1]) if len(sys.argv) > 1 else Path("corpus_desk")
    config = GenerationConfig.desk()
    if len(sys.argv) > 2:
        config.master_seed = int(sys.argv[2])
    manifest = build(config, out)
    totals = {
        split: {form: sum(c.values()) for form, c in forms.items()}
        for split, forms in manifest.counts.items()
    }
    print(json.dumps({"out": str(out), "totals": totals}, indent=2, sort_keys=True))


if __name__ == "__main__":
    main()
