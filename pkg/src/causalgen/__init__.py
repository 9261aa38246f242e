"""Generation of verifiable causal-reasoning question corpora.

The pipeline samples sparse random DAGs, attaches binary conditional
probability tables, poses questions from 18 causal query types across the
association / intervention / counterfactual levels, computes exact ground
truth, filters shortcut-solvable ("causally naive") items, and renders each
item in symbolic, code, and natural-language forms.
"""

__version__ = "0.1.0"

from causalgen.graphs import Dag, canonical_form, sample_dag, sample_graph_pool
from causalgen.scm import Cpt, Scm, sample_cpts, to_response_model

__all__ = [
    "Dag",
    "Cpt",
    "Scm",
    "canonical_form",
    "sample_dag",
    "sample_graph_pool",
    "sample_cpts",
    "to_response_model",
    "__version__",
]
