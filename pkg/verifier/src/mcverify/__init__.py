"""Execution-side verification of code-form causal corpus records.

Loads each record's emitted program in a restricted namespace, runs it many
times with a seeded random stream, computes the statistic its question asks
about, and checks agreement with the stored exact answer.
"""

__version__ = "0.1.0"

from mcverify.runner import VerifyResult, run_record, verify_corpus

__all__ = ["VerifyResult", "run_record", "verify_corpus", "__version__"]
