"""Collection-frequency statistics for variable-length n-grams.

Four interchangeable methods compute, over a local map/shuffle/reduce
engine, the set of all n-grams of bounded length whose corpus-wide
occurrence count reaches a floor: window counting, two frequency-pruned
variants (rescanning and posting-list joins), and single-pass suffix
aggregation. Extensions reduce the output to maximal/closed grams or
aggregate per-year time series. A brute-force oracle provides independent
verification on small inputs.
"""

from .apriori import run_apriori_index, run_apriori_scan
from .corpus import (
    Corpus,
    Dictionary,
    Document,
    TermSeq,
    build_dictionary,
    decode_sequence,
    encode_sequence,
    load_corpus,
    split_fragment,
    tokenize_and_split,
    write_corpus,
)
from .engine import CounterSet, EngineError, JobSpec, run_chain, run_job
from .extensions import (
    CLOSED,
    MAXIMAL,
    PrefixFilter,
    run_suffix_sigma_reduced,
    run_suffix_sigma_timeseries,
)
from .naive import run_naive
from .oracle import oracle_cf, oracle_sets, oracle_timeseries
from .pipeline import MethodResult
from .suffix import run_suffix_sigma

__version__ = "0.1.0"

__all__ = [
    "CLOSED",
    "Corpus",
    "CounterSet",
    "Dictionary",
    "Document",
    "EngineError",
    "JobSpec",
    "MAXIMAL",
    "MethodResult",
    "PrefixFilter",
    "TermSeq",
    "build_dictionary",
    "decode_sequence",
    "encode_sequence",
    "load_corpus",
    "oracle_cf",
    "oracle_sets",
    "oracle_timeseries",
    "run_apriori_index",
    "run_apriori_scan",
    "run_chain",
    "run_job",
    "run_naive",
    "run_suffix_sigma",
    "run_suffix_sigma_reduced",
    "run_suffix_sigma_timeseries",
    "split_fragment",
    "tokenize_and_split",
    "write_corpus",
]
