"""Window counting: emit every n-gram occurrence, count and filter in reduce.

The straightforward extension of word counting to variable-length n-grams.
One job; the map emits one record per window of length up to the bound, so
its pre-combiner record count equals the summed collection frequency of
every n-gram within the bound.
"""

from __future__ import annotations

from .corpus import Corpus, encode_varint
from .engine import JobSpec, run_job
from .pipeline import (
    MethodResult,
    check_bounds,
    counting_combiner,
    identity_sort_key,
    make_group_total,
    prepare_split,
)

NAIVE_JOB = "naive-count"


def make_window_map(max_len: int | None):
    def map_fn(record):
        fid, _year, terms = record
        value = encode_varint(fid)
        n = len(terms)
        out = []
        append = out.append
        for b in range(n):
            hi = n if max_len is None else min(n, b + max_len)
            for e in range(b + 1, hi + 1):
                append((terms[b:e], value))
        return out

    return map_fn


def make_count_reduce(min_count: int, combined: bool):
    total = make_group_total(combined)

    def reduce_fn(key, values, emit, state):
        count = total(values)
        if count >= min_count:
            emit(key, count)

    return reduce_fn


def run_naive(
    corpus: Corpus,
    min_count: int,
    max_len: int | None,
    *,
    num_partitions: int = 1,
    workers: int = 1,
    combiner: bool = True,
) -> MethodResult:
    check_bounds(min_count, max_len)
    split, prelim = prepare_split(corpus, min_count, workers=workers)
    spec = JobSpec(
        name=NAIVE_JOB,
        map_fn=make_window_map(max_len),
        reduce_fn=make_count_reduce(min_count, combiner),
        num_partitions=num_partitions,
        sort_key_fn=identity_sort_key,
        combiner_fn=counting_combiner if combiner else None,
    )
    result = run_job(spec, split.fragment_shards(), workers=workers)
    return MethodResult(dict(result.records()), [prelim, result.counters])
