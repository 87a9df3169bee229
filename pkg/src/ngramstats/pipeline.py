"""Plumbing shared by all counting methods.

Every method run starts with the same preliminary unigram-count job; its
output (terms at or above the frequency floor) drives document splitting, so
all methods see the identical split corpus and their shuffle counters stay
comparable. Count-style jobs share one value codec: a raw map emission
carries the fragment id as a varint, and the optional combiner replaces a
group of those with a single varint partial count, so reducers must total a
group as its cardinality or its sum depending on whether a combiner ran.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable

from .corpus import Corpus, TermSeq, encode_varint, read_varint
from .engine import CounterSet, JobSpec, run_job

UNIGRAM_JOB = "unigram-count"


def identity_sort_key(key: TermSeq) -> TermSeq:
    return key


def counting_combiner(key: TermSeq, values: list[bytes], emit) -> None:
    """Replace a task-local value group with one partial-count value."""
    emit(key, encode_varint(len(values)))


def make_group_total(combined: bool) -> Callable[[list[bytes]], int]:
    """Group size under the count codec: cardinality, or sum of partials."""
    if not combined:
        return len

    def total(values: list[bytes]) -> int:
        count = 0
        for value in values:
            count += read_varint(value)[0]
        return count

    return total


def unigram_counts(
    corpus: Corpus, min_count: int, *, workers: int = 1
) -> tuple[dict[TermSeq, int], CounterSet]:
    """One engine job counting unigrams, filtered at min_count."""

    def map_fn(record):
        fid, _, terms = record
        value = encode_varint(fid)
        return [((t,), value) for t in terms]

    total = make_group_total(True)

    def reduce_fn(key, values, emit, state):
        count = total(values)
        if count >= min_count:
            emit(key, count)

    spec = JobSpec(
        name=UNIGRAM_JOB,
        map_fn=map_fn,
        reduce_fn=reduce_fn,
        num_partitions=1,
        sort_key_fn=identity_sort_key,
        combiner_fn=counting_combiner,
    )
    result = run_job(spec, corpus.fragment_shards(), workers=workers)
    return dict(result.records()), result.counters


def prepare_split(
    corpus: Corpus, min_count: int, *, workers: int = 1
) -> tuple[Corpus, CounterSet]:
    """Split the corpus at infrequent terms found by the preliminary job."""
    stats, counters = unigram_counts(corpus, min_count, workers=workers)
    frequent = {key[0] for key in stats}
    return corpus.split(frequent), counters


@dataclass
class MethodResult:
    """Statistics plus per-job counters (preliminary job included)."""

    stats: dict[TermSeq, Any]
    jobs: list[CounterSet]
    intermediates: list[list[tuple[TermSeq, Any]]] = field(default_factory=list)

    def job(self, name: str, iteration: int | None = None) -> CounterSet:
        for counters in self.jobs:
            if counters.job == name and (iteration is None or counters.iteration == iteration):
                return counters
        raise KeyError(f"no counters for job {name!r} iteration {iteration!r}")

    def method_jobs(self) -> list[CounterSet]:
        return [c for c in self.jobs if c.job != UNIGRAM_JOB]

    def totals(self) -> CounterSet:
        return CounterSet.total(self.jobs)


def check_bounds(min_count: int, max_len: int | None) -> None:
    if min_count < 1:
        raise ValueError("min_count must be >= 1")
    if max_len is not None and max_len < 1:
        raise ValueError("max_len must be >= 1 (or None for unbounded)")
