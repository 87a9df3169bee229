"""Suffix emission with order-exploiting aggregation: one job, two stacks.

The map emits a single record per term occurrence: the suffix starting
there, truncated to the length bound. Every n-gram is some prefix of such a
suffix, so a reducer that sees all suffixes sharing a first term can count
all n-grams starting with that term. Routing by first term alone guarantees
that; the sort order makes the bookkeeping cheap.

Suffix sort order, as the reducers see it:

  * at the first differing position, the term ranked greater comes first
    (term rank here is the dictionary's frequency rank, i.e. ascending id);
  * a sequence comes before every proper prefix of itself;

so all suffixes extending a gram arrive in one contiguous block, immediately
before the gram itself would arrive. A gram's count is therefore final the
moment the incoming suffix no longer has it as a prefix, which is what the
two synchronized stacks exploit: `terms` holds the terms of the most recent
suffix, `counts` one pending tally per stack level. Between reduce calls the
stacks have equal height m, and counts[i] + ... + counts[m-1] is how often
the gram terms[0..i] has occurred so far. Popping a level finalizes exactly
one gram, emits it if it clears the frequency floor, and folds its tally
into the level below.
"""

from __future__ import annotations

from typing import Any, Callable

from .corpus import Corpus, TermSeq, encode_varint
from .engine import JobSpec, run_job
from .pipeline import (
    MethodResult,
    check_bounds,
    counting_combiner,
    make_group_total,
    prepare_split,
)

SUFFIX_JOB = "suffix-sigma"

_END = float("inf")  # sorts after every term id, so longer keys come first


def compare_suffix_order(r: TermSeq, s: TermSeq) -> int:
    """Total order: ascending term id at the first difference, and a
    sequence before its own proper prefixes. Negative means r first."""
    for a, b in zip(r, s):
        if a != b:
            return -1 if a < b else 1
    return len(s) - len(r)


def suffix_sort_key(key: TermSeq) -> tuple:
    """Sort key inducing exactly compare_suffix_order under tuple order."""
    return key + (_END,)


def make_first_term_partition(num_partitions: int) -> Callable[[TermSeq], int]:
    """Route a key by its first term only; stable across runs."""

    def partition_fn(key: TermSeq) -> int:
        if not key:
            raise ValueError("empty key")
        return key[0] % num_partitions

    return partition_fn


def make_suffix_map(max_len: int | None):
    if max_len is None:

        def map_fn(record):
            fid, _year, terms = record
            value = encode_varint(fid)
            return [(terms[b:], value) for b in range(len(terms))]

    else:

        def map_fn(record):
            fid, _year, terms = record
            value = encode_varint(fid)
            return [(terms[b : b + max_len], value) for b in range(len(terms))]

    return map_fn


class StackObserver:
    """Hook for inspecting reducer bookkeeping; default does nothing."""

    def stacks(self, stage: str, terms: list[int], counts: list) -> None:
        pass

    def finalized(self, gram: TermSeq, count, emitted: bool) -> None:
        pass


class CountStacks:
    """The two-stack aggregator for integer occurrence counts.

    `consume` must be fed keys in suffix sort order; `flush` drains the
    stacks once the input is exhausted. Emissions go through `sink`, which
    the owner binds before the first call.
    """

    __slots__ = ("terms", "counts", "min_count", "sink", "observer")

    def __init__(self, min_count: int, observer: StackObserver | None = None):
        self.terms: list[int] = []
        self.counts: list[int] = []
        self.min_count = min_count
        self.sink: Callable[[TermSeq, int], None] | None = None
        self.observer = observer

    def consume(self, key: TermSeq, amount: int) -> None:
        if not key:
            raise ValueError("empty key")
        terms = self.terms
        counts = self.counts
        lcp = 0
        limit = min(len(key), len(terms))
        while lcp < limit and key[lcp] == terms[lcp]:
            lcp += 1
        while len(terms) > lcp:
            self._pop_level()
        if self.observer is not None:
            self.observer.stacks("popped", list(terms), list(counts))
        if len(terms) == len(key):
            counts[-1] += amount
        else:
            for i in range(lcp, len(key) - 1):
                terms.append(key[i])
                counts.append(0)
            terms.append(key[-1])
            counts.append(amount)
        if self.observer is not None:
            self.observer.stacks("settled", list(terms), list(counts))

    def flush(self) -> None:
        while self.terms:
            self._pop_level()
        if self.observer is not None:
            self.observer.stacks("flushed", [], [])

    def _pop_level(self) -> None:
        counts = self.counts
        count = counts.pop()
        emitted = count >= self.min_count
        if emitted or self.observer is not None:
            gram = tuple(self.terms)
            if emitted:
                self.sink(gram, count)
            if self.observer is not None:
                self.observer.finalized(gram, count, emitted)
        self.terms.pop()
        if counts:
            counts[-1] += count


class _PartitionState:
    __slots__ = ("stacks", "prev_sort_key", "filter")

    def __init__(self, stacks, emission_filter):
        self.stacks = stacks
        self.prev_sort_key = None
        self.filter = emission_filter


def _bind_sink(state: _PartitionState, emit) -> None:
    if state.stacks.sink is not None:
        return
    if state.filter is None:
        state.stacks.sink = emit
    else:
        admit = state.filter.admit

        def sink(gram, count):
            if admit(gram, count):
                emit(gram, count)

        state.stacks.sink = sink


def make_suffix_job(
    min_count: int,
    max_len: int | None,
    *,
    num_partitions: int = 1,
    combiner: bool = True,
    emission_filter_factory: Callable[[], Any] | None = None,
    observer_factory: Callable[[], StackObserver] | None = None,
    iteration: int | None = None,
) -> JobSpec:
    total = make_group_total(combiner)

    def state_fn():
        observer = observer_factory() if observer_factory is not None else None
        stacks = CountStacks(min_count, observer)
        emission_filter = (
            emission_filter_factory() if emission_filter_factory is not None else None
        )
        return _PartitionState(stacks, emission_filter)

    def reduce_fn(key, values, emit, state):
        sort_key = suffix_sort_key(key)
        if state.prev_sort_key is not None and sort_key <= state.prev_sort_key:
            raise ValueError("unsorted reduce input")
        state.prev_sort_key = sort_key
        _bind_sink(state, emit)
        state.stacks.consume(key, total(values))

    def cleanup_fn(state, emit):
        _bind_sink(state, emit)
        state.stacks.flush()

    return JobSpec(
        name=SUFFIX_JOB,
        map_fn=make_suffix_map(max_len),
        reduce_fn=reduce_fn,
        num_partitions=num_partitions,
        partition_fn=make_first_term_partition(num_partitions),
        compare_fn=compare_suffix_order,
        sort_key_fn=suffix_sort_key,
        combiner_fn=counting_combiner if combiner else None,
        state_fn=state_fn,
        cleanup_fn=cleanup_fn,
        iteration=iteration,
    )


def run_suffix_sigma(
    corpus: Corpus,
    min_count: int,
    max_len: int | None,
    *,
    num_partitions: int = 1,
    workers: int = 1,
    combiner: bool = True,
    emission_filter_factory: Callable[[], Any] | None = None,
    observer_factory: Callable[[], StackObserver] | None = None,
) -> MethodResult:
    check_bounds(min_count, max_len)
    split, prelim = prepare_split(corpus, min_count, workers=workers)
    spec = make_suffix_job(
        min_count,
        max_len,
        num_partitions=num_partitions,
        combiner=combiner,
        emission_filter_factory=emission_filter_factory,
        observer_factory=observer_factory,
    )
    result = run_job(spec, split.fragment_shards(), workers=workers)
    return MethodResult(dict(result.records()), [prelim, result.counters])
