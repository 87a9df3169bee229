"""Output reduction and richer aggregates on top of the suffix method.

Maximal / closed reduction runs in two passes. Pass one is the ordinary
suffix job with a filter on the emission stream of each reduce partition:
because grams finalize in suffix sort order, every gram subsumed by a
longer emitted gram with the same prefix pops immediately after it, so
comparing against the last admitted gram suffices to drop prefix-subsumed
(or, for closedness, prefix-subsumed equal-count) grams. Pass two reverses
every surviving gram and repeats the same filtering keyed on the reversed
form, which removes suffix-subsumed grams; survivors are re-reversed.

The time-series variant replaces the integer tally per stack level with a
sparse year -> count map, aggregated the same lazy way; a gram qualifies
when its series total reaches the frequency floor.
"""

from __future__ import annotations

from typing import Callable

from .corpus import Corpus, TermSeq, encode_varint, read_varint
from .engine import JobSpec, run_job
from .pipeline import MethodResult, check_bounds, prepare_split
from .suffix import (
    StackObserver,
    _PartitionState,
    compare_suffix_order,
    make_first_term_partition,
    run_suffix_sigma,
    suffix_sort_key,
)

POST_FILTER_JOB = "reverse-post-filter"
TIMESERIES_JOB = "suffix-sigma-timeseries"

MAXIMAL = "maximal"
CLOSED = "closed"

_POST_FILTER_SHARD_SIZE = 4096


class PrefixFilter:
    """Drop grams subsumed by the previously admitted gram.

    In maximal mode a gram is dropped when it is a prefix of the last
    admitted gram; in closed mode only when it also has the same count.
    The first gram of a stream always passes.
    """

    __slots__ = ("require_equal_count", "last_gram", "last_count")

    def __init__(self, mode: str):
        if mode not in (MAXIMAL, CLOSED):
            raise ValueError(f"unknown filter mode {mode!r}")
        self.require_equal_count = mode == CLOSED
        self.last_gram: TermSeq | None = None
        self.last_count = None

    def admit(self, gram: TermSeq, count) -> bool:
        last = self.last_gram
        if last is not None and len(gram) <= len(last) and last[: len(gram)] == gram:
            if not self.require_equal_count or count == self.last_count:
                return False
        self.last_gram = gram
        self.last_count = count
        return True


def run_reverse_post_filter(
    records: list[tuple[TermSeq, int]],
    mode: str,
    *,
    num_partitions: int = 1,
    workers: int = 1,
):
    """One job: reverse grams, re-sort, filter again, re-reverse survivors."""

    def map_fn(record):
        gram, count = record
        return [(gram[::-1], encode_varint(count))]

    def state_fn():
        return PrefixFilter(mode)

    def reduce_fn(key, values, emit, state):
        count = read_varint(values[0])[0]
        if state.admit(key, count):
            emit(key[::-1], count)

    spec = JobSpec(
        name=POST_FILTER_JOB,
        map_fn=map_fn,
        reduce_fn=reduce_fn,
        num_partitions=num_partitions,
        partition_fn=make_first_term_partition(num_partitions),
        compare_fn=compare_suffix_order,
        sort_key_fn=suffix_sort_key,
        state_fn=state_fn,
    )
    shards = [
        records[i : i + _POST_FILTER_SHARD_SIZE]
        for i in range(0, len(records), _POST_FILTER_SHARD_SIZE)
    ] or [[]]
    return run_job(spec, shards, workers=workers)


def run_suffix_sigma_reduced(
    corpus: Corpus,
    min_count: int,
    max_len: int | None,
    mode: str,
    *,
    num_partitions: int = 1,
    workers: int = 1,
    combiner: bool = True,
) -> MethodResult:
    """Suffix run reduced to the maximal or closed gram set."""
    first = run_suffix_sigma(
        corpus,
        min_count,
        max_len,
        num_partitions=num_partitions,
        workers=workers,
        combiner=combiner,
        emission_filter_factory=lambda: PrefixFilter(mode),
    )
    second = run_reverse_post_filter(
        sorted(first.stats.items()),
        mode,
        num_partitions=num_partitions,
        workers=workers,
    )
    return MethodResult(dict(second.records()), first.jobs + [second.counters])


# ---------------------------------------------------------------------------
# Time series
# ---------------------------------------------------------------------------

TimeSeries = dict[int, int]  # sparse year -> count, no zero entries


def series_total(series: TimeSeries) -> int:
    return sum(series.values())


def encode_series(series: TimeSeries) -> bytes:
    out = bytearray(encode_varint(len(series)))
    for year in sorted(series):
        out += encode_varint(year)
        out += encode_varint(series[year])
    return bytes(out)


def decode_series(data: bytes) -> TimeSeries:
    count, pos = read_varint(data)
    series = {}
    for _ in range(count):
        year, pos = read_varint(data, pos)
        n, pos = read_varint(data, pos)
        series[year] = n
    if pos != len(data):
        raise ValueError("corrupt encoding")
    return series


class SeriesStacks:
    """Two-stack aggregator over sparse year -> count series."""

    __slots__ = ("terms", "series", "min_count", "sink", "observer")

    def __init__(self, min_count: int, observer: StackObserver | None = None):
        self.terms: list[int] = []
        self.series: list[TimeSeries] = []
        self.min_count = min_count
        self.sink: Callable[[TermSeq, TimeSeries], None] | None = None
        self.observer = observer

    def consume(self, key: TermSeq, amounts: TimeSeries) -> None:
        if not key:
            raise ValueError("empty key")
        terms = self.terms
        series = self.series
        lcp = 0
        limit = min(len(key), len(terms))
        while lcp < limit and key[lcp] == terms[lcp]:
            lcp += 1
        while len(terms) > lcp:
            self._pop_level()
        if self.observer is not None:
            self.observer.stacks("popped", list(terms), [dict(s) for s in series])
        if len(terms) == len(key):
            top = series[-1]
            for year, count in amounts.items():
                top[year] = top.get(year, 0) + count
        else:
            for i in range(lcp, len(key) - 1):
                terms.append(key[i])
                series.append({})
            terms.append(key[-1])
            series.append(dict(amounts))
        if self.observer is not None:
            self.observer.stacks("settled", list(terms), [dict(s) for s in series])

    def flush(self) -> None:
        while self.terms:
            self._pop_level()

    def _pop_level(self) -> None:
        finished = self.series.pop()
        gram = tuple(self.terms)
        emitted = series_total(finished) >= self.min_count
        if emitted:
            self.sink(gram, finished)
        if self.observer is not None:
            self.observer.finalized(gram, finished, emitted)
        self.terms.pop()
        if self.series:
            below = self.series[-1]
            for year, count in finished.items():
                below[year] = below.get(year, 0) + count


def _series_combiner(key, values, emit):
    partial: TimeSeries = {}
    for value in values:
        _fid, pos = read_varint(value)
        year, _ = read_varint(value, pos)
        partial[year] = partial.get(year, 0) + 1
    emit(key, encode_series(partial))


def _make_series_totals(combined: bool):
    if combined:

        def totals(values):
            merged: TimeSeries = {}
            for value in values:
                for year, count in decode_series(value).items():
                    merged[year] = merged.get(year, 0) + count
            return merged

    else:

        def totals(values):
            merged: TimeSeries = {}
            for value in values:
                _fid, pos = read_varint(value)
                year, _ = read_varint(value, pos)
                merged[year] = merged.get(year, 0) + 1
            return merged

    return totals


def run_suffix_sigma_timeseries(
    corpus: Corpus,
    min_count: int,
    max_len: int | None,
    *,
    num_partitions: int = 1,
    workers: int = 1,
    combiner: bool = True,
) -> MethodResult:
    """Suffix run aggregating per-year occurrence series instead of counts.

    Every document must carry a year; the map value is (fragment id, year).
    """
    check_bounds(min_count, max_len)
    if not corpus.all_years_present():
        raise ValueError("untimed document")
    split, prelim = prepare_split(corpus, min_count, workers=workers)

    def map_fn(record):
        fid, year, terms = record
        value = encode_varint(fid) + encode_varint(year)
        if max_len is None:
            return [(terms[b:], value) for b in range(len(terms))]
        return [(terms[b : b + max_len], value) for b in range(len(terms))]

    totals = _make_series_totals(combiner)

    def state_fn():
        return _PartitionState(SeriesStacks(min_count), None)

    def reduce_fn(key, values, emit, state):
        sort_key = suffix_sort_key(key)
        if state.prev_sort_key is not None and sort_key <= state.prev_sort_key:
            raise ValueError("unsorted reduce input")
        state.prev_sort_key = sort_key
        if state.stacks.sink is None:
            state.stacks.sink = emit
        state.stacks.consume(key, totals(values))

    def cleanup_fn(state, emit):
        if state.stacks.sink is None:
            state.stacks.sink = emit
        state.stacks.flush()

    spec = JobSpec(
        name=TIMESERIES_JOB,
        map_fn=map_fn,
        reduce_fn=reduce_fn,
        num_partitions=num_partitions,
        partition_fn=make_first_term_partition(num_partitions),
        compare_fn=compare_suffix_order,
        sort_key_fn=suffix_sort_key,
        combiner_fn=_series_combiner if combiner else None,
        state_fn=state_fn,
        cleanup_fn=cleanup_fn,
    )
    result = run_job(spec, split.fragment_shards(), workers=workers)
    return MethodResult(dict(result.records()), [prelim, result.counters])
