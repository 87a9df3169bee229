"""A small in-memory map / shuffle / reduce runtime.

A job is a declarative bundle of callbacks (map, partition, comparator,
reduce, plus optional combiner and cleanup) run over sharded input:

  * one map task per input shard, tasks independent;
  * each emitted (key, value) pair is routed by the partition function;
  * within a partition, pairs are sorted by the job comparator and grouped
    by key equality, and the groups are fed to reduce in sort order;
  * each reduce partition runs single-threaded with its own state object,
    created up front and handed to every group and to the final cleanup.

Keys are term-id tuples; values are opaque byte strings whose codecs belong
to the job authors. Map tasks and reduce partitions may run on a thread
pool, but results and counters are deterministic for a fixed input sharding
regardless of worker count: the combiner works per map task (not per
worker), and outputs are collected in task/partition order.

The shuffle is held in memory. A per-partition record cap turns oversized
inputs into an explicit error instead of silent degradation.

Counters follow the usual MapReduce accounting: `map_output_records` is
what is actually shuffled (post-combiner when a combiner is configured),
`map_output_records_pre_combiner` is the raw map emission count, and
`map_output_bytes` prices every raw emission at its serialized size under
the corpus varint codec.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import groupby
from operator import itemgetter
from typing import Any, Callable, Iterable

from .corpus import TermSeq, sequence_byte_length

DEFAULT_PARTITION_RECORD_CAP = 50_000_000
DEFAULT_CHAIN_CAP = 1000

MapFn = Callable[[Any], Iterable[tuple[TermSeq, bytes]]]
EmitFn = Callable[[TermSeq, Any], None]
ReduceFn = Callable[[TermSeq, list[bytes], EmitFn, Any], None]
CombinerFn = Callable[[TermSeq, list[bytes], EmitFn], None]


class EngineError(RuntimeError):
    def __init__(self, message: str, job: str | None = None):
        super().__init__(message)
        self.job = job


@dataclass
class CounterSet:
    """Shuffle metrics for one job run."""

    job: str
    iteration: int | None = None
    map_output_records_pre_combiner: int = 0
    map_output_records: int = 0
    map_output_bytes: int = 0
    reduce_output_records: int = 0
    wall_ms: float = 0.0

    def as_dict(self) -> dict[str, Any]:
        return {
            "job": self.job,
            "iteration": self.iteration,
            "map_output_records_pre_combiner": self.map_output_records_pre_combiner,
            "map_output_records": self.map_output_records,
            "map_output_bytes": self.map_output_bytes,
            "reduce_output_records": self.reduce_output_records,
            "wall_ms": round(self.wall_ms, 3),
        }

    @staticmethod
    def total(counter_sets: Iterable["CounterSet"], job: str = "total") -> "CounterSet":
        out = CounterSet(job=job)
        for c in counter_sets:
            out.map_output_records_pre_combiner += c.map_output_records_pre_combiner
            out.map_output_records += c.map_output_records
            out.map_output_bytes += c.map_output_bytes
            out.reduce_output_records += c.reduce_output_records
            out.wall_ms += c.wall_ms
        return out


def _default_compare(a: TermSeq, b: TermSeq) -> int:
    if a < b:
        return -1
    if a > b:
        return 1
    return 0


@dataclass
class JobSpec:
    """Everything the engine needs to run one map/shuffle/reduce pass.

    `sort_key_fn`, when given, must induce exactly the order of
    `compare_fn`; it exists because key-based sorting is much faster than
    comparator-based sorting. Consistency is spot-checked on sampled keys.
    """

    name: str
    map_fn: MapFn
    reduce_fn: ReduceFn
    num_partitions: int = 1
    partition_fn: Callable[[TermSeq], int] | None = None  # None: hash(key) % R
    compare_fn: Callable[[TermSeq, TermSeq], int] = field(default=_default_compare)
    sort_key_fn: Callable[[TermSeq], Any] | None = None
    combiner_fn: CombinerFn | None = None
    state_fn: Callable[[], Any] | None = None
    cleanup_fn: Callable[[Any, EmitFn], None] | None = None
    iteration: int | None = None


@dataclass
class JobResult:
    partitions: list[list[tuple[TermSeq, Any]]]
    counters: CounterSet

    def records(self) -> list[tuple[TermSeq, Any]]:
        """Reducer output across partitions, in partition order."""
        return [pair for part in self.partitions for pair in part]


def _run_map_task(spec: JobSpec, shard) -> tuple[list, int, int]:
    pairs: list[tuple[TermSeq, bytes]] = []
    extend = pairs.extend
    for record in shard:
        extend(spec.map_fn(record))
    raw_records = len(pairs)
    raw_bytes = 0
    for key, value in pairs:
        raw_bytes += sequence_byte_length(key) + len(value)
    if spec.combiner_fn is not None and pairs:
        grouped: dict[TermSeq, list[bytes]] = {}
        for key, value in pairs:
            bucket = grouped.get(key)
            if bucket is None:
                grouped[key] = [value]
            else:
                bucket.append(value)
        combined: list[tuple[TermSeq, bytes]] = []
        emit = lambda k, v: combined.append((k, v))
        for key, values in grouped.items():
            spec.combiner_fn(key, values, emit)
        pairs = combined
    return pairs, raw_records, raw_bytes


def _check_comparator(spec: JobSpec, sample_keys: list[TermSeq]) -> None:
    """Spot-check total-order laws (and sort-key consistency) on samples."""
    cmp = spec.compare_fn
    for a in sample_keys:
        if cmp(a, a) != 0:
            raise EngineError("invalid comparator: not reflexive-equal", spec.name)
    for a in sample_keys:
        for b in sample_keys:
            ab, ba = cmp(a, b), cmp(b, a)
            if (ab > 0) != (ba < 0) or (ab == 0) != (ba == 0):
                raise EngineError("invalid comparator: not antisymmetric", spec.name)
            if spec.sort_key_fn is not None:
                ka, kb = spec.sort_key_fn(a), spec.sort_key_fn(b)
                key_sign = -1 if ka < kb else (1 if ka > kb else 0)
                ab_sign = -1 if ab < 0 else (1 if ab > 0 else 0)
                if key_sign != ab_sign:
                    raise EngineError(
                        "invalid comparator: sort key disagrees with comparator",
                        spec.name,
                    )
    ordered = sorted(sample_keys, key=_cmp_to_key(cmp))
    for i in range(len(ordered)):
        for j in range(i + 1, len(ordered)):
            if cmp(ordered[i], ordered[j]) > 0:
                raise EngineError("invalid comparator: not transitive", spec.name)


def _cmp_to_key(cmp):
    class Key:
        __slots__ = ("value",)

        def __init__(self, value):
            self.value = value

        def __lt__(self, other):
            return cmp(self.value, other.value) < 0

    return Key


def _reduce_partition(spec: JobSpec, bucket: list) -> list[tuple[TermSeq, Any]]:
    if spec.sort_key_fn is not None:
        key_of = spec.sort_key_fn
        bucket.sort(key=lambda pair: key_of(pair[0]))
    else:
        wrap = _cmp_to_key(spec.compare_fn)
        bucket.sort(key=lambda pair: wrap(pair[0]))
    out: list[tuple[TermSeq, Any]] = []
    emit = lambda k, v: out.append((k, v))
    state = spec.state_fn() if spec.state_fn is not None else None
    first = itemgetter(0)
    for key, group in groupby(bucket, key=first):
        values = [pair[1] for pair in group]
        spec.reduce_fn(key, values, emit, state)
    if spec.cleanup_fn is not None:
        spec.cleanup_fn(state, emit)
    return out


def run_job(
    spec: JobSpec,
    shards: list[list],
    *,
    workers: int = 1,
    partition_record_cap: int = DEFAULT_PARTITION_RECORD_CAP,
    validate: bool = True,
    sample_size: int = 8,
) -> JobResult:
    """Run one job over the given input shards.

    Output is a list of reducer emissions per partition; emissions appear in
    reducer order within a partition and partitions in index order. The
    result is identical for any `workers` value.
    """
    if spec.num_partitions < 1:
        raise EngineError("num_partitions must be >= 1", spec.name)
    started = time.perf_counter()
    counters = CounterSet(job=spec.name, iteration=spec.iteration)

    try:
        if workers > 1 and len(shards) > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                task_outputs = list(pool.map(lambda s: _run_map_task(spec, s), shards))
        else:
            task_outputs = [_run_map_task(spec, shard) for shard in shards]
    except EngineError:
        raise
    except Exception as exc:
        raise EngineError(str(exc) or repr(exc), spec.name) from exc

    num_partitions = spec.num_partitions
    partition_of = spec.partition_fn
    if partition_of is None:
        partition_of = lambda key: hash(key) % num_partitions
    buckets: list[list] = [[] for _ in range(num_partitions)]
    appends = [bucket.append for bucket in buckets]
    for pairs, raw_records, raw_bytes in task_outputs:
        counters.map_output_records_pre_combiner += raw_records
        counters.map_output_bytes += raw_bytes
        counters.map_output_records += len(pairs)
        for pair in pairs:
            index = partition_of(pair[0])
            if not 0 <= index < num_partitions:
                raise EngineError("partition index out of range", spec.name)
            appends[index](pair)
        for bucket in buckets:
            if len(bucket) > partition_record_cap:
                raise EngineError(
                    f"partition record cap exceeded ({partition_record_cap})", spec.name
                )
    del task_outputs

    if validate:
        samples: list[TermSeq] = []
        seen: set[TermSeq] = set()
        for bucket in buckets:
            for key, _ in bucket:
                if key not in seen:
                    seen.add(key)
                    samples.append(key)
                    if len(samples) >= sample_size:
                        break
            if len(samples) >= sample_size:
                break
        _check_comparator(spec, samples)

    try:
        if workers > 1 and num_partitions > 1:
            with ThreadPoolExecutor(max_workers=workers) as pool:
                partitions = list(pool.map(lambda b: _reduce_partition(spec, b), buckets))
        else:
            partitions = [_reduce_partition(spec, bucket) for bucket in buckets]
    except EngineError:
        raise
    except Exception as exc:
        raise EngineError(str(exc) or repr(exc), spec.name) from exc
    counters.reduce_output_records = sum(len(p) for p in partitions)
    counters.wall_ms = (time.perf_counter() - started) * 1000.0
    return JobResult(partitions, counters)


def run_chain(
    job_factory: Callable[[int, list | None], tuple[JobSpec, list] | None],
    *,
    workers: int = 1,
    max_iterations: int = DEFAULT_CHAIN_CAP,
    stop_fn: Callable[[int, list | None], bool] | None = None,
    **run_kwargs,
) -> list[JobResult]:
    """Run jobs k = 1, 2, ... until the factory (or stop predicate) stops.

    The factory receives the iteration number and the previous iteration's
    flattened output records (None for k = 1) and returns (spec, shards), or
    None to stop. All iteration results are retained and returned.
    """
    results: list[JobResult] = []
    previous: list | None = None
    k = 1
    while True:
        if k > max_iterations:
            raise EngineError(f"runaway chain: exceeded {max_iterations} iterations")
        if stop_fn is not None and stop_fn(k, previous):
            break
        made = job_factory(k, previous)
        if made is None:
            break
        spec, shards = made
        result = run_job(spec, shards, workers=workers, **run_kwargs)
        results.append(result)
        previous = result.records()
        k += 1
    return results
