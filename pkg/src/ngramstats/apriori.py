"""Frequency-pruned methods: iterative rescanning and posting-list joins.

Both exploit the same monotonicity: a window can only reach the frequency
floor if every window inside it does.

The scan method runs one counting job per length k. Its map keeps a k-gram
occurrence only when both (k-1)-windows inside it appear in the previous
iteration's output, which every map task holds read-only in memory. The
chain stops once an iteration produces nothing; with a finite length bound
the iteration just past the bound can emit pruned occurrences but its reduce
keeps nothing, so it terminates the chain while its record counter still
reflects the unpruned residue.

The index method first builds a positional inverted index of frequent
k-grams directly from the corpus, one job per length up to a configurable
depth. Beyond that depth it extends grams by joining posting lists: each
(k-1)-gram is sent to both its prefix and its suffix key, and a reducer
pairs every left-extension with every right-extension of its key, keeping a
begin position p of the left gram when p+1 begins the right gram.
"""

from __future__ import annotations

from .corpus import (
    Corpus,
    TermSeq,
    decode_sequence_at,
    encode_sequence,
    encode_varint,
    read_varint,
)
from .engine import JobSpec, run_chain
from .pipeline import (
    MethodResult,
    check_bounds,
    counting_combiner,
    identity_sort_key,
    make_group_total,
    prepare_split,
)

SCAN_JOB = "apriori-scan"
INDEX_JOB = "apriori-index"
JOIN_JOB = "apriori-index-join"

DEFAULT_DICT_CAP = 10_000_000
DEFAULT_JOIN_BUFFER_CAP = 1_000_000
DEFAULT_INDEX_LEN = 4
CHAIN_SHARD_SIZE = 1024

Posting = tuple[int, tuple[int, ...]]  # (fragment id, ascending begin offsets)
PostingList = list[Posting]


def _chunk(records: list, size: int = CHAIN_SHARD_SIZE) -> list[list]:
    if not records:
        return [[]]
    return [records[i : i + size] for i in range(0, len(records), size)]


# ---------------------------------------------------------------------------
# Scan
# ---------------------------------------------------------------------------


def make_scan_map(k: int, frequent_prev: set[TermSeq] | None):
    """Emit k-gram occurrences whose two (k-1)-windows survived iteration k-1."""

    def map_fn(record):
        fid, _year, terms = record
        value = encode_varint(fid)
        if k == 1:
            return [((t,), value) for t in terms]
        n = len(terms)
        if n < k:
            return []
        window_ok = [terms[b : b + k - 1] in frequent_prev for b in range(n - k + 2)]
        return [
            (terms[b : b + k], value)
            for b in range(n - k + 1)
            if window_ok[b] and window_ok[b + 1]
        ]

    return map_fn


def run_apriori_scan(
    corpus: Corpus,
    min_count: int,
    max_len: int | None,
    *,
    num_partitions: int = 1,
    workers: int = 1,
    combiner: bool = True,
    dict_cap: int = DEFAULT_DICT_CAP,
) -> MethodResult:
    check_bounds(min_count, max_len)
    split, prelim = prepare_split(corpus, min_count, workers=workers)
    shards = split.fragment_shards()
    total = make_group_total(combiner)

    def reduce_fn(key, values, emit, state):
        count = total(values)
        # The final iteration past a finite bound only probes for emptiness.
        if count >= min_count and (max_len is None or len(key) <= max_len):
            emit(key, count)

    def factory(k, previous):
        if previous is not None and not previous:
            return None
        if max_len is not None and k > max_len + 1:
            return None
        frequent_prev = None
        if k > 1:
            frequent_prev = {gram for gram, _ in previous}
            if len(frequent_prev) > dict_cap:
                raise ValueError(f"dictionary too large ({len(frequent_prev)} > {dict_cap})")
        spec = JobSpec(
            name=SCAN_JOB,
            map_fn=make_scan_map(k, frequent_prev),
            reduce_fn=reduce_fn,
            num_partitions=num_partitions,
            sort_key_fn=identity_sort_key,
            combiner_fn=counting_combiner if combiner else None,
            iteration=k,
        )
        return spec, shards

    results = run_chain(factory, workers=workers)
    stats: dict[TermSeq, int] = {}
    for result in results:
        stats.update(result.records())
    intermediates = [result.records() for result in results]
    return MethodResult(stats, [prelim] + [r.counters for r in results], intermediates)


# ---------------------------------------------------------------------------
# Posting codecs
# ---------------------------------------------------------------------------


def encode_posting(fid: int, positions: tuple[int, ...] | list[int]) -> bytes:
    out = bytearray(encode_varint(fid))
    out += encode_varint(len(positions))
    for p in positions:
        out += encode_varint(p)
    return bytes(out)


def decode_posting(data: bytes, offset: int = 0) -> tuple[Posting, int]:
    fid, pos = read_varint(data, offset)
    count, pos = read_varint(data, pos)
    positions = []
    for _ in range(count):
        p, pos = read_varint(data, pos)
        positions.append(p)
    return (fid, tuple(positions)), pos


def encode_posting_list(plist: PostingList) -> bytes:
    out = bytearray(encode_varint(len(plist)))
    for fid, positions in plist:
        out += encode_posting(fid, positions)
    return bytes(out)


def decode_posting_list(data: bytes, offset: int = 0) -> tuple[PostingList, int]:
    count, pos = read_varint(data, offset)
    plist = []
    for _ in range(count):
        posting, pos = decode_posting(data, pos)
        plist.append(posting)
    return plist, pos


def posting_list_cf(plist: PostingList) -> int:
    return sum(len(positions) for _, positions in plist)


# ---------------------------------------------------------------------------
# Index phase 1: positional postings straight from the corpus
# ---------------------------------------------------------------------------


def make_index_map(k: int):
    """One (k-gram, posting) pair per distinct k-gram per fragment."""

    def map_fn(record):
        fid, _year, terms = record
        n = len(terms)
        if n < k:
            return []
        positions: dict[TermSeq, list[int]] = {}
        for b in range(n - k + 1):
            gram = terms[b : b + k]
            bucket = positions.get(gram)
            if bucket is None:
                positions[gram] = [b]
            else:
                bucket.append(b)
        return [(gram, encode_posting(fid, starts)) for gram, starts in positions.items()]

    return map_fn


def make_index_reduce(min_count: int):
    def reduce_fn(key, values, emit, state):
        plist = [decode_posting(v)[0] for v in values]
        plist.sort(key=lambda posting: posting[0])
        for i in range(1, len(plist)):
            if plist[i][0] == plist[i - 1][0]:
                raise ValueError("non-unique posting")
        if posting_list_cf(plist) >= min_count:
            emit(key, plist)

    return reduce_fn


# ---------------------------------------------------------------------------
# Index phase 2: extend by joining posting lists
# ---------------------------------------------------------------------------

_LEFT_TAG = 0x4C  # key is the gram's suffix; gram extends the key leftward
_RIGHT_TAG = 0x52  # key is the gram's prefix; gram extends the key rightward


def encode_join_value(tag: int, gram: TermSeq, plist: PostingList) -> bytes:
    return bytes([tag]) + encode_sequence(gram) + encode_posting_list(plist)


def decode_join_value(data: bytes) -> tuple[int, TermSeq, PostingList]:
    tag = data[0]
    gram, pos = decode_sequence_at(data, 1)
    plist, pos = decode_posting_list(data, pos)
    if pos != len(data) or tag not in (_LEFT_TAG, _RIGHT_TAG):
        raise ValueError("corrupt encoding")
    return tag, gram, plist


def join_map(record) -> list[tuple[TermSeq, bytes]]:
    """Send a gram with its postings to both its prefix key and suffix key."""
    gram, plist = record
    if len(gram) < 2:
        raise ValueError("join requires grams of length >= 2")
    return [
        (gram[:-1], encode_join_value(_RIGHT_TAG, gram, plist)),
        (gram[1:], encode_join_value(_LEFT_TAG, gram, plist)),
    ]


def join_postings(left: PostingList, right: PostingList) -> PostingList:
    """Positions of the left gram whose successor position begins the right gram."""
    right_by_fid = dict(right)
    out = []
    for fid, positions in left:
        other = right_by_fid.get(fid)
        if other is None:
            continue
        successors = set(other)
        keep = tuple(p for p in positions if p + 1 in successors)
        if keep:
            out.append((fid, keep))
    return out


def make_join_reduce(min_count: int, buffer_cap: int = DEFAULT_JOIN_BUFFER_CAP):
    def reduce_fn(key, values, emit, state):
        lefts = []
        rights = []
        buffered = 0
        for value in values:
            tag, gram, plist = decode_join_value(value)
            buffered += len(plist)
            if buffered > buffer_cap:
                raise ValueError(f"join buffer overflow ({buffer_cap} postings)")
            if tag == _LEFT_TAG:
                lefts.append((gram, plist))
            else:
                rights.append((gram, plist))
        for left_gram, left_list in lefts:
            for right_gram, right_list in rights:
                joined = join_postings(left_list, right_list)
                if joined and posting_list_cf(joined) >= min_count:
                    emit(left_gram + (right_gram[-1],), joined)

    return reduce_fn


def run_apriori_index(
    corpus: Corpus,
    min_count: int,
    max_len: int | None,
    index_len: int = DEFAULT_INDEX_LEN,
    *,
    num_partitions: int = 1,
    workers: int = 1,
    join_buffer_cap: int = DEFAULT_JOIN_BUFFER_CAP,
) -> MethodResult:
    """Index up to index_len directly, then join posting lists length by length.

    index_len must be >= 2 (join keys would degenerate to the empty gram
    otherwise) and is clamped to the length bound, so a bound at or below
    index_len runs as pure direct indexing.
    """
    check_bounds(min_count, max_len)
    if index_len < 2:
        raise ValueError("index_len must be >= 2")
    direct_len = index_len if max_len is None else min(index_len, max_len)
    split, prelim = prepare_split(corpus, min_count, workers=workers)
    shards = split.fragment_shards()

    index_reduce = make_index_reduce(min_count)
    join_reduce = make_join_reduce(min_count, join_buffer_cap)

    def factory(k, previous):
        if k > 1 and not previous:
            return None
        if max_len is not None and k > max_len:
            return None
        if k <= direct_len:
            spec = JobSpec(
                name=INDEX_JOB,
                map_fn=make_index_map(k),
                reduce_fn=index_reduce,
                num_partitions=num_partitions,
                sort_key_fn=identity_sort_key,
                iteration=k,
            )
            return spec, shards
        spec = JobSpec(
            name=JOIN_JOB,
            map_fn=join_map,
            reduce_fn=join_reduce,
            num_partitions=num_partitions,
            sort_key_fn=identity_sort_key,
            iteration=k,
        )
        return spec, _chunk(previous)

    results = run_chain(factory, workers=workers)
    stats: dict[TermSeq, int] = {}
    for result in results:
        for gram, plist in result.records():
            stats[gram] = posting_list_cf(plist)
    intermediates = [result.records() for result in results]
    return MethodResult(stats, [prelim] + [r.counters for r in results], intermediates)


# ---------------------------------------------------------------------------
# Intermediate persistence (chains can be resumed from these files)
# ---------------------------------------------------------------------------

_COUNT_RECORD = 0x00
_POSTINGS_RECORD = 0x01


def save_intermediate(path, records) -> None:
    """Serialize one iteration's (gram, count | posting list) records."""
    out = bytearray()
    for gram, value in records:
        if isinstance(value, int):
            out.append(_COUNT_RECORD)
            out += encode_sequence(gram)
            out += encode_varint(value)
        else:
            out.append(_POSTINGS_RECORD)
            out += encode_sequence(gram)
            out += encode_posting_list(value)
    with open(path, "wb") as fh:
        fh.write(bytes(out))


def load_intermediate(path) -> list:
    data = open(path, "rb").read()
    records = []
    pos = 0
    while pos < len(data):
        tag = data[pos]
        gram, pos = decode_sequence_at(data, pos + 1)
        if tag == _COUNT_RECORD:
            value, pos = read_varint(data, pos)
        elif tag == _POSTINGS_RECORD:
            value, pos = decode_posting_list(data, pos)
        else:
            raise ValueError("corrupt encoding")
        records.append((gram, value))
    return records
