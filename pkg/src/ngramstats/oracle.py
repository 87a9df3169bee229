"""Brute-force reference statistics, computed by direct enumeration.

Every window of every fragment is counted with plain nested loops and a hash
map. Deliberately shares no code with the engine or the counting methods so
it can serve as an independent check on them. Single-threaded, guarded
against inputs too large to enumerate.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import Corpus, TermSeq

DEFAULT_GUARD = 1_000_000


def _fragments(corpus: Corpus) -> list[tuple[int | None, TermSeq]]:
    return [(doc.year, frag) for doc in corpus.documents() for frag in doc.fragments]


def _window_count(fragments, max_len: int | None) -> int:
    total = 0
    for _, frag in fragments:
        n = len(frag)
        for b in range(n):
            total += n - b if max_len is None else min(max_len, n - b)
    return total


def enumerate_cf(
    corpus: Corpus, max_len: int | None = None, *, guard: int = DEFAULT_GUARD
) -> dict[TermSeq, int]:
    """Exact occurrence count of every window with length <= max_len."""
    fragments = _fragments(corpus)
    if _window_count(fragments, max_len) > guard:
        raise ValueError("corpus too large for oracle enumeration")
    counts: dict[TermSeq, int] = {}
    for _, frag in fragments:
        n = len(frag)
        for b in range(n):
            hi = n if max_len is None else min(n, b + max_len)
            for e in range(b + 1, hi + 1):
                gram = frag[b:e]
                counts[gram] = counts.get(gram, 0) + 1
    return counts


def oracle_cf(
    corpus: Corpus, min_count: int, max_len: int | None, *, guard: int = DEFAULT_GUARD
) -> dict[TermSeq, int]:
    """All n-grams with length <= max_len occurring at least min_count times."""
    counts = enumerate_cf(corpus, max_len, guard=guard)
    return {g: c for g, c in counts.items() if c >= min_count}


@dataclass
class OracleSets:
    frequent: dict[TermSeq, int]      # cf >= min_count, length <= max_len
    unprunable: dict[TermSeq, int]    # every proper window frequent (any cf)
    maximal: dict[TermSeq, int]
    closed: dict[TermSeq, int]


def oracle_sets(
    corpus: Corpus, min_count: int, max_len: int | None, *, guard: int = DEFAULT_GUARD
) -> OracleSets:
    """Reference frequent / unprunable / maximal / closed sets.

    The unprunable set holds every occurring gram all of whose proper
    contiguous subsequences are frequent; it extends one term past max_len
    because a scan pruning on previous output can only discover emptiness
    one length beyond the bound. Maximal and closed are defined relative to
    the length bound: a gram of maximal length counts as maximal even if
    longer frequent supersequences exist past the bound.

    All three filters use one-step forms that frequency monotonicity makes
    exactly equivalent to the quantified definitions (every window of a
    frequent window is itself frequent, and any frequency-preserving
    supersequence chain preserves frequency stepwise):

      * every proper window frequent      <=> both length-1-shorter windows
                                              frequent;
      * some frequent proper supersequence <=> some frequent one-term
                                              extension;
      * some equal-count frequent proper
        supersequence                      <=> some equal-count one-term
                                              extension.
    """
    probe_len = None if max_len is None else max_len + 1
    counts = enumerate_cf(corpus, probe_len, guard=guard)
    above_floor = {g for g, c in counts.items() if c >= min_count}
    frequent = {
        g: counts[g]
        for g in above_floor
        if max_len is None or len(g) <= max_len
    }

    unprunable = {
        gram: cf
        for gram, cf in counts.items()
        if len(gram) == 1 or (gram[:-1] in above_floor and gram[1:] in above_floor)
    }

    subsumed: set[TermSeq] = set()
    subsumed_equal: set[TermSeq] = set()
    for gram, cf in frequent.items():
        if len(gram) == 1:
            continue
        for inner in (gram[:-1], gram[1:]):
            if inner in frequent:
                subsumed.add(inner)
                if frequent[inner] == cf:
                    subsumed_equal.add(inner)
    maximal = {g: c for g, c in frequent.items() if g not in subsumed}
    closed = {g: c for g, c in frequent.items() if g not in subsumed_equal}
    return OracleSets(frequent, unprunable, maximal, closed)


def oracle_timeseries(
    corpus: Corpus, min_count: int, max_len: int | None, *, guard: int = DEFAULT_GUARD
) -> dict[TermSeq, dict[int, int]]:
    """Per-gram year -> occurrence-count series for grams with cf >= min_count."""
    fragments = _fragments(corpus)
    if _window_count(fragments, max_len) > guard:
        raise ValueError("corpus too large for oracle enumeration")
    series: dict[TermSeq, dict[int, int]] = {}
    for year, frag in fragments:
        if year is None:
            raise ValueError("untimed document")
        n = len(frag)
        for b in range(n):
            hi = n if max_len is None else min(n, b + max_len)
            for e in range(b + 1, hi + 1):
                per_year = series.setdefault(frag[b:e], {})
                per_year[year] = per_year.get(year, 0) + 1
    return {
        g: s for g, s in series.items() if sum(s.values()) >= min_count
    }
