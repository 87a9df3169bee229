"""Corpus handling: tokenization, term dictionary, varint codec, documents.

Raw text is lowercased, cut into sentences, and tokenized. A dictionary maps
each distinct token to a dense integer id, assigned in descending order of
collection frequency (ties broken by surface form), so frequent terms get the
shortest variable-byte encodings and ids are reproducible across runs.

Documents are stored as lists of sentence fragments over term ids. Fragment
boundaries are hard barriers: no n-gram ever crosses them. Splitting a
fragment at terms below a frequency threshold is sound for frequency mining
because a frequent n-gram cannot contain an infrequent term.
"""

from __future__ import annotations

import re
from bisect import bisect_right
from collections import Counter
from dataclasses import dataclass
from operator import neg
from pathlib import Path
from typing import Iterable, Iterator

TermSeq = tuple[int, ...]

_TOKEN_RE = re.compile(r"[^\W_]+")  # maximal runs of letters/digits
_SENTENCE_SPLIT_RE = re.compile(r"[.!?\n]")

DICTIONARY_FILENAME = "dictionary.tsv"
SHARD_GLOB = "corpus-*.bin"


# ---------------------------------------------------------------------------
# Tokenization
# ---------------------------------------------------------------------------


def tokenize_and_split(text: str) -> list[list[str]]:
    """Lowercase text, split into sentences, and tokenize each sentence.

    Sentence boundaries are '.', '!', '?' and newline. Tokens are maximal
    runs of letters/digits; all other characters separate tokens and are
    dropped. Sentences without tokens are dropped.
    """
    sentences = []
    for segment in _SENTENCE_SPLIT_RE.split(text.lower()):
        tokens = _TOKEN_RE.findall(segment)
        if tokens:
            sentences.append(tokens)
    return sentences


# ---------------------------------------------------------------------------
# Variable-byte codec
#
# Each integer is stored as little-endian 7-bit groups, one group per byte.
# The high bit marks the *terminating* byte of an integer; continuation
# bytes have it clear. A sequence is its varint length followed by one
# varint per term id.
# ---------------------------------------------------------------------------


def encode_varint(value: int) -> bytes:
    if value < 0:
        raise ValueError("varint requires a non-negative integer")
    out = bytearray()
    while value > 0x7F:
        out.append(value & 0x7F)
        value >>= 7
    out.append(0x80 | value)
    return bytes(out)


def varint_byte_length(value: int) -> int:
    """Length of encode_varint(value) without materializing it."""
    if value < 0x80:
        return 1
    return (value.bit_length() + 6) // 7


def read_varint(data: bytes, offset: int = 0) -> tuple[int, int]:
    """Decode one varint at offset; returns (value, next offset)."""
    value = 0
    shift = 0
    size = len(data)
    pos = offset
    while True:
        if pos >= size or shift > 70:
            raise ValueError("corrupt encoding")
        byte = data[pos]
        pos += 1
        if byte & 0x80:
            return value | ((byte & 0x7F) << shift), pos
        value |= byte << shift
        shift += 7


def encode_sequence(seq: Iterable[int]) -> bytes:
    seq = tuple(seq)
    out = bytearray()
    for value in (len(seq), *seq):
        if value < 0:
            raise ValueError("varint requires a non-negative integer")
        while value > 0x7F:
            out.append(value & 0x7F)
            value >>= 7
        out.append(0x80 | value)
    return bytes(out)


def sequence_byte_length(seq: TermSeq) -> int:
    """Serialized size of encode_sequence(seq), computed arithmetically."""
    total = varint_byte_length(len(seq))
    for term in seq:
        total += 1 if term < 0x80 else (term.bit_length() + 6) // 7
    return total


def decode_sequence_at(data: bytes, offset: int = 0) -> tuple[TermSeq, int]:
    count, pos = read_varint(data, offset)
    terms = []
    for _ in range(count):
        term, pos = read_varint(data, pos)
        terms.append(term)
    return tuple(terms), pos


def decode_sequence(data: bytes) -> TermSeq:
    seq, end = decode_sequence_at(data, 0)
    if end != len(data):
        raise ValueError("corrupt encoding")
    return seq


# ---------------------------------------------------------------------------
# Dictionary
# ---------------------------------------------------------------------------


class Dictionary:
    """Bidirectional surface <-> id map with per-term collection frequencies.

    Ids are dense 0..N-1 in descending frequency order, so an id doubles as
    a frequency rank and `frequent_ids` is a prefix of the id range.
    """

    __slots__ = ("surfaces", "frequencies", "_by_surface")

    def __init__(self, entries: Iterable[tuple[str, int]]):
        """entries: (surface, collection frequency) pairs in id order."""
        self.surfaces: list[str] = []
        self.frequencies: list[int] = []
        for surface, freq in entries:
            self.surfaces.append(surface)
            self.frequencies.append(freq)
        self._by_surface = {s: i for i, s in enumerate(self.surfaces)}
        if len(self._by_surface) != len(self.surfaces):
            raise ValueError("duplicate surface form")
        for i in range(1, len(self.frequencies)):
            if self.frequencies[i] > self.frequencies[i - 1]:
                raise ValueError("frequencies must be non-increasing in id order")

    def __len__(self) -> int:
        return len(self.surfaces)

    def __contains__(self, surface: str) -> bool:
        return surface in self._by_surface

    def id_of(self, surface: str) -> int:
        return self._by_surface[surface]

    def surface_of(self, term_id: int) -> str:
        return self.surfaces[term_id]

    def frequency_of(self, term_id: int) -> int:
        return self.frequencies[term_id]

    def frequent_ids(self, min_count: int) -> set[int]:
        """Ids of all terms with collection frequency >= min_count."""
        cutoff = bisect_right(self.frequencies, -min_count, key=neg)
        return set(range(cutoff))

    def terms_of(self, surfaces: Iterable[str]) -> TermSeq:
        return tuple(self._by_surface[s] for s in surfaces)

    def render(self, seq: TermSeq) -> str:
        return " ".join(self.surfaces[t] for t in seq)

    def save(self, path: str | Path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for term_id, (surface, freq) in enumerate(zip(self.surfaces, self.frequencies)):
                fh.write(f"{surface}\t{term_id}\t{freq}\n")

    @classmethod
    def load(cls, path: str | Path) -> "Dictionary":
        entries = []
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh):
                surface, term_id, freq = line.rstrip("\n").split("\t")
                if int(term_id) != lineno:
                    raise ValueError("dictionary file not sorted by id")
                entries.append((surface, int(freq)))
        return cls(entries)


def build_dictionary(tokenized_docs: Iterable[list[list[str]]]) -> Dictionary:
    """Rank every distinct token by total occurrences and assign dense ids.

    Ties are broken by ascending surface form. Raises on a corpus with no
    tokens at all.
    """
    counts: Counter[str] = Counter()
    for sentences in tokenized_docs:
        for sentence in sentences:
            counts.update(sentence)
    if not counts:
        raise ValueError("empty corpus")
    ranked = sorted(counts.items(), key=lambda item: (-item[1], item[0]))
    return Dictionary(ranked)


# ---------------------------------------------------------------------------
# Documents and corpus
# ---------------------------------------------------------------------------


@dataclass
class Document:
    doc_id: int
    year: int | None
    fragments: list[TermSeq]


def split_fragment(fragment: TermSeq, frequent: set[int]) -> list[TermSeq]:
    """Cut a fragment at terms outside `frequent`, keeping the maximal runs.

    The infrequent terms themselves are dropped; empty runs are discarded.
    """
    if all(t in frequent for t in fragment):
        return [fragment]
    runs = []
    run: list[int] = []
    for term in fragment:
        if term in frequent:
            run.append(term)
        elif run:
            runs.append(tuple(run))
            run = []
    if run:
        runs.append(tuple(run))
    return runs


FragmentRecord = tuple[int, int | None, TermSeq]  # (fragment id, year, terms)


class Corpus:
    """Encoded documents grouped into shards; one shard is one map task.

    Shard boundaries come from the on-disk layout (or an explicit grouping)
    and are independent of worker counts, which keeps per-task combining and
    all counters deterministic.
    """

    def __init__(self, dictionary: Dictionary, shards: list[list[Document]]):
        self.dictionary = dictionary
        self.shards = shards

    @classmethod
    def from_documents(
        cls, dictionary: Dictionary, documents: Iterable[Document], shard_size: int = 256
    ) -> "Corpus":
        docs = list(documents)
        shards = [docs[i : i + shard_size] for i in range(0, len(docs), shard_size)]
        return cls(dictionary, shards or [[]])

    def documents(self) -> Iterator[Document]:
        for shard in self.shards:
            yield from shard

    def document_count(self) -> int:
        return sum(len(shard) for shard in self.shards)

    def total_occurrences(self) -> int:
        return sum(len(f) for doc in self.documents() for f in doc.fragments)

    def fragment_count(self) -> int:
        return sum(len(doc.fragments) for doc in self.documents())

    def all_years_present(self) -> bool:
        return all(doc.year is not None for doc in self.documents())

    def fragment_shards(self) -> list[list[FragmentRecord]]:
        """Flatten to per-shard (fragment id, year, terms) records.

        Fragment ids are globally unique, assigned in shard order; they act
        as the document identifier in emitted postings so that positions
        stay meaningful within a single fragment.
        """
        shards_out = []
        next_id = 0
        for shard in self.shards:
            records = []
            for doc in shard:
                for frag in doc.fragments:
                    records.append((next_id, doc.year, frag))
                    next_id += 1
            shards_out.append(records)
        return shards_out

    def split(self, frequent: set[int]) -> "Corpus":
        """Corpus with every fragment split at terms outside `frequent`."""
        if len(frequent) >= len(self.dictionary):
            return self
        shards = []
        for shard in self.shards:
            docs = []
            for doc in shard:
                fragments = []
                for frag in doc.fragments:
                    fragments.extend(split_fragment(frag, frequent))
                docs.append(Document(doc.doc_id, doc.year, fragments))
            shards.append(docs)
        return Corpus(self.dictionary, shards)


def encode_documents(
    dictionary: Dictionary,
    tokenized: Iterable[tuple[int, int | None, list[list[str]]]],
) -> Iterator[Document]:
    """Turn (doc id, year, sentences-of-tokens) into id-encoded Documents."""
    for doc_id, year, sentences in tokenized:
        fragments = [dictionary.terms_of(sentence) for sentence in sentences]
        yield Document(doc_id, year, fragments)


# ---------------------------------------------------------------------------
# Binary corpus files
#
# Per document: varint doc id, varint year (0 = absent), varint fragment
# count, then each fragment via encode_sequence. A corpus directory holds
# dictionary.tsv plus one or more corpus-*.bin shards; lexicographic shard
# order defines the input order.
# ---------------------------------------------------------------------------


def encode_document(doc: Document) -> bytes:
    out = bytearray()
    out += encode_varint(doc.doc_id)
    out += encode_varint(doc.year or 0)
    out += encode_varint(len(doc.fragments))
    for frag in doc.fragments:
        out += encode_sequence(frag)
    return bytes(out)


def decode_document_at(data: bytes, offset: int) -> tuple[Document, int]:
    doc_id, pos = read_varint(data, offset)
    year, pos = read_varint(data, pos)
    count, pos = read_varint(data, pos)
    fragments = []
    for _ in range(count):
        frag, pos = decode_sequence_at(data, pos)
        fragments.append(frag)
    return Document(doc_id, year or None, fragments), pos


def write_corpus(corpus_dir: str | Path, corpus: Corpus) -> list[Path]:
    """Write dictionary.tsv and one corpus-NNNNN.bin file per shard."""
    corpus_dir = Path(corpus_dir)
    corpus_dir.mkdir(parents=True, exist_ok=True)
    corpus.dictionary.save(corpus_dir / DICTIONARY_FILENAME)
    paths = []
    for index, shard in enumerate(corpus.shards):
        path = corpus_dir / f"corpus-{index:05d}.bin"
        with open(path, "wb") as fh:
            for doc in shard:
                fh.write(encode_document(doc))
        paths.append(path)
    return paths


def load_corpus(corpus_dir: str | Path) -> Corpus:
    corpus_dir = Path(corpus_dir)
    dictionary_path = corpus_dir / DICTIONARY_FILENAME
    if not dictionary_path.is_file():
        raise ValueError(f"no corpus shards or dictionary in {corpus_dir}")
    dictionary = Dictionary.load(dictionary_path)
    shards = []
    for path in sorted(corpus_dir.glob(SHARD_GLOB)):
        data = path.read_bytes()
        docs = []
        pos = 0
        while pos < len(data):
            doc, pos = decode_document_at(data, pos)
            docs.append(doc)
        shards.append(docs)
    if not shards:
        raise ValueError(f"no corpus shards in {corpus_dir}")
    return Corpus(dictionary, shards)
