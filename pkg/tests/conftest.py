"""Shared fixtures: the worked three-document corpus, random corpora, and
the acceptance-criteria result summary printed at the end of a run."""

from __future__ import annotations

import random
from contextlib import contextmanager

import pytest

from ngramstats.corpus import Corpus, Dictionary, Document, build_dictionary, tokenize_and_split

# The worked example used throughout: three five-term documents whose
# frequency floor 3 / length bound 3 statistics are known exactly.
RUNNING_EXAMPLE = ["a x b x x", "b a x b x", "x b a x b"]
GOLDEN = {"a": 3, "b": 5, "x": 7, "a x": 3, "x b": 4, "a x b": 3}
GOLDEN_MAXIMAL = {"a x b": 3}
GOLDEN_CLOSED = {"a x b": 3, "x b": 4, "b": 5, "x": 7}


def make_corpus(
    texts: list[str],
    years: list[int] | None = None,
    shard_size: int = 4,
) -> Corpus:
    """Build an encoded corpus from raw text documents."""
    tokenized = [tokenize_and_split(text) for text in texts]
    dictionary = build_dictionary(tokenized)
    documents = [
        Document(i, years[i] if years else None, [dictionary.terms_of(s) for s in sentences])
        for i, sentences in enumerate(tokenized)
    ]
    return Corpus.from_documents(dictionary, documents, shard_size=shard_size)


def grams(dictionary: Dictionary, *surfaces: str):
    """Map surface n-grams like 'a x b' to term-id tuples."""
    out = tuple(dictionary.terms_of(s.split()) for s in surfaces)
    return out[0] if len(out) == 1 else out


def rendered(corpus: Corpus, stats: dict) -> dict:
    return {corpus.dictionary.render(g): v for g, v in stats.items()}


def random_corpus(
    rng: random.Random,
    max_docs: int = 30,
    max_doc_len: int = 40,
    vocab: int = 12,
    with_years: bool = False,
    shard_size: int = 4,
) -> Corpus:
    """A small skewed-frequency corpus with random sentence breaks."""
    letters = [chr(ord("a") + i) for i in range(vocab)]
    weights = [1.0 / (i + 1) for i in range(vocab)]
    texts = []
    for _ in range(rng.randint(1, max_docs)):
        length = rng.randint(1, max_doc_len)
        tokens = rng.choices(letters, weights=weights, k=length)
        parts = []
        for token in tokens:
            parts.append(token)
            if rng.random() < 0.12:
                parts.append(".")
        texts.append(" ".join(parts))
    years = None
    if with_years:
        years = [rng.randint(1987, 2007) for _ in texts]
    return make_corpus(texts, years, shard_size=shard_size)


@pytest.fixture
def running_corpus() -> Corpus:
    return make_corpus(RUNNING_EXAMPLE)


# ---------------------------------------------------------------------------
# Acceptance summary
# ---------------------------------------------------------------------------

_ACCEPTANCE: dict[int, tuple[str, str]] = {}


@contextmanager
def criterion(number: int, title: str):
    try:
        yield
    except BaseException:
        _ACCEPTANCE[number] = ("FAIL", title)
        raise
    _ACCEPTANCE[number] = ("PASS", title)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_ACCEPTANCE):
        status, title = _ACCEPTANCE[number]
        terminalreporter.write_line(f"criterion {number}: {status} - {title}")
