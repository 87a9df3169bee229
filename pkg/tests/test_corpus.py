"""Tokenizer, dictionary, varint codec, splitting, and corpus file round-trips."""

import random

import pytest

from conftest import RUNNING_EXAMPLE, make_corpus, random_corpus
from ngramstats.corpus import (
    Corpus,
    Dictionary,
    Document,
    build_dictionary,
    decode_sequence,
    decode_sequence_at,
    encode_sequence,
    encode_varint,
    load_corpus,
    read_varint,
    sequence_byte_length,
    split_fragment,
    tokenize_and_split,
    varint_byte_length,
    write_corpus,
)
from ngramstats.oracle import oracle_cf


class TestTokenizer:
    def test_rule_application(self):
        assert tokenize_and_split("A x. B!") == [["a", "x"], ["b"]]

    def test_empty_input(self):
        assert tokenize_and_split("") == []

    def test_digits_kept_no_boundary(self):
        assert tokenize_and_split("e4 e5 2 nf3") == [["e4", "e5", "2", "nf3"]]

    def test_newline_and_question_mark_split(self):
        assert tokenize_and_split("a b\nc? d") == [["a", "b"], ["c"], ["d"]]

    def test_punctuation_dropped_inside_sentence(self):
        assert tokenize_and_split("it's a-b_c") == [["it", "s", "a", "b", "c"]]


class TestDictionary:
    def test_running_example_ranks(self):
        d = build_dictionary([tokenize_and_split(t) for t in RUNNING_EXAMPLE])
        assert list(zip(d.surfaces, d.frequencies)) == [("x", 7), ("b", 5), ("a", 3)]
        assert d.id_of("x") == 0 and d.id_of("b") == 1 and d.id_of("a") == 2

    def test_single_doc(self):
        d = build_dictionary([[["a"]]])
        assert d.id_of("a") == 0 and d.frequency_of(0) == 1

    def test_tie_broken_by_surface(self):
        d = build_dictionary([[["b", "a"]]])
        assert d.id_of("a") == 0 and d.id_of("b") == 1

    def test_empty_corpus_rejected(self):
        with pytest.raises(ValueError, match="empty corpus"):
            build_dictionary([[[]]])

    def test_lookups_are_inverse(self):
        rng = random.Random(7)
        corpus = random_corpus(rng)
        d = corpus.dictionary
        for term_id in range(len(d)):
            assert d.id_of(d.surface_of(term_id)) == term_id

    def test_rank_property(self):
        rng = random.Random(11)
        for _ in range(20):
            d = random_corpus(rng).dictionary
            for i in range(1, len(d)):
                assert d.frequency_of(i - 1) >= d.frequency_of(i)

    def test_frequent_ids_prefix(self):
        d = Dictionary([("x", 7), ("b", 5), ("a", 3)])
        assert d.frequent_ids(4) == {0, 1}
        assert d.frequent_ids(1) == {0, 1, 2}
        assert d.frequent_ids(8) == set()

    def test_tsv_round_trip(self, tmp_path):
        d = Dictionary([("x", 7), ("b", 5), ("a", 3)])
        d.save(tmp_path / "dictionary.tsv")
        loaded = Dictionary.load(tmp_path / "dictionary.tsv")
        assert loaded.surfaces == d.surfaces and loaded.frequencies == d.frequencies


class TestVarint:
    def test_empty_sequence(self):
        assert encode_sequence(()) == b"\x80"

    def test_single_zero(self):
        assert encode_sequence((0,)) == b"\x81\x80"

    def test_terminator_bit_layout(self):
        # 300 = 0b10_0101100: low group 44 (continuation), high group 2 (final)
        assert encode_varint(300) == bytes([0x2C, 0x82])
        assert read_varint(bytes([0x2C, 0x82])) == (300, 2)

    def test_round_trip_random_sequences(self):
        rng = random.Random(3)
        for _ in range(1000):
            seq = tuple(rng.randrange(1 << 20) for _ in range(rng.randrange(12)))
            data = encode_sequence(seq)
            assert decode_sequence(data) == seq
            assert len(data) == sequence_byte_length(seq)

    def test_byte_length_boundaries(self):
        for value in (0, 1, 127, 128, 16383, 16384, 2097151, 2097152):
            assert varint_byte_length(value) == len(encode_varint(value))

    def test_truncated_rejected(self):
        data = encode_sequence((5, 700))
        with pytest.raises(ValueError, match="corrupt encoding"):
            decode_sequence(data[:-1])

    def test_trailing_garbage_rejected(self):
        with pytest.raises(ValueError, match="corrupt encoding"):
            decode_sequence(encode_sequence((1, 2)) + b"\x80")

    def test_unterminated_rejected(self):
        with pytest.raises(ValueError, match="corrupt encoding"):
            read_varint(b"\x01\x02\x03")

    def test_negative_rejected(self):
        with pytest.raises(ValueError):
            encode_varint(-1)


class TestSplitting:
    def test_cut_at_infrequent(self):
        # c b a z b a c with z infrequent -> two shorter runs
        d = build_dictionary([[["c", "b", "a", "z", "b", "a", "c"]]])
        frag = d.terms_of("c b a z b a c".split())
        frequent = {d.id_of(t) for t in "abc"}
        runs = split_fragment(frag, frequent)
        assert runs == [d.terms_of("c b a".split()), d.terms_of("b a c".split())]

    def test_all_frequent_identity(self):
        frag = (0, 1, 2)
        assert split_fragment(frag, {0, 1, 2}) == [frag]

    def test_all_infrequent(self):
        assert split_fragment((0, 1), set()) == []

    def test_split_preserves_frequent_gram_counts(self):
        rng = random.Random(23)
        for _ in range(15):
            corpus = random_corpus(rng, max_docs=10, max_doc_len=25, vocab=6)
            for min_count in (2, 3):
                frequent = {
                    g[0]: c for g, c in oracle_cf(corpus, min_count, 1).items()
                }
                split = corpus.split(set(frequent))
                want = oracle_cf(corpus, min_count, 4)
                got = oracle_cf(split, min_count, 4)
                assert got == want

    def test_corpus_split_noop_when_everything_frequent(self, running_corpus):
        split = running_corpus.split({0, 1, 2})
        assert split is running_corpus


class TestCorpusFiles:
    def test_round_trip(self, tmp_path, running_corpus):
        write_corpus(tmp_path, running_corpus)
        loaded = load_corpus(tmp_path)
        assert loaded.dictionary.surfaces == running_corpus.dictionary.surfaces
        original = [(d.doc_id, d.year, d.fragments) for d in running_corpus.documents()]
        restored = [(d.doc_id, d.year, d.fragments) for d in loaded.documents()]
        assert restored == original

    def test_round_trip_with_years_and_shards(self, tmp_path):
        corpus = make_corpus(["a b. c d", "b c", "a", "d d d"], years=[1987, 2007, 1999, 1990], shard_size=2)
        write_corpus(tmp_path, corpus)
        loaded = load_corpus(tmp_path)
        assert len(loaded.shards) == 2
        assert [d.year for d in loaded.documents()] == [1987, 2007, 1999, 1990]

    def test_missing_directory_rejected(self, tmp_path):
        with pytest.raises(ValueError, match="no corpus shards"):
            load_corpus(tmp_path)

    def test_fragment_ids_are_global_and_dense(self):
        corpus = make_corpus(["a b. c", "d. e f. g"], shard_size=1)
        records = [r for shard in corpus.fragment_shards() for r in shard]
        assert [fid for fid, _, _ in records] == list(range(5))
