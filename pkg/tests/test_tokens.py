from collections import Counter

import pytest
from hypothesis import given, strategies as st

from lexfree.errors import DanglingRepetition, EmptyWord, UnknownCharacter
from lexfree.tokens import (
    CorpusPrepConfig, TokenSet, build_vocabulary, collapse_alignment, decode_chars,
    encode_sentence, encode_word, prepare_lm_corpus, read_vocabulary, write_vocabulary,
)

TS = TokenSet.standard()


def idx(*tokens):
    return [TS.index_of[t] for t in tokens]


def test_standard_token_set_layout():
    assert len(TS) == 31
    assert TS.tokens[:26] == tuple("abcdefghijklmnopqrstuvwxyz")
    assert TS.silence == "|" and TS.rep1 == "1" and TS.rep2 == "2"


@pytest.mark.parametrize("word, tokens", [
    ("ann", ["a", "n", "1"]),
    ("a", ["a"]),
    ("www", ["w", "2"]),
    ("aaaa", ["a", "2", "a"]),
    ("aaaaa", ["a", "2", "a", "1"]),
    ("o'neil", ["o", "'", "n", "e", "i", "l"]),
])
def test_encode_word(word, tokens):
    assert encode_word(word, TS) == idx(*tokens)


def test_encode_word_errors():
    with pytest.raises(EmptyWord):
        encode_word("", TS)
    with pytest.raises(UnknownCharacter):
        encode_word("a|b", TS)
    with pytest.raises(UnknownCharacter):
        encode_word("café", TS)
    with pytest.raises(UnknownCharacter):
        encode_word("aa", TokenSet.from_tokens(["a", "|"]))


def test_small_token_set_without_rep2_splits_runs():
    ts = TokenSet.from_tokens(["a", "1", "|"])
    assert encode_word("aaa", ts) == [0, 1, 0]


def test_decode_chars():
    assert decode_chars(idx("a", "n", "1", "|", "c", "a", "t"), TS) == ["ann", "cat"]
    assert decode_chars(idx("|", "a", "|"), TS) == ["a"]
    assert decode_chars(idx("w", "2", "|", "|", "x"), TS) == ["www", "x"]
    with pytest.raises(DanglingRepetition):
        decode_chars(idx("1", "a"), TS)
    with pytest.raises(DanglingRepetition):
        decode_chars(idx("a", "|", "1"), TS)


def test_encode_sentence():
    assert encode_sentence(["ann", "cat"], TS) == idx("a", "n", "1", "|", "c", "a", "t")
    assert encode_sentence(["a"], TS) == idx("a")
    assert encode_sentence([], TS) == []
    assert encode_sentence(["a", "b"], TS, eos=False) == idx("a", "|", "b", "|")


def test_collapse_alignment():
    assert collapse_alignment(idx("a", "a", "n", "n", "n", "1")) == idx("a", "n", "1")
    assert collapse_alignment(idx("a")) == idx("a")
    assert collapse_alignment(idx("|", "|", "|")) == idx("|")
    assert collapse_alignment([]) == []


words = st.text(alphabet="abcz'.", min_size=1, max_size=12)


@given(st.lists(words, max_size=5))
def test_sentence_round_trip(ws):
    assert decode_chars(encode_sentence(ws, TS), TS) == ws


@given(words)
def test_encoded_word_survives_collapse(w):
    # repetition tokens make the encoding collapse-invariant
    enc = encode_word(w, TS)
    assert collapse_alignment(enc) == enc


@given(st.lists(st.integers(0, 4), max_size=20))
def test_collapse_idempotent(xs):
    once = collapse_alignment(xs)
    assert collapse_alignment(once) == once


def test_prepare_lm_corpus_min_count():
    word_corpus, char_corpus, vocab = prepare_lm_corpus(
        ["a b", "a c", "a b"], CorpusPrepConfig(min_word_count=2), TS)
    assert vocab == ["a", "b"]
    assert word_corpus[1] == ["a", "<unk>"]
    # character corpus keeps the original word
    assert char_corpus[1] == idx("a", "|", "c")


def test_prepare_lm_corpus_defaults_and_empty():
    wc, cc, vocab = prepare_lm_corpus(["b a", "a"], CorpusPrepConfig(), TS)
    assert vocab == ["a", "b"] and wc == [["b", "a"], ["a"]]
    assert prepare_lm_corpus([], CorpusPrepConfig(), TS) == ([], [], [])


def test_prepare_lm_corpus_reports_sentence():
    with pytest.raises(UnknownCharacter, match="sentence 2"):
        prepare_lm_corpus(["ok", "bäd"], CorpusPrepConfig(), TS)


def test_vocabulary_truncation_breaks_ties_alphabetically():
    counts = Counter({"b": 2, "a": 2, "c": 5, "d": 1})
    assert build_vocabulary(counts, CorpusPrepConfig(max_vocab=3)) == ["c", "a", "b"]
    with pytest.raises(ValueError):
        CorpusPrepConfig(min_word_count=-1)


def test_vocabulary_file_round_trip(tmp_path):
    path = tmp_path / "v.txt"
    write_vocabulary(path, ["x", "y"])
    assert read_vocabulary(path) == ["x", "y"]
