import math
import random

import pytest
from hypothesis import given, strategies as st

from lexfree.errors import ParseError, UnknownToken
from lexfree.lexicon import Lexicon, build_trie, format_lexicon, load_lexicon, read_lexicon, smear
from lexfree.tokens import TokenSet, encode_word
from helpers import quiet_train

TS = TokenSet.standard()


def test_load_lexicon_entry():
    lex = load_lexicon("ann\ta n 1\n", TS)
    assert lex.entries == {"ann": [tuple(encode_word("ann", TS))]}


def test_load_lexicon_empty_and_multiple_spellings():
    assert load_lexicon("", TS).entries == {}
    lex = load_lexicon("read\tr e a d\nread\tr e d\nread\tr e d\n", TS)
    assert len(lex.entries["read"]) == 2


def test_load_lexicon_errors():
    with pytest.raises(ParseError, match="line 2"):
        load_lexicon("a\ta\nbroken line\n", TS)
    with pytest.raises(UnknownToken):
        load_lexicon("x\tx #\n", TS)
    with pytest.raises(ParseError):
        load_lexicon("x\ta | b\n", TS)


def test_lexicon_file_round_trip(tmp_path):
    lex = Lexicon.from_words(["ann", "cat", "www"], TS)
    path = tmp_path / "lex.txt"
    path.write_text(format_lexicon(lex, TS))
    assert read_lexicon(path, TS).entries == lex.entries


def test_trie_hand_built():
    trie = build_trie(Lexicon.from_words(["a", "ann"], TS), TS)
    assert len(trie) == 4
    a = trie.walk(encode_word("a", TS))
    assert trie.lookup(encode_word("a", TS)) == ["a"]
    assert trie.lookup(encode_word("ann", TS)) == ["ann"]
    assert trie.lookup(encode_word("an", TS)) == []
    assert a == trie.children[0][TS.index_of["a"]]


def test_trie_shared_prefix_and_empty():
    assert len(build_trie(Lexicon.from_words(["ab", "ac"], TS), TS)) == 4
    assert len(build_trie(Lexicon(), TS)) == 1


def test_dense_tables_match_children():
    trie = build_trie(Lexicon.from_words(["ab", "ac", "b"], TS), TS)
    child, starts, ids = trie.dense()
    for node, kids in enumerate(trie.children):
        for tok in range(len(TS)):
            assert child[node, tok] == kids.get(tok, -1)
        assert list(ids[starts[node]:starts[node + 1]]) == trie.node_words[node]


@given(st.lists(st.text(alphabet="abc", min_size=1, max_size=5), max_size=8),
       st.text(alphabet="abc", min_size=1, max_size=5))
def test_trie_membership_matches_lexicon(words, probe):
    lex = Lexicon.from_words(words, TS)
    trie = build_trie(lex, TS)
    assert len(trie) <= 1 + sum(len(sp) for sps in lex.entries.values() for sp in sps)
    spelling = tuple(encode_word(probe, TS))
    in_lex = any(spelling in sps for sps in lex.entries.values())
    assert bool(trie.lookup(spelling)) == in_lex


def test_smear_is_max_over_subtree():
    lm = quiet_train([["ab"], ["ab"], ["ac"], ["b"]], 1, level="word")
    trie = smear(build_trie(Lexicon.from_words(["ab", "ac", "b"], TS), TS), lm)
    a = trie.walk(encode_word("a", TS))
    assert trie.smear_scores[a] == max(lm.unigram_logprob("ab"), lm.unigram_logprob("ac"))
    assert trie.smear_scores[0] == max(lm.unigram_logprob(w) for w in ("ab", "ac", "b"))
    single = smear(build_trie(Lexicon.from_words(["b"], TS), TS), lm)
    assert single.smear_scores[0] == lm.unigram_logprob("b")


def test_smear_invariant_random():
    rng = random.Random(3)
    words = sorted({"".join(rng.choice("abc") for _ in range(rng.randint(1, 4))) for _ in range(12)})
    lm = quiet_train([[rng.choice(words) for _ in range(3)] for _ in range(10)], 2, level="word")
    trie = smear(build_trie(Lexicon.from_words(words, TS), TS), lm)
    for node in range(len(trie)):
        best = max([lm.unigram_logprob(trie.words[w]) for w in trie.node_words[node]]
                   + [trie.smear_scores[c] for c in trie.children[node].values()], default=-math.inf)
        assert trie.smear_scores[node] == best
