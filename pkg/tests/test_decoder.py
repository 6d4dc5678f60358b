import math
import random
from dataclasses import replace

import numpy as np
import pytest

from lexfree import kernels
from lexfree.decoder import (
    CHAR_LM_FREE, CHAR_LM_LEXICON, MODES, PER_FRAME, WORD_LM_LEXICON,
    DecoderOptions, EmissionMatrix, TransitionMatrix, brute_force_decode, decode, total_score,
)
from lexfree.errors import EmptyBeam, LengthMismatch, ModeMismatch, TooLarge
from lexfree.lexicon import Lexicon, build_trie
from lexfree.tokens import TokenSet, collapse_alignment, decode_chars
from helpers import oov_fixture, quiet_train, random_instance, uniform_char_lm

BACKENDS = sorted(kernels.available())


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


def audited(em, tr, lm, lex, opt, backend):
    """Decode and check the reported total against a from-scratch recomputation."""
    res = decode(em, tr, lm, lex, opt, backend=backend)
    assert abs(total_score(res, em, tr, lm, opt) - res.total) <= 1e-9
    assert res.total == pytest.approx(
        res.am_score + res.lm_weighted + res.word_penalty + res.silence_penalty, abs=1e-12)
    assert 1 <= res.effective_beam_size <= opt.beam_size
    return res


def test_trivial_two_frames(backend):
    ts = TokenSet.from_tokens(["a", "|"])
    em = EmissionMatrix(np.array([[0.0, -10.0], [0.0, -10.0]]), ts)
    opt = DecoderOptions(alpha=0, beta=0, gamma=0)
    res = audited(em, None, uniform_char_lm(["a", "|"]), None, opt, backend)
    assert res.words == ["a"] and res.alignment == [0, 0]
    assert res.effective_beam_size == 1
    assert res.total == res.am_score == 0.0
    bf = brute_force_decode(em, None, uniform_char_lm(["a", "|"]), None, opt)
    assert (bf.words, bf.alignment, bf.total) == (res.words, res.alignment, res.total)


def test_hand_scored_alignment():
    ts = TokenSet.from_tokens(["a", "|"])
    em = EmissionMatrix(np.array([[-1.0, -5.0], [-3.0, -0.5]]), ts)
    tr = TransitionMatrix(np.array([[-0.1, -0.2], [-0.3, -0.4]]))
    lm = uniform_char_lm(["a", "|"])
    opt = DecoderOptions(alpha=2.0, beta=0.5, gamma=-1.0)
    res = decode(em, tr, lm, None, opt)
    # alignment [a, |]: am = -1 + -0.5 + tr[a][|] = -1.7; LM scores "a" then </s>
    assert res.alignment == [0, 1] and res.words == ["a"]
    assert res.am_score == pytest.approx(-1.7)
    assert res.lm_score == pytest.approx(2 * math.log(1 / 3))
    assert res.total == pytest.approx(-1.7 + 2 * 2 * math.log(1 / 3) + 0.5 - 1.0)


def test_total_score_zero_weights_and_length_check():
    rng = random.Random(1)
    em, tr, lm, lex, opt, _ = random_instance(rng, mode=CHAR_LM_FREE)
    opt = replace(opt, alpha=0.0, beta=0.0, gamma=0.0)
    res = decode(em, tr, lm, lex, opt)
    assert total_score(res, em, tr, lm, opt) == pytest.approx(res.am_score, abs=1e-12)
    res.alignment = res.alignment + [0]
    with pytest.raises(LengthMismatch):
        total_score(res, em, tr, lm, opt)


@pytest.mark.parametrize("seed", range(40))
def test_matches_brute_force(seed, backend):
    em, tr, lm, lex, opt, _ = random_instance(random.Random(seed))
    try:
        expect = brute_force_decode(em, tr, lm, lex, opt)
    except EmptyBeam:
        with pytest.raises(EmptyBeam):
            decode(em, tr, lm, lex, opt, backend=backend)
        return
    res = audited(em, tr, lm, lex, opt, backend)
    assert (res.words, res.alignment) == (expect.words, expect.alignment)
    assert abs(res.total - expect.total) <= 1e-9


@pytest.mark.parametrize("seed", range(20))
def test_lexicon_modes_emit_lexicon_words(seed, backend):
    rng = random.Random(1000 + seed)
    mode = rng.choice([CHAR_LM_LEXICON, WORD_LM_LEXICON])
    em, tr, lm, lex, opt, words = random_instance(rng, mode=mode, beam_size=rng.randint(1, 8))
    try:
        res = audited(em, tr, lm, lex, opt, backend)
    except EmptyBeam:
        return
    assert set(res.words) <= set(words)


def test_lexicon_constraint_with_wrong_emissions(backend):
    ts = TokenSet.from_tokens(["a", "b", "|"])
    em = EmissionMatrix(np.array([[-9.0, 0.0, -9.0], [-9.0, 0.0, -9.0]]), ts)
    trie = build_trie(Lexicon.from_words(["a"], ts), ts)
    lm = uniform_char_lm(["a", "b", "|"])
    res = audited(em, None, lm, trie, DecoderOptions(mode=CHAR_LM_LEXICON), backend)
    # "b" is unreachable; the empty transcription or "a" are the only options
    assert set(res.words) <= {"a"}


def test_oov_fixture_behaviour(backend):
    em, ts, vocab, corpus = oov_fixture()
    chars = [[ts.tokens[i] for i in s] for s in
             [__import__("lexfree").encode_sentence(c, ts) for c in corpus]]
    char_lm = quiet_train(chars, 3, level="char", vocabulary=ts.tokens)
    word_lm = quiet_train(corpus, 2, level="word")
    trie = build_trie(Lexicon.from_words(vocab, ts), ts)
    free = audited(em, None, char_lm, None, DecoderOptions(alpha=0.5, beam_size=50), backend)
    assert "fauchelevent" in free.words
    lexmode = audited(em, None, word_lm, trie,
                      DecoderOptions(alpha=0.5, beam_size=50, mode=WORD_LM_LEXICON), backend)
    assert "fauchelevent" not in lexmode.words
    assert set(lexmode.words) <= set(vocab)


@pytest.mark.parametrize("seed", range(20))
def test_effective_beam_reproduces_result(seed, backend):
    rng = random.Random(2000 + seed)
    em, tr, lm, lex, opt, _ = random_instance(rng, beam_size=rng.choice([3, 10, 10_000]), max_frames=6)
    try:
        res = audited(em, tr, lm, lex, opt, backend)
    except EmptyBeam:
        return
    again = audited(em, tr, lm, lex, replace(opt, beam_size=res.effective_beam_size), backend)
    assert (again.words, again.alignment, again.total) == (res.words, res.alignment, res.total)


@pytest.mark.parametrize("seed", range(15))
def test_smearing_keeps_completed_scores(seed, backend):
    rng = random.Random(3000 + seed)
    em, tr, lm, lex, opt, _ = random_instance(rng, mode=WORD_LM_LEXICON)
    plain = replace(opt, smearing=False)
    try:
        ref = audited(em, tr, lm, lex, plain, backend)
    except EmptyBeam:
        return
    smeared = audited(em, tr, lm, lex, replace(opt, smearing=True), backend)
    assert (smeared.words, smeared.alignment) == (ref.words, ref.alignment)
    assert abs(smeared.total - ref.total) <= 1e-9


@pytest.mark.parametrize("seed", range(15))
def test_narrow_beam_never_beats_exhaustive(seed, backend):
    rng = random.Random(4000 + seed)
    em, tr, lm, lex, opt, _ = random_instance(rng, max_frames=5)
    try:
        best = audited(em, tr, lm, lex, opt, backend)
    except EmptyBeam:
        return
    for b in (1, 2, 4):
        try:
            narrow = audited(em, tr, lm, lex, replace(opt, beam_size=b), backend)
        except EmptyBeam:
            continue
        assert narrow.total <= best.total + 1e-9


def test_per_frame_counts_silence_frames(backend):
    ts = TokenSet.from_tokens(["a", "|"])
    em = EmissionMatrix(np.array([[0.0, -9.0], [-9.0, 0.0], [-9.0, 0.0]]), ts)
    lm = uniform_char_lm(["a", "|"])
    seg = audited(em, None, lm, None, DecoderOptions(gamma=0.0), backend)
    frame = audited(em, None, lm, None, DecoderOptions(gamma=0.0, silence_term=PER_FRAME), backend)
    assert seg.alignment == frame.alignment == [0, 1, 1]
    assert (seg.silence_count, frame.silence_count) == (1, 2)


def test_beam_threshold_prunes(backend):
    ts = TokenSet.from_tokens(["a", "b", "|"])
    em = EmissionMatrix(np.array([[0.0, -50.0, -50.0]] * 3), ts)
    lm = uniform_char_lm(["a", "b", "|"])
    res = audited(em, None, lm, None, DecoderOptions(beam_threshold=1.0), backend)
    assert res.words == ["a"] and res.effective_beam_size == 1


def test_mode_mismatch_errors():
    ts = TokenSet.from_tokens(["a", "|"])
    em = EmissionMatrix(np.zeros((2, 2)), ts)
    char_lm = uniform_char_lm(["a", "|"])
    word_lm = quiet_train([["a"]], 1, level="word")
    trie = build_trie(Lexicon.from_words(["a"], ts), ts)
    with pytest.raises(ModeMismatch):
        decode(em, None, char_lm, trie, DecoderOptions(mode=WORD_LM_LEXICON))
    with pytest.raises(ModeMismatch):
        decode(em, None, word_lm, None, DecoderOptions())
    with pytest.raises(ModeMismatch):
        decode(em, None, char_lm, None, DecoderOptions(mode=CHAR_LM_LEXICON))
    with pytest.raises(ModeMismatch):
        DecoderOptions(mode="nonsense")
    with pytest.raises(ValueError):
        DecoderOptions(beam_size=0)


def test_silence_only_gives_empty_transcription(backend):
    ts = TokenSet.from_tokens(["a", "b", "|"])
    em = EmissionMatrix(np.array([[-9.0, -9.0, 0.0]] * 2), ts)
    trie = build_trie(Lexicon.from_words(["ab"], ts), ts)
    lm = uniform_char_lm(["a", "b", "|"])
    for mode in (CHAR_LM_FREE, CHAR_LM_LEXICON):
        res = audited(em, None, lm, trie, DecoderOptions(mode=mode), backend)
        assert res.words == [] and res.alignment == [2, 2]


def test_brute_force_guard():
    ts = TokenSet.standard()
    em = EmissionMatrix(np.zeros((5, len(ts))), ts)
    with pytest.raises(TooLarge):
        brute_force_decode(em, None, uniform_char_lm(ts.tokens), None, DecoderOptions())


def test_emission_validation():
    ts = TokenSet.from_tokens(["a", "|"])
    with pytest.raises(ValueError):
        EmissionMatrix(np.zeros((2, 3)), ts)
    with pytest.raises(ValueError):
        EmissionMatrix(np.array([[0.0, math.nan]]), ts)


def test_result_words_match_alignment(backend):
    for seed in range(30):
        em, tr, lm, lex, opt, _ = random_instance(random.Random(5000 + seed), mode=CHAR_LM_FREE)
        try:
            res = audited(em, tr, lm, lex, opt, backend)
        except EmptyBeam:
            continue
        assert decode_chars(collapse_alignment(res.alignment), em.token_set) == res.words
