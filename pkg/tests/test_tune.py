import math
import random

import numpy as np
import pytest

from lexfree.decoder import DecoderOptions, EmissionMatrix
from lexfree.tokens import TokenSet, encode_sentence
from lexfree.tune import SearchSpace, best_trial, format_trial_log, random_search
from helpers import char_corpus, quiet_train

TS = TokenSet.from_tokens(["a", "b", "c", "|"])


def one_hot_dev(refs, margin=1.0):
    dev = []
    for ref in refs:
        seq = encode_sentence(ref.split(), TS)
        scores = np.full((len(seq), len(TS)), -margin)
        scores[np.arange(len(seq)), seq] = 0.0
        dev.append((EmissionMatrix(scores, TS), ref))
    return dev


@pytest.fixture(scope="module")
def adversarial():
    refs = ["ab ca", "bc ab", "ca bc", "ab bc"]
    rng = random.Random(0)
    # LM trained on scrambled words the references never contain
    shuffled = [["".join(rng.sample("abc", 3)) for _ in range(3)] for _ in range(20)]
    lm = quiet_train(char_corpus(shuffled, TS), 3, level="char", vocabulary=TS.tokens)
    return one_hot_dev(refs), lm


def test_space_validation_and_ranges():
    with pytest.raises(ValueError):
        SearchSpace(alpha_range=(1, 1))
    with pytest.raises(ValueError):
        SearchSpace(n_trials=0)
    s = SearchSpace(n_trials=50, seed=4).sample()
    assert np.all((s[:, 0] >= 0) & (s[:, 0] < 5))
    assert np.all((s[:, 1:] >= -5) & (s[:, 1:] < 5))


def test_samples_are_prefix_stable():
    short = SearchSpace(n_trials=5, seed=9).sample()
    long = SearchSpace(n_trials=20, seed=9).sample()
    assert np.array_equal(short, long[:5])


def test_single_trial_is_best(adversarial):
    dev, lm = adversarial
    best, trials = random_search(dev, lm, None, DecoderOptions(beam_size=20), SearchSpace(n_trials=1, seed=1))
    assert len(trials) == 1
    assert (best.alpha, best.beta, best.gamma) == (trials[0].alpha, trials[0].beta, trials[0].gamma)


def test_adversarial_lm_prefers_low_alpha(adversarial):
    dev, lm = adversarial
    space = SearchSpace(n_trials=12, seed=3)
    best, trials = random_search(dev, lm, None, DecoderOptions(beam_size=20), space)
    ok = [t for t in trials if t.ok]
    b = best_trial(trials)
    assert b.wer < max(t.wer for t in ok)
    assert all(b.wer <= t.wer for t in ok)


def test_logs_deterministic_across_runs_and_threads(adversarial):
    dev, lm = adversarial
    space = SearchSpace(n_trials=8, seed=11)
    base = DecoderOptions(beam_size=10)
    logs = {format_trial_log(random_search(dev, lm, None, base, space, threads=t)[1]) for t in (1, 1, 4)}
    assert len(logs) == 1


def test_best_prefix_property(adversarial):
    dev, lm = adversarial
    base = DecoderOptions(beam_size=10)
    _, trials = random_search(dev, lm, None, base, SearchSpace(n_trials=10, seed=5))
    bests = [best_trial(trials[:k]).wer for k in range(1, 11)]
    assert all(x >= y for x, y in zip(bests, bests[1:]))


def test_failed_trials_are_logged_not_fatal(adversarial, monkeypatch):
    dev, lm = adversarial
    import lexfree.tune as tune
    from lexfree.errors import EmptyBeam
    real = tune.decode

    def flaky(em, tr, lm_, lex, opt, backend=None):
        if opt.beta > 0:
            raise EmptyBeam("forced")
        return real(em, tr, lm_, lex, opt, backend)

    monkeypatch.setattr(tune, "decode", flaky)
    _, trials = random_search(dev, lm, None, DecoderOptions(beam_size=5), SearchSpace(n_trials=10, seed=2))
    failed = [t for t in trials if not t.ok]
    assert failed and all(t.status == "failed:EmptyBeam" and math.isnan(t.wer) for t in failed)
    assert "failed:EmptyBeam" in format_trial_log(trials)
    assert best_trial(trials).ok


def test_empty_dev_rejected(adversarial):
    _, lm = adversarial
    with pytest.raises(ValueError):
        random_search([], lm, None, DecoderOptions())
