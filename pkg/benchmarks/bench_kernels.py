"""Compare the compiled and pure-Python kernels on decoding and edit distance.

    python3 benchmarks/bench_kernels.py [--frames 200] [--beam 100] [--repeat 3]
"""
import argparse
import random
import statistics
import time
import warnings

import numpy as np

from lexfree import kernels
from lexfree.decoder import CHAR_LM_FREE, CHAR_LM_LEXICON, WORD_LM_LEXICON, DecoderOptions, EmissionMatrix, decode
from lexfree.errors import DegenerateCountsWarning
from lexfree.evaluation import edit_distance
from lexfree.lexicon import Lexicon, build_trie
from lexfree.ngram import train
from lexfree.tokens import TokenSet, encode_sentence


def setup(frames: int, seed: int = 0):
    rng = random.Random(seed)
    ts = TokenSet.standard()
    words = sorted({"".join(rng.choice("abcdefghijklmnop") for _ in range(rng.randint(2, 7))) for _ in range(500)})
    sents = [[rng.choice(words) for _ in range(rng.randint(3, 12))] for _ in range(2000)]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DegenerateCountsWarning)
        char_lm = train([[ts.tokens[i] for i in encode_sentence(s, ts)] for s in sents], 6,
                        level="char", vocabulary=ts.tokens)
        word_lm = train(sents, 3, level="word")
    trie = build_trie(Lexicon.from_words(words, ts), ts)
    em = EmissionMatrix(np.random.default_rng(seed).normal(-3, 1.5, size=(frames, len(ts))), ts)
    return em, char_lm, word_lm, trie


def timed(fn, repeat):
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return statistics.median(times)


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--frames", type=int, default=200)
    ap.add_argument("--beam", type=int, default=100)
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    em, char_lm, word_lm, trie = setup(args.frames)
    backends = sorted(kernels.available())
    cases = [
        (CHAR_LM_FREE, char_lm, None),
        (CHAR_LM_LEXICON, char_lm, trie),
        (WORD_LM_LEXICON, word_lm, trie),
    ]
    print(f"frames={args.frames} beam={args.beam} tokens={em.n_tokens} backends={','.join(backends)}")
    print(f"{'case':<22}" + "".join(f"{b:>12}" for b in backends) + f"{'speedup':>10}")
    for mode, lm, lex in cases:
        opt = DecoderOptions(alpha=1.0, beta=0.5, gamma=0.0, beam_size=args.beam, beam_threshold=25.0, mode=mode)
        t = {b: timed(lambda: decode(em, None, lm, lex, opt, backend=b), args.repeat) for b in backends}
        print(_row(f"decode {mode}", t))

    rng = random.Random(1)
    pairs = [([rng.choice("abcdefgh") for _ in range(300)], [rng.choice("abcdefgh") for _ in range(300)])
             for _ in range(20)]
    t = {b: timed(lambda: [edit_distance(r, h, b) for r, h in pairs], args.repeat) for b in backends}
    print(_row("edit distance 20x300", t))


def _row(name, t):
    cells = "".join(f"{t[b] * 1000:>10.1f}ms" for b in sorted(t))
    speed = f"{t['python'] / t['cython']:>9.1f}x" if "cython" in t else f"{'-':>10}"
    return f"{name:<22}{cells}{speed}"


if __name__ == "__main__":
    main()
