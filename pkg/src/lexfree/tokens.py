"""Grapheme token set and text <-> token conversions.

The standard set has 31 tokens: 26 lowercase letters, apostrophe, period,
two repetition characters and the silence token ``|`` that separates
words. A doubled letter is written as the letter followed by ``1`` and a
tripled one as the letter followed by ``2``, so ``ann`` becomes ``a n 1``.
"""
from __future__ import annotations

import string
from collections import Counter
from dataclasses import dataclass, field
from itertools import groupby
from typing import Iterable, Optional, Sequence

from .errors import DanglingRepetition, EmptyWord, UnknownCharacter

SILENCE = "|"
REP1 = "1"
REP2 = "2"
UNKNOWN_WORD = "<unk>"

LETTER, REPEAT, SIL = 0, 1, 2


@dataclass(frozen=True)
class TokenSet:
    tokens: tuple
    silence: str = SILENCE
    rep1: Optional[str] = REP1
    rep2: Optional[str] = REP2
    index_of: dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        tokens = tuple(self.tokens)
        object.__setattr__(self, "tokens", tokens)
        if len(set(tokens)) != len(tokens):
            raise ValueError("duplicate tokens in token set")
        if self.silence not in tokens:
            raise ValueError(f"silence token {self.silence!r} not in token set")
        for rep in (self.rep1, self.rep2):
            if rep is not None and rep not in tokens:
                raise ValueError(f"repetition token {rep!r} not in token set")
        if self.rep1 is not None and self.rep1 == self.rep2:
            raise ValueError("repetition tokens must differ")
        object.__setattr__(self, "index_of", {t: i for i, t in enumerate(tokens)})

    @classmethod
    def standard(cls) -> "TokenSet":
        return cls(tuple(string.ascii_lowercase) + ("'", ".", REP1, REP2, SILENCE))

    @classmethod
    def from_tokens(cls, tokens: Sequence[str]) -> "TokenSet":
        """Token set over ``tokens``; repetition tokens are used when present."""
        tokens = tuple(tokens)
        return cls(
            tokens,
            rep1=REP1 if REP1 in tokens else None,
            rep2=REP2 if REP2 in tokens else None,
        )

    def __len__(self):
        return len(self.tokens)

    @property
    def silence_index(self) -> int:
        return self.index_of[self.silence]

    @property
    def rep1_index(self) -> Optional[int]:
        return None if self.rep1 is None else self.index_of[self.rep1]

    @property
    def rep2_index(self) -> Optional[int]:
        return None if self.rep2 is None else self.index_of[self.rep2]

    def kind(self, index: int) -> int:
        """LETTER, REPEAT or SIL for a token index."""
        tok = self.tokens[index]
        if tok == self.silence:
            return SIL
        if tok == self.rep1 or tok == self.rep2:
            return REPEAT
        return LETTER

    def kinds(self) -> list:
        return [self.kind(i) for i in range(len(self.tokens))]

    def extra_copies(self, index: int) -> int:
        tok = self.tokens[index]
        if tok == self.rep1:
            return 1
        if tok == self.rep2:
            return 2
        return 0

    def is_letter(self, ch: str) -> bool:
        return ch in self.index_of and self.kind(self.index_of[ch]) == LETTER


def encode_word(word: str, ts: TokenSet) -> list:
    """Encode one word as token indices, folding letter runs into repetition tokens."""
    if not word:
        raise EmptyWord("cannot encode an empty word")
    out = []
    for ch, run in groupby(word.lower()):
        if not ts.is_letter(ch):
            raise UnknownCharacter(f"character {ch!r} in {word!r} has no letter token")
        k = len(list(run))
        idx = ts.index_of[ch]
        while k > 0:
            # greedy: chunks of 3, then 2, then 1
            chunk = min(k, 3)
            if chunk == 3 and ts.rep2 is None:
                chunk = 2
            if chunk == 2 and ts.rep1 is None:
                raise UnknownCharacter(f"{word!r} needs a repetition token the token set lacks")
            out.append(idx)
            if chunk == 2:
                out.append(ts.rep1_index)
            elif chunk == 3:
                out.append(ts.rep2_index)
            k -= chunk
    return out


def encode_sentence(words: Sequence[str], ts: TokenSet, eos: bool = True) -> list:
    """Join encoded words with single silences.

    With ``eos=False`` the sequence is mid-stream and ends with a silence.
    """
    out = []
    for i, w in enumerate(words):
        if i:
            out.append(ts.silence_index)
        out.extend(encode_word(w, ts))
    if words and not eos:
        out.append(ts.silence_index)
    return out


def decode_chars(seq: Iterable[int], ts: TokenSet) -> list:
    """Split on silences and expand repetition tokens back into letters."""
    words = []
    current = []
    prev_kind = SIL
    for idx in seq:
        kind = ts.kind(idx)
        if kind == SIL:
            if current:
                words.append("".join(current))
                current = []
        elif kind == REPEAT:
            if prev_kind != LETTER:
                raise DanglingRepetition(
                    f"repetition token {ts.tokens[idx]!r} has no preceding letter"
                )
            current.append(current[-1] * ts.extra_copies(idx))
        else:
            current.append(ts.tokens[idx])
        prev_kind = kind
    if current:
        words.append("".join(current))
    return words


def collapse_alignment(alignment: Iterable[int]) -> list:
    """Merge runs of identical frame labels into single tokens."""
    return [k for k, _ in groupby(alignment)]


def split_word_spans(labels: Sequence[int], ts: TokenSet) -> list:
    """Group collapsed labels into per-word token tuples (silences removed)."""
    spans = []
    current = []
    sil = ts.silence_index
    for idx in labels:
        if idx == sil:
            if current:
                spans.append(tuple(current))
                current = []
        else:
            current.append(idx)
    if current:
        spans.append(tuple(current))
    return spans


@dataclass(frozen=True)
class CorpusPrepConfig:
    min_word_count: int = 0
    max_vocab: Optional[int] = None
    unknown_token: str = UNKNOWN_WORD

    def __post_init__(self):
        if self.min_word_count < 0:
            raise ValueError("min_word_count must be non-negative")
        if self.max_vocab is not None and self.max_vocab < 0:
            raise ValueError("max_vocab must be non-negative")


def build_vocabulary(counts: Counter, cfg: CorpusPrepConfig) -> list:
    """Words with count >= min_word_count, most frequent first, ties alphabetical."""
    ranked = sorted(
        (w for w, c in counts.items() if c >= cfg.min_word_count),
        key=lambda w: (-counts[w], w),
    )
    if cfg.max_vocab is not None:
        ranked = ranked[: cfg.max_vocab]
    return ranked


def prepare_lm_corpus(sentences: Iterable[str], cfg: CorpusPrepConfig, ts: TokenSet):
    """Build the word corpus, character corpus and vocabulary from raw sentences.

    Returns ``(word_corpus, char_corpus, vocab)``. The word corpus maps
    out-of-vocabulary words to ``cfg.unknown_token``; the character corpus
    keeps every original word since character models are open-vocabulary.
    ``vocab`` is ordered by descending count.
    """
    tokenized = []
    counts = Counter()
    for lineno, line in enumerate(sentences, start=1):
        words = line.lower().split()
        tokenized.append(words)
        counts.update(words)
    vocab = build_vocabulary(counts, cfg)
    keep = set(vocab)
    word_corpus = [[w if w in keep else cfg.unknown_token for w in words] for words in tokenized]
    char_corpus = []
    for lineno, words in enumerate(tokenized, start=1):
        try:
            char_corpus.append(encode_sentence(words, ts, eos=True))
        except UnknownCharacter as exc:
            raise UnknownCharacter(f"sentence {lineno}: {exc}") from None
    return word_corpus, char_corpus, vocab


def read_vocabulary(path) -> list:
    with open(path, encoding="utf-8") as f:
        return [line.strip() for line in f if line.strip()]


def write_vocabulary(path, vocab: Sequence[str]) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for w in vocab:
            f.write(w + "\n")
