"""Lexicon files and the prefix trie used to constrain lexicon-mode decoding."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np

from .errors import ParseError, UnknownToken
from .tokens import SIL, TokenSet, encode_word


@dataclass
class Lexicon:
    entries: Dict[str, List[tuple]] = field(default_factory=dict)

    @property
    def vocabulary(self) -> set:
        return set(self.entries)

    def words(self) -> list:
        return list(self.entries)

    def add(self, word: str, spelling: Sequence[int]) -> None:
        spelling = tuple(spelling)
        if not spelling:
            raise ValueError(f"empty spelling for {word!r}")
        spellings = self.entries.setdefault(word, [])
        if spelling not in spellings:
            spellings.append(spelling)

    @classmethod
    def from_words(cls, words, ts: TokenSet) -> "Lexicon":
        lex = cls()
        for w in words:
            lex.add(w, encode_word(w, ts))
        return lex


def load_lexicon(text: str, ts: TokenSet) -> Lexicon:
    """Parse ``word<TAB>space separated tokens`` lines."""
    lex = Lexicon()
    for lineno, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        parts = line.split("\t")
        if len(parts) != 2 or not parts[0].strip() or not parts[1].split():
            raise ParseError(f"expected 'word<TAB>spelling', got {line!r}", lineno)
        word = parts[0].strip()
        spelling = []
        for tok in parts[1].split():
            idx = ts.index_of.get(tok)
            if idx is None:
                raise UnknownToken(f"line {lineno}: token {tok!r} not in token set")
            if ts.kind(idx) == SIL:
                raise ParseError(f"silence token inside spelling of {word!r}", lineno)
            spelling.append(idx)
        lex.add(word, spelling)
    return lex


def read_lexicon(path, ts: TokenSet) -> Lexicon:
    with open(path, encoding="utf-8") as f:
        return load_lexicon(f.read(), ts)


def format_lexicon(lex: Lexicon, ts: TokenSet) -> str:
    lines = []
    for word, spellings in lex.entries.items():
        for sp in spellings:
            lines.append(f"{word}\t{' '.join(ts.tokens[i] for i in sp)}")
    return "\n".join(lines) + ("\n" if lines else "")


class LexiconTrie:
    """Prefix tree over spellings. Node 0 is the root.

    ``children[node]`` maps a token index to the child node and
    ``node_words[node]`` lists ids (into ``words``) of words spelled out
    exactly at that node.
    """

    def __init__(self, words: List[str], n_tokens: int):
        self.words = words
        self.word_index = {w: i for i, w in enumerate(words)}
        self.n_tokens = n_tokens
        self.children: List[dict] = [{}]
        self.node_words: List[list] = [[]]
        self.smear_scores: Optional[np.ndarray] = None
        self._dense = None

    def __len__(self):
        return len(self.children)

    def insert(self, spelling: Sequence[int], word_id: int) -> None:
        node = 0
        for tok in spelling:
            nxt = self.children[node].get(tok)
            if nxt is None:
                nxt = len(self.children)
                self.children[node][tok] = nxt
                self.children.append({})
                self.node_words.append([])
            node = nxt
        if word_id not in self.node_words[node]:
            self.node_words[node].append(word_id)

    def walk(self, spelling: Sequence[int]) -> Optional[int]:
        node = 0
        for tok in spelling:
            node = self.children[node].get(tok)
            if node is None:
                return None
        return node

    def lookup(self, spelling: Sequence[int]) -> list:
        """Words whose spelling is exactly ``spelling``."""
        node = self.walk(spelling)
        return [] if node is None else [self.words[w] for w in self.node_words[node]]

    def dense(self):
        """Flat arrays for the decoding kernels.

        Returns ``(child, word_start, word_ids)``: ``child`` is a
        ``nodes x tokens`` int32 table with -1 for missing edges, and the
        words at node ``i`` are ``word_ids[word_start[i]:word_start[i+1]]``.
        """
        if self._dense is None:
            n = len(self.children)
            child = np.full((n, self.n_tokens), -1, dtype=np.int32)
            for i, kids in enumerate(self.children):
                for tok, j in kids.items():
                    child[i, tok] = j
            starts = np.zeros(n + 1, dtype=np.int32)
            flat = []
            for i, ws in enumerate(self.node_words):
                flat.extend(ws)
                starts[i + 1] = len(flat)
            self._dense = (child, starts, np.asarray(flat, dtype=np.int32))
        return self._dense


def build_trie(lex: Lexicon, ts: TokenSet) -> LexiconTrie:
    trie = LexiconTrie(lex.words(), len(ts))
    for wid, word in enumerate(trie.words):
        for sp in lex.entries[word]:
            trie.insert(sp, wid)
    return trie


def smear(trie: LexiconTrie, word_lm) -> LexiconTrie:
    """Attach max-smeared word-LM unigram log10 scores to every node.

    Each node's score is the best unigram score of any word completed at or
    below it. The trie is modified in place and returned.
    """
    n = len(trie)
    scores = np.full(n, -math.inf)
    for i in range(n - 1, -1, -1):
        # children always have larger ids than their parents
        best = -math.inf
        for w in trie.node_words[i]:
            best = max(best, word_lm.unigram_logprob(trie.words[w]))
        for j in trie.children[i].values():
            best = max(best, scores[j])
        scores[i] = best
    trie.smear_scores = scores
    return trie
