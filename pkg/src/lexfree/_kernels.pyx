# cython: language_level=3, boundscheck=False, wraparound=False, initializedcheck=False
# distutils: language = c++
"""Compiled kernels. Must stay bit-identical to ``_kernels_py``."""
import math

import numpy as np

from libc.math cimport INFINITY
from cython.operator cimport dereference as deref
from libc.stdint cimport int8_t, int32_t, int64_t, uint32_t, uint64_t
from libcpp.unordered_map cimport unordered_map
from libcpp.utility cimport pair
from libcpp.vector cimport vector

cdef enum:
    MODE_FREE = 0
    MODE_CHAR_LEX = 1
    MODE_WORD_LEX = 2
    K_LETTER = 0
    K_REPEAT = 1
    K_SIL = 2

NAME = "cython"

MAX_TOKENS = 255
MAX_NODES = 1 << 24
MAX_LM_STATES = 1 << 30
LN10_PY = math.log(10.0)


cdef struct Cand:
    double am
    double lm
    int32_t wc
    int32_t sc
    int32_t lms
    int32_t node
    int32_t last
    int8_t pend
    int32_t parent
    int32_t word
    double total


cdef class CompiledLM:
    """Hash-table form of an n-gram model, scored without the interpreter.

    Mirrors ``NGramModel.score_id``: walk the backoff chain for the
    probability, then extend the state and truncate it to a stored context.
    """

    cdef vector[int32_t] suffix, length
    cdef vector[double] bow
    cdef unordered_map[uint64_t, double] prob
    cdef unordered_map[uint64_t, int32_t] ext
    cdef int32_t root, order
    cdef double scale

    def __init__(self, t, double scale=LN10_PY):
        cdef Py_ssize_t i
        if len(t.suffix) >= MAX_LM_STATES:
            raise ValueError("too many LM states for the compiled kernel")
        self.suffix = [int(x) for x in t.suffix]
        self.length = [int(x) for x in t.length]
        self.bow = [float(x) for x in t.backoff]
        cdef uint64_t[::1] pk = np.ascontiguousarray(t.prob_keys, dtype=np.uint64)
        cdef double[::1] pv = np.ascontiguousarray(t.prob_values, dtype=np.float64)
        cdef uint64_t[::1] ek = np.ascontiguousarray(t.ext_keys, dtype=np.uint64)
        cdef int32_t[::1] ev = np.ascontiguousarray(t.ext_values, dtype=np.int32)
        self.prob.reserve(pk.shape[0])
        for i in range(pk.shape[0]):
            self.prob[pk[i]] = pv[i]
        self.ext.reserve(ek.shape[0])
        for i in range(ek.shape[0]):
            self.ext[ek[i]] = ev[i]
        self.root = t.root
        self.order = t.order
        self.scale = scale

    cdef pair[int32_t, double] step(self, int32_t sid, int32_t wid):
        cdef pair[int32_t, double] r
        cdef int32_t s = sid
        cdef double acc = 0.0
        cdef uint64_t w = <uint64_t>(<uint32_t>wid)
        cdef unordered_map[uint64_t, double].iterator pit
        cdef unordered_map[uint64_t, int32_t].iterator eit
        r.first = 0
        r.second = -INFINITY
        if wid < 0:
            return r
        while True:
            pit = self.prob.find((<uint64_t>s << 32) | w)
            if pit != self.prob.end():
                r.second = (acc + deref(pit).second) * self.scale
                break
            acc = acc + self.bow[s]
            if s == self.root:
                return r
            s = self.suffix[s]
        s = sid
        r.first = self.root
        while True:
            if self.length[s] + 1 <= self.order - 1:
                eit = self.ext.find((<uint64_t>s << 32) | w)
                if eit != self.ext.end():
                    r.first = deref(eit).second
                    break
            if s == self.root:
                break
            s = self.suffix[s]
        return r

    def score(self, sid, wid):
        """``(next state id, natural-log probability)``; for tests."""
        r = self.step(sid, wid)
        return r.first, r.second


cdef class FrameExpander:
    """Extends every beam hypothesis by every token for one frame.

    Candidates sharing ``(lm state, trie node, last token, pending silence)``
    are merged into the slot of the first one generated, keeping the higher
    total. Returns the candidate columns in generation order.
    """

    cdef int n, sil, mode
    cdef bint per_frame, has_tr, has_smear, has_trie
    cdef double alpha, beta, gamma
    cdef int8_t[::1] kinds
    cdef double[:, ::1] tr
    cdef int32_t[:, ::1] child
    cdef int32_t[::1] word_start
    cdef int32_t[::1] word_ids
    cdef double[::1] smear
    cdef object lm_step
    cdef unordered_map[uint64_t, pair[int32_t, double]] cache
    cdef vector[Cand] out
    cdef unordered_map[uint64_t, int32_t] slots
    cdef bint has_tables
    cdef vector[int32_t] t_wid
    cdef CompiledLM clm

    def __init__(self, kinds, sil, mode, per_frame, alpha, beta, gamma,
                 transitions, child, word_start, word_ids, smear, lm_step, lm_tables=None):
        self.kinds = np.ascontiguousarray(kinds, dtype=np.int8)
        self.n = len(self.kinds)
        if self.n > MAX_TOKENS:
            raise ValueError("too many tokens for the compiled kernel")
        self.sil = sil
        self.mode = mode
        self.per_frame = per_frame
        self.alpha = alpha
        self.beta = beta
        self.gamma = gamma
        self.has_tr = transitions is not None
        if self.has_tr:
            self.tr = np.ascontiguousarray(transitions, dtype=np.float64)
        self.has_trie = child is not None
        if self.has_trie:
            if len(child) >= MAX_NODES:
                raise ValueError("trie too large for the compiled kernel")
            self.child = np.ascontiguousarray(child, dtype=np.int32)
            self.word_start = np.ascontiguousarray(word_start, dtype=np.int32)
            self.word_ids = np.ascontiguousarray(word_ids, dtype=np.int32)
            if len(self.word_ids) == 0:
                self.word_ids = np.zeros(1, dtype=np.int32)
        self.has_smear = smear is not None
        if self.has_smear:
            self.smear = np.ascontiguousarray(smear, dtype=np.float64)
        self.lm_step = lm_step
        self.has_tables = lm_tables is not None
        if self.has_tables:
            self._load_tables(lm_tables)

    def _load_tables(self, t):
        """``t``: (LM id per kernel label, NGramModel.compiled_tables())."""
        wid, tables = t
        self.t_wid = [int(x) for x in wid]
        clm = getattr(tables, "_compiled", None)
        if clm is None:
            clm = CompiledLM(tables)
            tables._compiled = clm  # built once per model, shared read-only
        self.clm = clm

    cdef pair[int32_t, double] _table_step(self, int32_t sid, int32_t tok):
        return self.clm.step(sid, self.t_wid[tok])

    cdef pair[int32_t, double] _lm(self, int32_t sid, int32_t tok) except *:
        cdef uint64_t key = (<uint64_t>sid << 32) | <uint32_t>tok
        cdef unordered_map[uint64_t, pair[int32_t, double]].iterator it = self.cache.find(key)
        cdef pair[int32_t, double] hit
        if it != self.cache.end():
            return deref(it).second
        if self.has_tables:
            hit = self._table_step(sid, tok)
            self.cache[key] = hit
            return hit
        ns, lp = self.lm_step(sid, tok)
        if ns >= MAX_LM_STATES:
            raise OverflowError("too many LM states for the compiled kernel")
        hit.first = ns
        hit.second = lp
        self.cache[key] = hit
        return hit

    cdef inline void _emit(self, int32_t parent, double a, double l, int32_t w, int32_t s,
                           int32_t ls, int32_t nd, int32_t lt, int8_t pd, int32_t word):
        cdef double look = 0.0
        if self.has_smear and nd != 0:
            look = self.alpha * self.smear[nd]
        cdef double total = a + self.alpha * l + self.beta * w + self.gamma * s + look
        cdef uint64_t key = ((<uint64_t>ls) << 33) | ((<uint64_t>nd) << 9) | ((<uint64_t>(lt + 1)) << 1) | <uint64_t>pd
        cdef unordered_map[uint64_t, int32_t].iterator it = self.slots.find(key)
        cdef Cand c
        c.am = a; c.lm = l; c.wc = w; c.sc = s; c.lms = ls; c.node = nd
        c.last = lt; c.pend = pd; c.parent = parent; c.word = word; c.total = total
        cdef int32_t slot
        if it == self.slots.end():
            self.slots[key] = <int32_t>self.out.size()
            self.out.push_back(c)
        else:
            slot = deref(it).second
            if total > self.out[slot].total:
                self.out[slot] = c

    def expand(self, em_row, am, lm, wc, sc, lms, node, last, pend):
        cdef double[::1] e = np.ascontiguousarray(em_row, dtype=np.float64)
        cdef double[::1] h_am = np.ascontiguousarray(am, dtype=np.float64)
        cdef double[::1] h_lm = np.ascontiguousarray(lm, dtype=np.float64)
        cdef int32_t[::1] h_wc = np.ascontiguousarray(wc, dtype=np.int32)
        cdef int32_t[::1] h_sc = np.ascontiguousarray(sc, dtype=np.int32)
        cdef int32_t[::1] h_lms = np.ascontiguousarray(lms, dtype=np.int32)
        cdef int32_t[::1] h_node = np.ascontiguousarray(node, dtype=np.int32)
        cdef int32_t[::1] h_last = np.ascontiguousarray(last, dtype=np.int32)
        cdef int8_t[::1] h_pend = np.ascontiguousarray(pend, dtype=np.int8)
        cdef Py_ssize_t i, H = h_am.shape[0]
        cdef int v, p, kv, nd, ws, we, k
        cdef int32_t w, ls, s
        cdef double a, l
        cdef bint in_word
        cdef pair[int32_t, double] r

        self.out.clear()
        self.slots.clear()
        for i in range(H):
            p = h_last[i]
            in_word = p >= 0 and self.kinds[p] != K_SIL
            for v in range(self.n):
                a = h_am[i] + e[v]
                if self.has_tr and p >= 0:
                    a = a + self.tr[p, v]
                kv = self.kinds[v]
                if v == p:
                    s = h_sc[i] + 1 if (self.per_frame and kv == K_SIL) else h_sc[i]
                    self._emit(i, a, h_lm[i], h_wc[i], s, h_lms[i], h_node[i], p, h_pend[i], -1)
                    continue
                if kv == K_SIL:
                    s = h_sc[i] + 1
                    if in_word:
                        if self.mode == MODE_FREE:
                            self._emit(i, a, h_lm[i], h_wc[i] + 1, s, h_lms[i], 0, v, 1, -1)
                            continue
                        ws = self.word_start[h_node[i]]
                        we = self.word_start[h_node[i] + 1]
                        if ws == we:
                            continue
                        if self.mode == MODE_CHAR_LEX:
                            self._emit(i, a, h_lm[i], h_wc[i] + 1, s, h_lms[i], 0, v, 1, -1)
                            continue
                        for k in range(ws, we):
                            w = self.word_ids[k]
                            r = self._lm(h_lms[i], w)
                            if r.second == -INFINITY:
                                continue
                            self._emit(i, a, h_lm[i] + r.second, h_wc[i] + 1, s, r.first, 0, v, 0, w)
                    else:
                        self._emit(i, a, h_lm[i], h_wc[i], s, h_lms[i], h_node[i], v, h_pend[i], -1)
                    continue
                if kv == K_REPEAT and not (p >= 0 and self.kinds[p] == K_LETTER):
                    continue
                nd = h_node[i]
                if self.mode != MODE_FREE:
                    nd = self.child[h_node[i], v]
                    if nd < 0:
                        continue
                l = h_lm[i]
                ls = h_lms[i]
                if self.mode != MODE_WORD_LEX:
                    if h_pend[i]:
                        r = self._lm(ls, self.sil)
                        if r.second == -INFINITY:
                            continue
                        ls = r.first
                        l = l + r.second
                    r = self._lm(ls, v)
                    if r.second == -INFINITY:
                        continue
                    ls = r.first
                    l = l + r.second
                self._emit(i, a, l, h_wc[i], h_sc[i], ls, nd, v, 0, -1)

        cdef Py_ssize_t m = self.out.size(), j
        o_am = np.empty(m, dtype=np.float64)
        o_lm = np.empty(m, dtype=np.float64)
        o_wc = np.empty(m, dtype=np.int32)
        o_sc = np.empty(m, dtype=np.int32)
        o_lms = np.empty(m, dtype=np.int32)
        o_node = np.empty(m, dtype=np.int32)
        o_last = np.empty(m, dtype=np.int32)
        o_pend = np.empty(m, dtype=np.int8)
        o_parent = np.empty(m, dtype=np.int32)
        o_word = np.empty(m, dtype=np.int32)
        o_total = np.empty(m, dtype=np.float64)
        cdef double[::1] v_am = o_am, v_lm = o_lm, v_total = o_total
        cdef int32_t[::1] v_wc = o_wc, v_sc = o_sc, v_lms = o_lms, v_node = o_node
        cdef int32_t[::1] v_last = o_last, v_parent = o_parent, v_word = o_word
        cdef int8_t[::1] v_pend = o_pend
        cdef Cand c
        for j in range(m):
            c = self.out[j]
            v_am[j] = c.am; v_lm[j] = c.lm; v_wc[j] = c.wc; v_sc[j] = c.sc
            v_lms[j] = c.lms; v_node[j] = c.node; v_last[j] = c.last; v_pend[j] = c.pend
            v_parent[j] = c.parent; v_word[j] = c.word; v_total[j] = c.total
        return o_am, o_lm, o_wc, o_sc, o_lms, o_node, o_last, o_pend, o_parent, o_word, o_total


OP_MATCH, OP_SUB, OP_INS, OP_DEL = 0, 1, 2, 3


def edit_ops(ref, hyp):
    """Levenshtein distance and one optimal edit script.

    Returns ``(distance, ops)`` where ``ops`` is a list of
    ``(op, ref_index, hyp_index)`` in left-to-right order, with -1 for the
    missing side. Backtrace prefers substitution, then insertion, then
    deletion.
    """
    # map arbitrary hashables to ints so the DP runs on typed arrays
    ids = {}
    cdef int64_t[::1] r = np.array([ids.setdefault(x, len(ids)) for x in ref], dtype=np.int64).reshape(-1)
    cdef int64_t[::1] h = np.array([ids.setdefault(x, len(ids)) for x in hyp], dtype=np.int64).reshape(-1)
    cdef Py_ssize_t n = r.shape[0], m = h.shape[0], i, j
    cdef int64_t[:, ::1] d = np.empty((n + 1, m + 1), dtype=np.int64)
    cdef int64_t best, ins, dele
    cdef bint same
    for i in range(n + 1):
        d[i, 0] = i
    for j in range(m + 1):
        d[0, j] = j
    for i in range(1, n + 1):
        for j in range(1, m + 1):
            best = d[i - 1, j - 1] + (0 if r[i - 1] == h[j - 1] else 1)
            ins = d[i, j - 1] + 1
            if ins < best:
                best = ins
            dele = d[i - 1, j] + 1
            if dele < best:
                best = dele
            d[i, j] = best
    ops = []
    i = n
    j = m
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            same = r[i - 1] == h[j - 1]
            if d[i, j] == d[i - 1, j - 1] + (0 if same else 1):
                ops.append((OP_MATCH if same else OP_SUB, i - 1, j - 1))
                i -= 1
                j -= 1
                continue
        if j > 0 and d[i, j] == d[i, j - 1] + 1:
            ops.append((OP_INS, -1, j - 1))
            j -= 1
        else:
            ops.append((OP_DEL, i - 1, -1))
            i -= 1
    ops.reverse()
    return int(d[n, m]), ops
