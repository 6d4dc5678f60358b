"""Pure-Python kernels. Same interface and bit-identical results as ``_kernels``."""
import math

import numpy as np

MODE_FREE, MODE_CHAR_LEX, MODE_WORD_LEX = 0, 1, 2
LETTER, REPEAT, SIL = 0, 1, 2

NAME = "python"


class FrameExpander:
    """Extends every beam hypothesis by every token for one frame.

    Candidates sharing ``(lm state, trie node, last token, pending silence)``
    are merged into the slot of the first one generated, keeping the higher
    total. Returns the candidate columns in generation order.
    """

    def __init__(self, kinds, sil, mode, per_frame, alpha, beta, gamma,
                 transitions, child, word_start, word_ids, smear, lm_step, lm_tables=None):
        # lm_tables only speeds up the compiled kernel; scores come from lm_step here
        self.kinds = [int(k) for k in kinds]
        self.n = len(self.kinds)
        self.sil = int(sil)
        self.mode = int(mode)
        self.per_frame = bool(per_frame)
        self.alpha = float(alpha)
        self.beta = float(beta)
        self.gamma = float(gamma)
        self.tr = None if transitions is None else np.asarray(transitions, dtype=np.float64).tolist()
        self.child = None if child is None else np.asarray(child).tolist()
        self.word_start = None if word_start is None else np.asarray(word_start).tolist()
        self.word_ids = None if word_ids is None else np.asarray(word_ids).tolist()
        self.smear = None if smear is None else np.asarray(smear, dtype=np.float64).tolist()
        self.lm_step = lm_step
        self.cache = {}

    def _lm(self, sid, tok):
        key = (sid, tok)
        hit = self.cache.get(key)
        if hit is None:
            hit = self.lm_step(sid, tok)
            self.cache[key] = hit
        return hit

    def expand(self, em_row, am, lm, wc, sc, lms, node, last, pend):
        em_row = np.asarray(em_row, dtype=np.float64).tolist()
        kinds, n, sil, mode = self.kinds, self.n, self.sil, self.mode
        alpha, beta, gamma = self.alpha, self.beta, self.gamma
        tr, child, smear = self.tr, self.child, self.smear
        word_start, word_ids = self.word_start, self.word_ids
        per_frame = self.per_frame

        out = [[] for _ in range(11)]
        o_am, o_lm, o_wc, o_sc, o_lms, o_node, o_last, o_pend, o_parent, o_word, o_total = out
        slots = {}

        def emit(parent, a, l, w, s, ls, nd, lt, pd, word):
            look = alpha * smear[nd] if (smear is not None and nd != 0) else 0.0
            total = a + alpha * l + beta * w + gamma * s + look
            key = (ls, nd, lt, pd)
            slot = slots.get(key)
            if slot is None:
                slots[key] = len(o_am)
                o_am.append(a); o_lm.append(l); o_wc.append(w); o_sc.append(s)
                o_lms.append(ls); o_node.append(nd); o_last.append(lt); o_pend.append(pd)
                o_parent.append(parent); o_word.append(word); o_total.append(total)
            elif total > o_total[slot]:
                o_am[slot] = a; o_lm[slot] = l; o_wc[slot] = w; o_sc[slot] = s
                o_lms[slot] = ls; o_node[slot] = nd; o_last[slot] = lt; o_pend[slot] = pd
                o_parent[slot] = parent; o_word[slot] = word; o_total[slot] = total

        for i in range(len(am)):
            p = int(last[i])
            h_am, h_lm = float(am[i]), float(lm[i])
            h_wc, h_sc = int(wc[i]), int(sc[i])
            h_lms, h_node, h_pend = int(lms[i]), int(node[i]), int(pend[i])
            in_word = p >= 0 and kinds[p] != SIL
            for v in range(n):
                a = h_am + em_row[v]
                if tr is not None and p >= 0:
                    a = a + tr[p][v]
                kv = kinds[v]
                if v == p:
                    s = h_sc + 1 if (per_frame and kv == SIL) else h_sc
                    emit(i, a, h_lm, h_wc, s, h_lms, h_node, p, h_pend, -1)
                    continue
                if kv == SIL:
                    s = h_sc + 1
                    if in_word:
                        if mode == MODE_FREE:
                            emit(i, a, h_lm, h_wc + 1, s, h_lms, 0, v, 1, -1)
                            continue
                        ws, we = word_start[h_node], word_start[h_node + 1]
                        if ws == we:
                            continue
                        if mode == MODE_CHAR_LEX:
                            emit(i, a, h_lm, h_wc + 1, s, h_lms, 0, v, 1, -1)
                            continue
                        for k in range(ws, we):
                            w = word_ids[k]
                            ns, lp = self._lm(h_lms, w)
                            if lp == -math.inf:
                                continue
                            emit(i, a, h_lm + lp, h_wc + 1, s, ns, 0, v, 0, w)
                    else:
                        emit(i, a, h_lm, h_wc, s, h_lms, h_node, v, h_pend, -1)
                    continue
                if kv == REPEAT and not (p >= 0 and kinds[p] == LETTER):
                    continue
                nd = h_node
                if mode != MODE_FREE:
                    nd = child[h_node][v]
                    if nd < 0:
                        continue
                l, ls = h_lm, h_lms
                if mode != MODE_WORD_LEX:
                    if h_pend:
                        ls, lp = self._lm(ls, sil)
                        if lp == -math.inf:
                            continue
                        l = l + lp
                    ls, lp = self._lm(ls, v)
                    if lp == -math.inf:
                        continue
                    l = l + lp
                emit(i, a, l, h_wc, h_sc, ls, nd, v, 0, -1)

        return (
            np.array(o_am, dtype=np.float64),
            np.array(o_lm, dtype=np.float64),
            np.array(o_wc, dtype=np.int32),
            np.array(o_sc, dtype=np.int32),
            np.array(o_lms, dtype=np.int32),
            np.array(o_node, dtype=np.int32),
            np.array(o_last, dtype=np.int32),
            np.array(o_pend, dtype=np.int8),
            np.array(o_parent, dtype=np.int32),
            np.array(o_word, dtype=np.int32),
            np.array(o_total, dtype=np.float64),
        )


OP_MATCH, OP_SUB, OP_INS, OP_DEL = 0, 1, 2, 3


def edit_ops(ref, hyp):
    """Levenshtein distance and one optimal edit script.

    Returns ``(distance, ops)`` where ``ops`` is a list of
    ``(op, ref_index, hyp_index)`` in left-to-right order, with -1 for the
    missing side. Backtrace prefers substitution, then insertion, then
    deletion.
    """
    ref = list(ref)
    hyp = list(hyp)
    n, m = len(ref), len(hyp)
    d = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n + 1):
        d[i][0] = i
    for j in range(m + 1):
        d[0][j] = j
    for i in range(1, n + 1):
        ri = ref[i - 1]
        row, prev = d[i], d[i - 1]
        for j in range(1, m + 1):
            best = prev[j - 1] + (0 if ri == hyp[j - 1] else 1)
            ins = row[j - 1] + 1
            if ins < best:
                best = ins
            dele = prev[j] + 1
            if dele < best:
                best = dele
            row[j] = best
    ops = []
    i, j = n, m
    while i > 0 or j > 0:
        if i > 0 and j > 0:
            same = ref[i - 1] == hyp[j - 1]
            if d[i][j] == d[i - 1][j - 1] + (0 if same else 1):
                ops.append((OP_MATCH if same else OP_SUB, i - 1, j - 1))
                i -= 1
                j -= 1
                continue
        if j > 0 and d[i][j] == d[i][j - 1] + 1:
            ops.append((OP_INS, -1, j - 1))
            j -= 1
        else:
            ops.append((OP_DEL, i - 1, -1))
            i -= 1
    ops.reverse()
    return d[n][m], ops
