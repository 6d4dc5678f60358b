"""``lexfree`` command line: LM training, perplexity, decoding, tuning and reports.

Exit codes: 0 success, 1 at least one utterance failed, 2 usage or config error.
"""
from __future__ import annotations

import argparse
import math
import sys
import warnings
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import List, Optional

from . import decoder as dec
from .errors import LexfreeError
from .evaluation import cer, oov_recovery, per_utterance_tsv, wer
from .formats import read_emissions, read_manifest, read_transitions
from .lexicon import Lexicon, build_trie, format_lexicon, read_lexicon, smear
from .ngram import PruneSpec, read_arpa, train, write_arpa
from .perplexity import char_lm_word_ppl_bounds, word_ppl_word_lm
from .tokens import CorpusPrepConfig, TokenSet, prepare_lm_corpus, read_vocabulary
from .tune import SearchSpace, best_trial, format_trial_log, random_search

EXIT_OK, EXIT_UTT_FAILURE, EXIT_USAGE = 0, 1, 2


class UsageError(Exception):
    pass


def _read_lines(path) -> List[str]:
    with open(path, encoding="utf-8") as f:
        return [line.strip() for line in f if line.strip()]


def _out(args, name: str) -> Path:
    d = Path(args.output_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d / name


def _write(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(text, encoding="utf-8")


# ---------------------------------------------------------------------------
# lm-train / lm-ppl


def cmd_lm_train(args) -> int:
    if args.order < 1:
        raise UsageError("--order must be >= 1")
    ts = TokenSet.standard()
    cfg = CorpusPrepConfig(min_word_count=args.min_count, max_vocab=args.max_vocab)
    word_corpus, char_corpus, vocab = prepare_lm_corpus(_read_lines(args.corpus), cfg, ts)
    prune = PruneSpec.parse(args.prune) if args.prune else None
    if args.level == "char":
        corpus = [[ts.tokens[i] for i in sent] for sent in char_corpus]
        model = train(corpus, args.order, prune, level="char", vocabulary=ts.tokens)
    else:
        model = train(word_corpus, args.order, prune, level="word", vocabulary=vocab)
    write_arpa(model, args.out)
    counts = " ".join(f"{k}:{c}" for k, c in sorted(model.ngram_counts().items()))
    print(f"wrote {args.out} order={args.order} level={args.level} ngrams {counts}")
    return EXIT_OK


def cmd_lm_ppl(args) -> int:
    lm = read_arpa(args.lm, level=args.level)
    corpus = _read_lines(args.corpus)
    vocab = read_vocabulary(args.vocab) if args.vocab else None
    if lm.level == "word":
        report = word_ppl_word_lm(lm, corpus, vocab)
    else:
        if args.bounds is None or vocab is None:
            raise UsageError("character LMs need --bounds WORD_LM and --vocab")
        if not 0 < args.coverage <= 1:
            raise UsageError("--coverage must be in (0, 1]")
        word_lm = read_arpa(args.bounds, level="word")
        report = char_lm_word_ppl_bounds(lm, word_lm, corpus, vocab, args.coverage)
    sys.stdout.write(report.format_text())
    return EXIT_OK


# ---------------------------------------------------------------------------
# decoding


class _Setup:
    """Everything shared by the utterances of one decoding run."""

    def __init__(self, args):
        self.entries = read_manifest(args.manifest)
        if not self.entries:
            raise UsageError("manifest is empty")
        if args.mode != dec.CHAR_LM_FREE and not args.lexicon:
            raise UsageError(f"--mode {args.mode} requires --lexicon")
        self.opt = dec.DecoderOptions(
            alpha=args.alpha, beta=args.beta, gamma=args.gamma,
            beam_size=args.beam_size, beam_threshold=args.beam_threshold,
            mode=args.mode, silence_term=args.silence_term, smearing=args.smearing,
        )
        self.lm = read_arpa(args.lm, level="word" if args.mode == dec.WORD_LM_LEXICON else "char")
        self.tr = read_transitions(args.transitions) if args.transitions else None
        self.ts = read_emissions(self.entries[0].emission_path).token_set
        self.trie = None
        if args.lexicon:
            self.lexicon = read_lexicon(args.lexicon, self.ts)
            self.trie = build_trie(self.lexicon, self.ts)
            if self.opt.smearing and self.opt.mode == dec.WORD_LM_LEXICON:
                smear(self.trie, self.lm)
        self.threads = args.threads

    def decode_one(self, entry):
        try:
            em = read_emissions(entry.emission_path)
            return entry, dec.decode(em, self.tr, self.lm, self.trie, self.opt), None
        except (LexfreeError, ValueError, OSError) as exc:
            return entry, None, f"{type(exc).__name__}: {exc}"

    def run(self):
        """``(entry, result or None, error or None)`` in manifest order."""
        if self.threads > 1:
            with ThreadPoolExecutor(max_workers=self.threads) as pool:
                return list(pool.map(self.decode_one, self.entries))
        return [self.decode_one(e) for e in self.entries]


def _g(x: float) -> str:
    return repr(float(x))


HYP_HEADER = "utt_id\thyp\tam\tlm\tword_penalty\tsilence_penalty\ttotal\teffective_beam_size\tstatus"


def _hyp_row(entry, res, err) -> str:
    if res is None:
        return f"{entry.utt_id}\t\t\t\t\t\t\t\terror:{err}"
    c = res.components()
    return "\t".join([
        entry.utt_id, " ".join(res.words), _g(c["am"]), _g(c["lm"]), _g(c["word_penalty"]),
        _g(c["silence_penalty"]), _g(c["total"]), str(res.effective_beam_size), "ok",
    ])


def _report_failures(rows) -> int:
    failed = [(e, err) for e, res, err in rows if res is None]
    for e, err in failed:
        print(f"{e.utt_id}: {err}", file=sys.stderr)
    return EXIT_UTT_FAILURE if failed else EXIT_OK


def cmd_decode(args) -> int:
    setup = _Setup(args)
    rows = setup.run()
    path = _out(args, "hypotheses.tsv")
    _write(path, "\n".join([HYP_HEADER] + [_hyp_row(*r) for r in rows]) + "\n")
    refs = [e.reference for e, res, _ in rows if res is not None]
    hyps = [" ".join(res.words) for _, res, _ in rows if res is not None]
    if refs:
        print(f"WER={wer(refs, hyps):.2f} CER={cer(refs, hyps):.2f} utts={len(refs)}")
    print(f"wrote {path}")
    return _report_failures(rows)


def cmd_beam_stats(args) -> int:
    setup = _Setup(args)
    rows = setup.run()
    lines = ["utt_id\teffective_beam_size"]
    lines += [f"{e.utt_id}\t{res.effective_beam_size}" for e, res, _ in rows if res is not None]
    path = _out(args, "beam_stats.tsv")
    _write(path, "\n".join(lines) + "\n")
    sizes = [res.effective_beam_size for _, res, _ in rows if res is not None]
    if sizes:
        print(f"max_effective_beam_size={max(sizes)} beam_size={setup.opt.beam_size}")
    print(f"wrote {path}")
    return _report_failures(rows)


def cmd_tune(args) -> int:
    setup = _Setup(args)
    dev = [(read_emissions(e.emission_path), e.reference) for e in setup.entries]
    space = SearchSpace(
        alpha_range=tuple(args.alpha_range), beta_range=tuple(args.beta_range),
        gamma_range=tuple(args.gamma_range), n_trials=args.trials, seed=args.seed,
    )
    best_opt, trials = random_search(dev, setup.lm, setup.trie, setup.opt, space, setup.tr, args.threads)
    path = _out(args, "trials.tsv")
    _write(path, format_trial_log(trials))
    best = best_trial(trials)
    if best is None:
        print("every trial failed", file=sys.stderr)
        return EXIT_UTT_FAILURE
    print(f"best trial={best.trial_id} alpha={best.alpha!r} beta={best.beta!r} gamma={best.gamma!r} "
          f"WER={best.wer:.2f} CER={best.cer:.2f}")
    print(f"wrote {path}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# reports and lexicon


def _read_hypotheses(path) -> dict:
    out = {}
    lines = _read_lines(path)
    for line in lines[1:] if lines and lines[0].startswith("utt_id\t") else lines:
        parts = line.split("\t")
        out[parts[0]] = parts[1] if len(parts) > 1 else ""
    return out


def cmd_oov_report(args) -> int:
    entries = read_manifest(args.manifest)
    hyps = _read_hypotheses(args.hyps)
    missing = [e.utt_id for e in entries if e.utt_id not in hyps]
    if missing:
        raise UsageError(f"no hypothesis for {len(missing)} utterance(s), e.g. {missing[0]!r}")
    vocab = read_vocabulary(args.vocab)
    records = [(e.utt_id, e.reference, hyps[e.utt_id]) for e in entries]
    report = oov_recovery([(r, h) for _, r, h in records], vocab)
    path = _out(args, "oov_report.tsv")
    _write(path, per_utterance_tsv(records, vocab) + "\n" + report.summary())
    sys.stdout.write(report.summary())
    return EXIT_OK


def cmd_lexicon_build(args) -> int:
    ts = TokenSet.standard()
    words = read_vocabulary(args.vocab)
    lex = Lexicon.from_words(words, ts)
    _write(Path(args.out), format_lexicon(lex, ts))
    print(f"wrote {args.out} words={len(lex.entries)}")
    return EXIT_OK


# ---------------------------------------------------------------------------
# argument parsing


def _interval(text: str):
    try:
        lo, hi = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected LOW,HIGH, got {text!r}") from None
    return lo, hi


def _decoder_args(p, manifest_help: str) -> None:
    p.add_argument("manifest", help=manifest_help)
    p.add_argument("--lm", required=True, help="ARPA language model")
    p.add_argument("--mode", choices=dec.MODES, default=dec.CHAR_LM_FREE)
    p.add_argument("--lexicon", help="lexicon file (required by the lexicon modes)")
    p.add_argument("--transitions", help="W2T1 transition matrix")
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--gamma", type=float, default=0.0)
    p.add_argument("--beam-size", type=int, default=100)
    p.add_argument("--beam-threshold", type=float, default=math.inf)
    p.add_argument("--silence-term", choices=(dec.PER_SEGMENT, dec.PER_FRAME), default=dec.PER_SEGMENT)
    p.add_argument("--smearing", action="store_true", help="word-LM score smearing over the trie")


def _global_args(p, defaults) -> None:
    p.add_argument("--seed", type=int, default=defaults["seed"], help="random seed (tune)")
    p.add_argument("--threads", type=int, default=defaults["threads"], help="worker threads")
    p.add_argument("--output-dir", default=defaults["output_dir"], help="where reports are written")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lexfree", description=__doc__.splitlines()[0])
    _global_args(parser, dict(seed=0, threads=1, output_dir="."))
    # repeated on subcommands; SUPPRESS keeps them from resetting top-level values
    common = argparse.ArgumentParser(add_help=False)
    _global_args(common, dict(seed=argparse.SUPPRESS, threads=argparse.SUPPRESS, output_dir=argparse.SUPPRESS))
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("lm-train", parents=[common], help="train a Kneser-Ney n-gram LM")
    p.add_argument("--corpus", required=True, help="one sentence per line")
    p.add_argument("--level", choices=("char", "word"), required=True)
    p.add_argument("--order", type=int, required=True)
    p.add_argument("--prune", default="", help='per-order thresholds, e.g. "6:1,7:1,8:1,9:2,10+:3"')
    p.add_argument("--min-count", type=int, default=0, help="word vocabulary cutoff")
    p.add_argument("--max-vocab", type=int, default=None)
    p.add_argument("--out", required=True, help="output ARPA path")
    p.set_defaults(func=cmd_lm_train)

    p = sub.add_parser("lm-ppl", parents=[common], help="word-level perplexity or its bounds")
    p.add_argument("--lm", required=True)
    p.add_argument("--level", choices=("char", "word"))
    p.add_argument("--corpus", required=True)
    p.add_argument("--vocab", help="vocabulary file, one word per line")
    p.add_argument("--bounds", metavar="WORD_LM", help="word LM ranking the normalization subset")
    p.add_argument("--coverage", type=float, default=0.95)
    p.set_defaults(func=cmd_lm_ppl)

    p = sub.add_parser("decode", parents=[common], help="beam-search decode a manifest")
    _decoder_args(p, "manifest: utt_id<TAB>emission path<TAB>reference")
    p.set_defaults(func=cmd_decode)

    p = sub.add_parser("tune", parents=[common], help="random search over alpha, beta, gamma")
    _decoder_args(p, "dev manifest")
    p.add_argument("--trials", type=int, default=100)
    p.add_argument("--alpha-range", type=_interval, default=(0.0, 5.0))
    p.add_argument("--beta-range", type=_interval, default=(-5.0, 5.0))
    p.add_argument("--gamma-range", type=_interval, default=(-5.0, 5.0))
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("beam-stats", parents=[common], help="effective beam size per utterance")
    _decoder_args(p, "manifest")
    p.set_defaults(func=cmd_beam_stats)

    p = sub.add_parser("oov-report", parents=[common], help="IV/OOV WER split and OOV recovery")
    p.add_argument("manifest", help="manifest holding the references")
    p.add_argument("--hyps", required=True, help="hypotheses.tsv written by decode")
    p.add_argument("--vocab", required=True, help="lexicon vocabulary, one word per line")
    p.set_defaults(func=cmd_oov_report)

    p = sub.add_parser("lexicon-build", parents=[common], help="spell a vocabulary into a lexicon")
    p.add_argument("--vocab", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_lexicon_build)
    return parser


def _show_warning(message, category, filename, lineno, file=None, line=None):
    print(f"warning: {message}", file=sys.stderr)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    warnings.showwarning = _show_warning
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    try:
        return args.func(args)
    except (UsageError, LexfreeError, ValueError, OSError) as exc:
        print(f"lexfree {args.command}: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
