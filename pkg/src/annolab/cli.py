"""Command-line access to every pipeline, no service required.

Exit codes: 0 success, 1 domain error (message on stderr), 2 usage error.
Each subcommand ends with a one-line machine-parseable summary on stdout.
"""

import argparse
import os
import sys
from pathlib import Path

from . import acoustic, api, metrics
from .align import AlignConfig, symmetrize, train_model1, train_model2, viterbi_align
from .corpus import (
    ParallelCorpus,
    PhonemeInventory,
    PhonemeSequence,
    load_parallel_corpus,
    load_speech_corpus_dir,
    parse_transcript,
    parse_wav,
)
from .errors import AnnolabError
from .features import FeatureConfig, dump_csv, log_mel
from .gloss import (
    DEFAULT_MAX_PHRASE_LEN,
    deserialize_gloss,
    serialize_gloss,
    suggest_glosses,
    train_glosser,
)


def _add_ctc_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--hidden-size", type=int, default=64)
    parser.add_argument("--epochs", type=int, default=100)
    parser.add_argument("--learning-rate", type=float, default=1e-3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--batch-size", type=int, default=1)
    parser.add_argument("--grad-clip-norm", type=float, default=5.0)


def _ctc_config(args) -> acoustic.CtcConfig:
    return acoustic.CtcConfig(
        hidden_size=args.hidden_size,
        epochs=args.epochs,
        learning_rate=args.learning_rate,
        seed=args.seed,
        batch_size=args.batch_size,
        grad_clip_norm=args.grad_clip_norm,
    )


def _add_align_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--iterations-m1", type=int, default=20)
    parser.add_argument("--iterations-m2", type=int, default=10)
    parser.add_argument("--no-null", action="store_true", help="disable the NULL source token")
    parser.add_argument(
        "--symmetrization",
        choices=("intersection", "union", "grow-diag-final"),
        default="grow-diag-final",
    )


def _align_config(args) -> AlignConfig:
    return AlignConfig(
        iterations_m1=args.iterations_m1,
        iterations_m2=args.iterations_m2,
        use_null=not args.no_null,
        symmetrization=args.symmetrization,
    )


def cmd_serve(args) -> int:
    ui_dir = Path(args.ui) if args.ui else None
    api.serve(args.addr, args.store, workers=args.workers, ui_dir=ui_dir)
    return 0


def cmd_train_asr(args) -> int:
    corpus = load_speech_corpus_dir(Path(args.corpus))
    model, report = acoustic.train_acoustic(corpus, _ctc_config(args))
    Path(args.out).write_bytes(acoustic.serialize_acoustic(model))
    print(
        f"train-asr out={args.out} utterances={len(corpus)} "
        f"epochs={report.epochs} final_per={report.final_per:.4f}"
    )
    return 0


def cmd_fine_tune(args) -> int:
    init = acoustic.deserialize_acoustic(Path(args.model).read_bytes())
    corpus = load_speech_corpus_dir(Path(args.corpus))
    model, report = acoustic.train_acoustic(corpus, _ctc_config(args), init=init)
    Path(args.out).write_bytes(acoustic.serialize_acoustic(model))
    print(
        f"fine-tune out={args.out} utterances={len(corpus)} "
        f"epochs={report.epochs} final_per={report.final_per:.4f}"
    )
    return 0


def cmd_transcribe(args) -> int:
    model = acoustic.deserialize_acoustic(Path(args.model).read_bytes())
    if args.wav:
        paths = [Path(args.wav)]
    else:
        paths = sorted(Path(args.dir).glob("*.wav"))
    for path in paths:
        audio = parse_wav(path.read_bytes())
        decoded = model.transcribe(audio, beam_width=args.beam_width)
        print(f"{path.stem}\t{decoded.to_text(model.inventory)}")
    print(f"transcribe utterances={len(paths)}")
    return 0


def cmd_train_gloss(args) -> int:
    corpus = load_parallel_corpus(
        Path(args.source).read_text(encoding="utf-8"),
        Path(args.target).read_text(encoding="utf-8"),
    )
    model = train_glosser(corpus, _align_config(args), args.max_phrase_len)
    Path(args.out).write_bytes(serialize_gloss(model))
    print(
        f"train-gloss out={args.out} pairs={len(corpus)} "
        f"phrases={len(model.phrase_table)}"
    )
    return 0


def cmd_gloss(args) -> int:
    model = deserialize_gloss(Path(args.model).read_bytes())
    lines = Path(args.input).read_text(encoding="utf-8").splitlines()
    n_tokens = 0
    for lineno, line in enumerate(lines, start=1):
        tokens = line.split()
        if not tokens:
            continue
        for s in suggest_glosses(tokens, model, k=args.k):
            cands = ";".join(f"{' '.join(c.gloss)}:{c.score:.6g}" for c in s.candidates)
            print(f"{lineno}\t{s.token_index}\t{tokens[s.token_index]}\t{cands}")
            n_tokens += 1
    print(f"gloss lines={len(lines)} tokens={n_tokens} k={args.k}")
    return 0


def cmd_align(args) -> int:
    corpus = load_parallel_corpus(
        Path(args.source).read_text(encoding="utf-8"),
        Path(args.target).read_text(encoding="utf-8"),
    )
    cfg = _align_config(args)
    t_fwd, _ = train_model1(corpus, cfg)
    t_fwd, q_fwd, _ = train_model2(corpus, cfg, t_fwd)
    reversed_corpus = ParallelCorpus([(t, s) for s, t in corpus.pairs])
    t_rev, _ = train_model1(reversed_corpus, cfg)
    t_rev, q_rev, _ = train_model2(reversed_corpus, cfg, t_rev)

    out_lines = []
    for (src, tgt), rev_pair in zip(corpus.pairs, reversed_corpus.pairs):
        fwd = viterbi_align((src, tgt), t_fwd, q_fwd)
        rev = viterbi_align(rev_pair, t_rev, q_rev).transposed()
        out_lines.append(symmetrize(fwd, rev, cfg.symmetrization).to_pharaoh())
    text = "\n".join(out_lines) + "\n"
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    print(f"align pairs={len(corpus)} symmetrization={cfg.symmetrization}")
    return 0


def cmd_features(args) -> int:
    audio = parse_wav(Path(args.wav).read_bytes())
    feats = log_mel(audio, FeatureConfig(n_mels=args.n_mels))
    Path(args.out).write_text(dump_csv(feats), encoding="utf-8")
    print(f"features out={args.out} frames={feats.n_frames} dim={feats.dim}")
    return 0


def cmd_eval_per(args) -> int:
    inventory = PhonemeInventory()
    ref_lines = Path(args.ref).read_text(encoding="utf-8").splitlines()
    hyp_lines = Path(args.hyp).read_text(encoding="utf-8").splitlines()
    if len(ref_lines) != len(hyp_lines):
        raise AnnolabError(
            f"ref has {len(ref_lines)} lines, hyp has {len(hyp_lines)}"
        )
    pairs = []
    for ref_line, hyp_line in zip(ref_lines, hyp_lines):
        ref, _ = parse_transcript(ref_line, inventory)
        if hyp_line.split():
            hyp, _ = parse_transcript(hyp_line, inventory)
        else:
            hyp = PhonemeSequence([])
        pairs.append((ref, hyp))
    per = metrics.corpus_error_rate(pairs)
    print(f"PER {per:.4f}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="annolab",
        description="Train and run phoneme-transcription and gloss-suggestion models.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("serve", help="run the HTTP service")
    p.add_argument("--addr", default=os.environ.get("LAB_ADDR", api.DEFAULT_ADDR))
    p.add_argument("--store", default=os.environ.get("LAB_STORE", "store"))
    p.add_argument("--workers", type=int, default=int(os.environ.get("LAB_WORKERS", "1")))
    p.add_argument("--ui", default=None, help="directory of built UI assets to serve at /ui")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("train-asr", help="train a transcription model")
    p.add_argument("--corpus", required=True, help="speech corpus directory")
    p.add_argument("--out", required=True, help="model artifact path")
    _add_ctc_flags(p)
    p.set_defaults(func=cmd_train_asr)

    p = sub.add_parser("fine-tune", help="continue training a stored model")
    p.add_argument("--model", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--out", required=True)
    _add_ctc_flags(p)
    p.set_defaults(func=cmd_fine_tune)

    p = sub.add_parser("transcribe", help="decode WAV files with a trained model")
    p.add_argument("--model", required=True)
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--wav")
    group.add_argument("--dir")
    p.add_argument("--beam-width", type=int, default=None)
    p.set_defaults(func=cmd_transcribe)

    p = sub.add_parser("train-gloss", help="train a gloss-suggestion model")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-phrase-len", type=int, default=DEFAULT_MAX_PHRASE_LEN)
    _add_align_flags(p)
    p.set_defaults(func=cmd_train_gloss)

    p = sub.add_parser("gloss", help="suggest glosses for source sentences")
    p.add_argument("--model", required=True)
    p.add_argument("--input", required=True, help="one source sentence per line")
    p.add_argument("--k", type=int, default=5)
    p.set_defaults(func=cmd_gloss)

    p = sub.add_parser("align", help="export Pharaoh-format word alignments")
    p.add_argument("--source", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--out", default=None)
    _add_align_flags(p)
    p.set_defaults(func=cmd_align)

    p = sub.add_parser("features", help="dump log-mel features as CSV")
    p.add_argument("--wav", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--n-mels", type=int, default=40)
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("eval-per", help="phoneme error rate between two transcript files")
    p.add_argument("--ref", required=True)
    p.add_argument("--hyp", required=True)
    p.set_defaults(func=cmd_eval_per)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (AnnolabError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
