"""Command-line front end.

Subcommands wire the pipeline end to end: preprocess -> train ->
nn/sim/eval-instr/eval-blocks/export, plus gen-synthetic for the
planted-bijection corpus. Exit codes: 0 success, 1 usage error,
2 data error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

from . import corpus as corpus_mod
from . import evaluate, model as model_mod, synthetic
from .errors import InsnvecError
from .model import TrainConfig
from .normalize import normalize_text, split_token


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would sys.exit(2); we map to 1
        raise _UsageError(message)


def _add_train_flags(p: argparse.ArgumentParser):
    defaults = TrainConfig()
    p.add_argument("--dim", type=int, default=defaults.dim, help="embedding dimension")
    p.add_argument("--window", type=int, default=defaults.window, help="context window size")
    p.add_argument("--epochs", type=int, default=defaults.epochs, help="training epochs")
    p.add_argument("--lr", type=float, default=defaults.learning_rate,
                   help="initial learning rate")
    p.add_argument("--negatives", type=int, default=defaults.negatives,
                   help="negative samples per step")
    p.add_argument("--subsample", type=float, default=defaults.subsample,
                   help="subsampling rate t")
    p.add_argument("--gamma", type=float, default=defaults.gamma,
                   help="mono-architecture component weight")
    p.add_argument("--beta", type=float, default=defaults.beta,
                   help="cross-architecture component weight")
    p.add_argument("--min-count", type=int, default=defaults.min_count,
                   help="vocabulary count cutoff")
    p.add_argument("--seed", type=int, default=defaults.seed, help="rng seed")
    p.add_argument("--workers", type=int, default=defaults.workers,
                   help="training threads (1 = deterministic)")
    p.add_argument("--dynamic-window", action="store_true",
                   help="draw a reduced window per step (word2vec style)")
    p.add_argument("--include-aligned-center", action="store_true",
                   help="keep the aligned instruction in cross contexts")


def build_parser() -> _Parser:
    parser = _Parser(prog="insnvec", description=__doc__)
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    p = sub.add_parser("preprocess", parents=[], help="normalize a corpus file in place")
    p.add_argument("--corpus", required=True, help="corpus file to rewrite")

    p = sub.add_parser("train", help="train a model on a corpus")
    p.add_argument("--corpus", required=True, help="corpus file")
    p.add_argument("--model", required=True, help="output model file")
    _add_train_flags(p)

    p = sub.add_parser("nn", help="nearest neighbors of a token")
    p.add_argument("--model", required=True)
    p.add_argument("--token", required=True, help="canonical or raw token text")
    p.add_argument("--k", type=int, default=10)
    p.add_argument("--arch", default=None, help="restrict neighbors to one architecture")

    p = sub.add_parser("sim", help="cosine similarity of two tokens")
    p.add_argument("--model", required=True)
    p.add_argument("--a", required=True)
    p.add_argument("--b", required=True)

    p = sub.add_parser("eval-instr", help="ROC/AUC over labeled instruction pairs")
    p.add_argument("--model", required=True)
    p.add_argument("--pairs", required=True, help="labeled instruction-pair TSV")
    p.add_argument("--report", default=None, help="write the JSON report here")

    p = sub.add_parser("eval-blocks", help="ROC/AUC over labeled block pairs")
    p.add_argument("--model", default=None)
    p.add_argument("--pairs", required=True, help="labeled block-pair JSONL")
    p.add_argument("--baseline", action="store_true",
                   help="use the statistics-feature comparator instead of the model")
    p.add_argument("--report", default=None, help="write the JSON report here")

    p = sub.add_parser("export", help="write the text vector format")
    p.add_argument("--model", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("gen-synthetic", help="generate the planted-bijection corpus")
    p.add_argument("--out", required=True, help="corpus file to write")
    p.add_argument("--pairs-out", default=None, help="planted labeled TSV to write")
    p.add_argument("--mapping-out", default=None, help="ground-truth mapping JSON to write")
    p.add_argument("--vocab-size", type=int, default=50)
    p.add_argument("--blocks", type=int, default=2000)
    p.add_argument("--min-len", type=int, default=3)
    p.add_argument("--max-len", type=int, default=10)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=1)
    return parser


def _canonical_token(text: str) -> str:
    """Accept either a canonical token or raw `arch:instruction` text."""
    arch, body = split_token(text)
    return normalize_text(body, arch)


def _cmd_preprocess(args) -> int:
    records = []
    for _, record in corpus_mod.iter_records(args.corpus):
        if not isinstance(record, dict):
            raise InsnvecError("corpus records must be JSON objects")
        if not record.get("normalized", False):
            for side in ("a", "b"):
                block = record.get(side)
                if not isinstance(block, dict):
                    raise InsnvecError(f"record is missing side {side!r}")
                arch = block.get("arch")
                ins = block.get("ins", [])
                tokens = [normalize_text(t, arch) for t in ins]
                block["ins"] = [t.split(":", 1)[1] for t in tokens]
            record["normalized"] = True
        records.append(record)
    directory = os.path.dirname(os.path.abspath(args.corpus))
    fd, tmp_path = tempfile.mkstemp(dir=directory, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            for record in records:
                fh.write(json.dumps(record, ensure_ascii=False) + "\n")
        os.replace(tmp_path, args.corpus)
    except BaseException:
        if os.path.exists(tmp_path):
            os.unlink(tmp_path)
        raise
    print(f"normalized {len(records)} records in {args.corpus}")
    return 0


def _config_from_args(args) -> TrainConfig:
    try:
        return TrainConfig(
            dim=args.dim,
            window=args.window,
            epochs=args.epochs,
            learning_rate=args.lr,
            negatives=args.negatives,
            subsample=args.subsample,
            gamma=args.gamma,
            beta=args.beta,
            min_count=args.min_count,
            seed=args.seed,
            workers=args.workers,
            dynamic_window=args.dynamic_window,
            include_aligned_center=args.include_aligned_center,
        )
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc


def _cmd_train(args) -> int:
    cfg = _config_from_args(args)
    pairs = corpus_mod.load_pairs(args.corpus)
    vocab = corpus_mod.build_vocab(pairs, cfg.min_count)
    model = model_mod.init(vocab, cfg.dim, cfg.seed)
    report = model_mod.train(model, pairs, cfg)
    print("# epoch\tmono_steps\tmono_mean_loss\tmulti_steps\tmulti_mean_loss")
    for e in report.epochs:
        print(
            f"{e.epoch}\t{e.mono_steps}\t{e.mono_mean:.6f}"
            f"\t{e.multi_steps}\t{e.multi_mean:.6f}"
        )
    model_mod.save(model, args.model)
    print(f"# saved model: V={len(vocab)} d={model.dim} -> {args.model}")
    return 0


def _cmd_nn(args) -> int:
    model = model_mod.load(args.model)
    if args.k < 1:
        raise _UsageError("--k must be >= 1")
    token = _canonical_token(args.token)
    for neighbor, score in evaluate.nearest(model, token, args.k, arch_filter=args.arch):
        print(f"{neighbor}\t{score:.6f}")
    return 0


def _cmd_sim(args) -> int:
    model = model_mod.load(args.model)
    sim = evaluate.cosine(
        model.vector(_canonical_token(args.a)),
        model.vector(_canonical_token(args.b)),
    )
    print(f"{sim:.6f}")
    return 0


def _print_report(report: evaluate.EvalReport, report_path):
    for line in report.curve.lines():
        print(line)
    if report.excluded:
        print(f"# excluded {report.excluded} of {report.pairs} pairs", file=sys.stderr)
    if report_path:
        with open(report_path, "w", encoding="utf-8") as fh:
            json.dump(report.as_dict(), fh, indent=2)
            fh.write("\n")


def _cmd_eval_instr(args) -> int:
    model = model_mod.load(args.model)
    pairs = evaluate.load_labeled_instruction_pairs(args.pairs)
    report = evaluate.eval_instruction_pairs(model, pairs)
    _print_report(report, args.report)
    return 0


def _cmd_eval_blocks(args) -> int:
    labeled = evaluate.load_labeled_block_pairs(args.pairs)
    if args.baseline:
        report = evaluate.eval_block_pairs_baseline(labeled)
    else:
        if not args.model:
            raise _UsageError("--model is required unless --baseline is given")
        model = model_mod.load(args.model)
        report = evaluate.eval_block_pairs(model, labeled)
    _print_report(report, args.report)
    return 0


def _cmd_export(args) -> int:
    model = model_mod.load(args.model)
    model_mod.export_text(model, args.out)
    print(f"# exported {len(model.vocab)} vectors -> {args.out}")
    return 0


def _cmd_gen_synthetic(args) -> int:
    try:
        corpus = synthetic.generate_bijection(
            vocab_size=args.vocab_size,
            blocks=args.blocks,
            min_len=args.min_len,
            max_len=args.max_len,
            noise=args.noise,
            seed=args.seed,
        )
    except ValueError as exc:
        raise _UsageError(str(exc)) from exc
    synthetic.write_corpus(corpus, args.out, args.pairs_out, args.mapping_out)
    print(f"# wrote {len(corpus.pairs)} pairs -> {args.out}")
    return 0


_COMMANDS = {
    "preprocess": _cmd_preprocess,
    "train": _cmd_train,
    "nn": _cmd_nn,
    "sim": _cmd_sim,
    "eval-instr": _cmd_eval_instr,
    "eval-blocks": _cmd_eval_blocks,
    "export": _cmd_export,
    "gen-synthetic": _cmd_gen_synthetic,
}


def run(argv=None) -> int:
    """Parse argv and execute one subcommand; returns the exit code."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            raise _UsageError("a subcommand is required")
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except SystemExit as exc:  # argparse --help
        code = exc.code or 0
        return int(code) if isinstance(code, int) else 0
    except InsnvecError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run(sys.argv[1:]))
