"""Command line entry point.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numeric failure.
"""

from __future__ import annotations

import argparse
import sys

from . import baselines, corpus, evaluation, model as m, synth, trainer
from .context_index import build_index, load_index, save_index
from .corpus import EmptyCorpus, LengthMismatch, ParseError
from .features import build_feature_bags, format_feature_bags, save_feature_bags
from .trainer import NonFiniteLoss, TrainConfig

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERIC = 3


class UsageError(Exception):
    pass


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(text)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qseg", description=__doc__)
    parser.add_argument("--threads", type=int, default=1,
                        help="upper bound on worker threads (all work is single-threaded)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--alphabet-size", type=int, default=150)
    p.add_argument("--vocab-size", type=int, default=200)
    p.add_argument("--word-len", type=_int_pair, default=(1, 5), metavar="LO,HI")
    p.add_argument("--query-len", type=_int_pair, default=(2, 5), metavar="LO,HI")
    p.add_argument("--n-train", type=int, default=2000)
    p.add_argument("--n-test", type=int, default=500)
    p.add_argument("--n-docs", type=int, default=3000)
    p.add_argument("--oov-fraction", type=float, default=0.0)
    p.add_argument("--min-contexts", type=int, default=3)
    p.add_argument("--zipf-exponent", type=float, default=1.4)
    p.add_argument("--out-dir", required=True)

    p = sub.add_parser("autolabel", help="label queries by dictionary max-matching")
    p.add_argument("--dict", dest="dict_path", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("index", help="build the bi-gram index over documents")
    p.add_argument("--docs", required=True)
    p.add_argument("--out", required=True)

    p = sub.add_parser("features", help="extract context feature bags")
    p.add_argument("--docs", required=True)
    p.add_argument("--index", help="reuse a saved index instead of rebuilding")
    p.add_argument("--queries", required=True)
    p.add_argument("--cap", type=int, default=5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--window", type=int, default=2)
    p.add_argument("--k-max", type=int, default=7)
    p.add_argument("--exclude-self", action="store_true")
    p.add_argument("--out")
    p.add_argument("--dump", action="store_true", help="print a readable dump")

    p = sub.add_parser("train", help="train a segmentation model")
    p.add_argument("--train", dest="train_path", required=True)
    p.add_argument("--docs", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--history", help="write per-epoch loss and validation F1 CSV")
    p.add_argument("--config", help="key=value file; explicit flags win")
    for name, typ in _TRAIN_FIELDS.items():
        flag = "--" + name.replace("_", "-")
        if typ is bool:
            p.add_argument(flag, action="store_const", const=True, default=None)
        else:
            p.add_argument(flag, type=typ, default=None)

    p = sub.add_parser("segment", help="segment queries with a trained model")
    p.add_argument("--model", required=True)
    p.add_argument("--queries", required=True)
    p.add_argument("--variant", choices=m.VARIANTS, required=True)
    p.add_argument("--docs", help="documents for context mining (c/qc variants)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--exclude-self", action="store_true")
    p.add_argument("--out", required=True)

    p = sub.add_parser("eval", help="score predictions against gold segmentations")
    p.add_argument("--pred", required=True)
    p.add_argument("--gold", required=True)
    p.add_argument("--train", dest="train_path",
                   help="training gold file for in/out-vocabulary recall")
    p.add_argument("--out", help="write the key=value report here too")

    p = sub.add_parser("uns", help="unsupervised n-gram baseline")
    p.add_argument("--queries", required=True, help="queries to segment")
    p.add_argument("--stats-queries", help="query log to count n-grams from")
    p.add_argument("--docs", help="documents to count n-grams from")
    p.add_argument("--no-queries", action="store_true")
    p.add_argument("--no-documents", action="store_true")
    p.add_argument("--l-max", type=int, default=7)
    p.add_argument("--out", required=True)
    return parser


def _int_pair(text: str) -> tuple[int, int]:
    try:
        lo, hi = (int(x) for x in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected LO,HI: {text!r}") from exc
    return lo, hi


_TRAIN_FIELDS: dict[str, type] = {
    "variant": str,
    "lr": float,
    "batch_size": int,
    "val_fraction": float,
    "patience": int,
    "max_epochs": int,
    "seed": int,
    "d_c": int,
    "d_h": int,
    "d_d": int,
    "d_g": int,
    "t": int,
    "k_max": int,
    "context_cap": int,
    "exclude_self": bool,
}


def _parse_config_file(path: str) -> dict[str, object]:
    out: dict[str, object] = {}
    for line_no, line in enumerate(_read(path).splitlines(), 1):
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{line_no}: expected key=value, got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _TRAIN_FIELDS:
            raise UsageError(f"{path}:{line_no}: unknown key {key!r}")
        typ = _TRAIN_FIELDS[key]
        try:
            out[key] = value.lower() in ("1", "true", "yes") if typ is bool else typ(value)
        except ValueError as exc:
            raise UsageError(f"{path}:{line_no}: bad value for {key}: {value!r}") from exc
    return out


def _cmd_synth(args) -> int:
    import os

    cfg = synth.SynthConfig(
        seed=args.seed,
        alphabet_size=args.alphabet_size,
        vocab_size=args.vocab_size,
        word_len_range=args.word_len,
        query_len_range=args.query_len,
        n_train=args.n_train,
        n_test=args.n_test,
        n_docs=args.n_docs,
        oov_fraction=args.oov_fraction,
        min_contexts=args.min_contexts,
        zipf_exponent=args.zipf_exponent,
    )
    corpus_out = synth.generate(cfg)
    os.makedirs(args.out_dir, exist_ok=True)
    _write(f"{args.out_dir}/dict.txt", corpus.format_dictionary(corpus_out.dictionary))
    _write(f"{args.out_dir}/train.tsv", corpus.format_labeled_queries(corpus_out.train))
    _write(f"{args.out_dir}/test.tsv", corpus.format_labeled_queries(corpus_out.test))
    _write(f"{args.out_dir}/docs.txt", corpus.format_documents(corpus_out.documents))
    print(f"wrote corpus to {args.out_dir} "
          f"({len(corpus_out.train)} train, {len(corpus_out.test)} test,"
          f" {len(corpus_out.documents)} docs)")
    return EXIT_OK


def _cmd_autolabel(args) -> int:
    d = corpus.parse_dictionary(_read(args.dict_path))
    queries = corpus.parse_queries(_read(args.queries))
    from .distant import autolabel_corpus

    result = autolabel_corpus(queries, d)
    _write(args.out, corpus.format_labeled_queries(result.pairs))
    print(f"covered {len(result.pairs)}/{result.total} queries"
          f" (coverage {result.coverage:.4f})")
    return EXIT_OK


def _cmd_index(args) -> int:
    docs = corpus.parse_documents(_read(args.docs))
    save_index(build_index(docs), args.out)
    print(f"indexed {len(docs)} sentences -> {args.out}")
    return EXIT_OK


def _cmd_features(args) -> int:
    docs = corpus.parse_documents(_read(args.docs))
    index = load_index(args.index, docs) if args.index else build_index(docs)
    queries = corpus.parse_queries(_read(args.queries))
    vocab = corpus.build_vocabulary(queries + docs)
    all_bags = [
        build_feature_bags(q, index, vocab, cap=args.cap, seed=args.seed,
                           t=args.window, k_max=args.k_max,
                           exclude_self=args.exclude_self)
        for q in queries
    ]
    if args.out:
        with open(args.out, "wb") as fh:
            save_feature_bags(all_bags, args.window, fh)
    if args.dump or not args.out:
        for q, bags in zip(queries, all_bags):
            sys.stdout.write(format_feature_bags(q, bags, vocab))
    return EXIT_OK


def _cmd_train(args) -> int:
    overrides = _parse_config_file(args.config) if args.config else {}
    for name in _TRAIN_FIELDS:
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    cfg = TrainConfig(**overrides)
    if cfg.variant not in m.VARIANTS:
        raise UsageError(f"unknown variant {cfg.variant!r}")
    dataset = corpus.parse_labeled_queries(_read(args.train_path))
    docs = corpus.parse_documents(_read(args.docs))
    result = trainer.train(dataset, docs, cfg)
    m.save_model(result.model, args.out)
    if args.history:
        _write(args.history, result.history_csv())
    last = result.history[-1]
    best = result.history[result.best_epoch - 1]
    print(f"trained {cfg.variant} for {last.epoch} epochs;"
          f" best epoch {result.best_epoch} (val F1 {best.val_f1:.4f}) -> {args.out}")
    return EXIT_OK


def _cmd_segment(args) -> int:
    mdl = m.load_model(args.model)
    if args.variant != mdl.hyper.variant:
        raise UsageError(
            f"--variant {args.variant} does not match model variant {mdl.hyper.variant!r}"
        )
    queries = corpus.parse_queries(_read(args.queries))
    index = None
    if mdl.hyper.variant != "q":
        if not args.docs:
            raise UsageError(f"variant {mdl.hyper.variant!r} needs --docs for contexts")
        index = build_index(corpus.parse_documents(_read(args.docs)))
    out = []
    for q in queries:
        bags = None
        if index is not None:
            bags = build_feature_bags(
                q, index, mdl.vocab, cap=mdl.hyper.context_cap, seed=args.seed,
                t=mdl.hyper.t, k_max=mdl.hyper.k_max, exclude_self=args.exclude_self,
            )
        out.append(corpus.LabeledQuery(q, tuple(m.predict(mdl, q, bags))))
    _write(args.out, corpus.format_labeled_queries(out))
    print(f"segmented {len(out)} queries -> {args.out}")
    return EXIT_OK


def _cmd_eval(args) -> int:
    pred = [list(q.segments) for q in corpus.parse_labeled_queries(_read(args.pred))]
    gold = [list(q.segments) for q in corpus.parse_labeled_queries(_read(args.gold))]
    train_segments = None
    if args.train_path:
        train_segments = {
            seg for q in corpus.parse_labeled_queries(_read(args.train_path))
            for seg in q.segments
        }
    metrics = evaluation.evaluate(pred, gold, train_segments)
    sys.stdout.write(evaluation.format_report(metrics))
    sys.stdout.write(evaluation.format_kv(metrics))
    if args.out:
        _write(args.out, evaluation.format_kv(metrics))
    return EXIT_OK


def _cmd_uns(args) -> int:
    queries = corpus.parse_queries(_read(args.queries))
    stats_queries = corpus.parse_queries(_read(args.stats_queries)) if args.stats_queries else []
    docs = corpus.parse_documents(_read(args.docs)) if args.docs else []
    stats = baselines.build_stats(
        stats_queries, docs,
        use_queries=not args.no_queries,
        use_documents=not args.no_documents,
        l_max=args.l_max,
    )
    out = [
        corpus.LabeledQuery(q, tuple(baselines.uns_segment(q, stats)))
        for q in queries
    ]
    _write(args.out, corpus.format_labeled_queries(out))
    print(f"segmented {len(out)} queries -> {args.out}")
    return EXIT_OK


_COMMANDS = {
    "synth": _cmd_synth,
    "autolabel": _cmd_autolabel,
    "index": _cmd_index,
    "features": _cmd_features,
    "train": _cmd_train,
    "segment": _cmd_segment,
    "eval": _cmd_eval,
    "uns": _cmd_uns,
}


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    try:
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (ParseError, LengthMismatch, EmptyCorpus, FileNotFoundError,
            synth.InfeasibleConfig, baselines.NoSourceEnabled,
            trainer.EmptyDataset) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except (NonFiniteLoss, FloatingPointError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
