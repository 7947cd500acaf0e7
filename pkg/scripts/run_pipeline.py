#!/usr/bin/env python3
"""Single end-to-end run: synthesize a corpus, train one variant, evaluate.

Writes model.bin, history.csv and metrics.txt into --out-dir and prints the
evaluation report.  All stages are seeded, so a rerun reproduces the same
artifacts byte for byte.
"""

import argparse
import os

from qseg import model as m
from qseg.context_index import build_index
from qseg.evaluation import evaluate, format_kv, format_report
from qseg.features import build_feature_bags
from qseg.synth import SynthConfig, generate
from qseg.trainer import TrainConfig, train


def parse_args():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seed", type=int, default=1)
    ap.add_argument("--variant", choices=m.VARIANTS, default="qc")
    ap.add_argument("--vocab-size", type=int, default=200)
    ap.add_argument("--n-train", type=int, default=2000)
    ap.add_argument("--n-test", type=int, default=500)
    ap.add_argument("--n-docs", type=int, default=3000)
    ap.add_argument("--oov-fraction", type=float, default=0.0)
    ap.add_argument("--lr", type=float, default=1e-4)
    ap.add_argument("--max-epochs", type=int, default=100)
    ap.add_argument("--patience", type=int, default=100)
    ap.add_argument("--val-fraction", type=float, default=0.05)
    ap.add_argument("--out-dir", default="runs/pipeline")
    return ap.parse_args()


def main():
    args = parse_args()
    corpus = generate(SynthConfig(
        seed=args.seed, vocab_size=args.vocab_size, n_train=args.n_train,
        n_test=args.n_test, n_docs=args.n_docs, oov_fraction=args.oov_fraction,
    ))
    cfg = TrainConfig(
        variant=args.variant, lr=args.lr, max_epochs=args.max_epochs,
        patience=args.patience, val_fraction=args.val_fraction, seed=args.seed,
    )
    result = train(corpus.train, corpus.documents, cfg)
    print(f"best epoch {result.best_epoch} of {len(result.history)}")

    mdl = result.model
    index = build_index(corpus.documents) if args.variant != "q" else None
    pred = []
    for q in corpus.test:
        bags = None
        if index is not None:
            bags = build_feature_bags(q.text, index, mdl.vocab, cap=cfg.context_cap,
                                      seed=cfg.seed, t=cfg.t, k_max=cfg.k_max)
        pred.append(m.predict(mdl, q.text, bags))
    train_segments = {s for q in corpus.train for s in q.segments}
    metrics = evaluate(pred, [list(q.segments) for q in corpus.test], train_segments)
    print(format_report(metrics), end="")

    os.makedirs(args.out_dir, exist_ok=True)
    m.save_model(mdl, os.path.join(args.out_dir, "model.bin"))
    with open(os.path.join(args.out_dir, "history.csv"), "w", encoding="utf-8") as fh:
        fh.write(result.history_csv())
    with open(os.path.join(args.out_dir, "metrics.txt"), "w", encoding="utf-8") as fh:
        fh.write(format_kv(metrics))
    print(f"artifacts in {args.out_dir}")


if __name__ == "__main__":
    main()
