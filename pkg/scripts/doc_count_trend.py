#!/usr/bin/env python3
"""Context coverage and context-only accuracy as the document pool grows.

For each document count this prints the fraction of test characters that get
at least one mined context, and the test F1 of the context-only variant.  The
document stream is a prefix chain across counts, so coverage can only rise.
"""

import argparse

from qseg import model as m
from qseg.context_index import build_index
from qseg.corpus import build_vocabulary
from qseg.evaluation import evaluate
from qseg.features import build_feature_bags
from qseg.synth import SynthConfig, generate
from qseg.trainer import TrainConfig, train


def coverage(corpus, seed):
    index = build_index(corpus.documents)
    vocab = build_vocabulary([q.text for q in corpus.train] + corpus.documents)
    covered = total = 0
    for q in corpus.test:
        for bag in build_feature_bags(q.text, index, vocab, cap=5, seed=seed):
            total += 1
            covered += bool(bag.items)
    return covered / total


def context_f1(corpus, seed, lr, max_epochs):
    cfg = TrainConfig(variant="c", lr=lr, max_epochs=max_epochs,
                      patience=max_epochs, seed=seed)
    mdl = train(corpus.train, corpus.documents, cfg).model
    index = build_index(corpus.documents)
    pred = []
    for q in corpus.test:
        bags = build_feature_bags(q.text, index, mdl.vocab, cap=cfg.context_cap,
                                  seed=cfg.seed, t=cfg.t, k_max=cfg.k_max)
        pred.append(m.predict(mdl, q.text, bags))
    return evaluate(pred, [list(q.segments) for q in corpus.test]).f1


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, nargs="+", default=[1, 2, 3])
    ap.add_argument("--doc-counts", type=int, nargs="+", default=[500, 1500, 3000])
    ap.add_argument("--vocab-size", type=int, default=600)
    ap.add_argument("--n-train", type=int, default=400)
    ap.add_argument("--n-test", type=int, default=200)
    ap.add_argument("--lr", type=float, default=1e-3)
    ap.add_argument("--max-epochs", type=int, default=40)
    args = ap.parse_args()

    print("seed  n_docs  coverage      f1")
    for seed in args.seeds:
        for n_docs in args.doc_counts:
            corpus = generate(SynthConfig(
                seed=seed, vocab_size=args.vocab_size, n_train=args.n_train,
                n_test=args.n_test, n_docs=n_docs,
            ))
            cov = coverage(corpus, seed)
            f1 = context_f1(corpus, seed, args.lr, args.max_epochs)
            print(f"{seed:4d} {n_docs:7d} {cov:9.4f} {f1:7.4f}")


if __name__ == "__main__":
    main()
