"""Minibatch training with Adam, a validation split, and early stopping.

The loss is the mean per-query negative log-likelihood.  Validation segment F1
drives early stopping; the parameters returned are those of the best epoch,
not the last one.  Everything is seed-controlled, so a rerun with identical
inputs reproduces the returned model bit for bit.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass

import numpy as np

from . import evaluation, model as m
from .autodiff import Tape, Tensor
from .context_index import build_index
from .corpus import LabeledQuery, build_vocabulary
from .features import FeatureBag, build_feature_bags
from .util import derive_seed


class EmptyDataset(ValueError):
    pass


class NonFiniteLoss(RuntimeError):
    pass


@dataclass(frozen=True)
class TrainConfig:
    variant: str = "qc"
    lr: float = 1e-4
    batch_size: int = 32
    val_fraction: float = 0.1
    patience: int = 5
    max_epochs: int = 100
    seed: int = 0
    d_c: int = 10
    d_h: int = 10
    d_d: int = 5
    d_g: int = 10
    t: int = 2
    k_max: int = 7
    context_cap: int = 5
    exclude_self: bool = False

    def hyper(self) -> m.ModelHyper:
        return m.ModelHyper(
            d_c=self.d_c,
            d_h=self.d_h,
            d_d=self.d_d,
            d_g=self.d_g,
            t=self.t,
            k_max=self.k_max,
            context_cap=self.context_cap,
            variant=self.variant,
        )


@dataclass
class EpochStats:
    epoch: int
    loss: float
    val_f1: float


@dataclass
class TrainResult:
    model: m.Model
    history: list[EpochStats]
    best_epoch: int

    def history_csv(self) -> str:
        rows = [f"{s.epoch},{s.loss:.6f},{s.val_f1:.6f}" for s in self.history]
        return "\n".join(["epoch,loss,val_f1", *rows]) + "\n"


def split_train_val(
    dataset: list[LabeledQuery], val_fraction: float, seed: int
) -> tuple[list[LabeledQuery], list[LabeledQuery]]:
    """Seeded shuffle split; validation gets round(fraction*N), at least 1."""
    if not dataset:
        raise EmptyDataset("no labeled queries")
    order = list(range(len(dataset)))
    random.Random(derive_seed(seed, "split")).shuffle(order)
    n_val = min(max(1, round(val_fraction * len(dataset))), len(dataset) - 1)
    if len(dataset) == 1:
        raise EmptyDataset("need at least 2 queries to split off validation")
    val = [dataset[i] for i in order[:n_val]]
    train = [dataset[i] for i in order[n_val:]]
    return train, val


class Adam:
    def __init__(self, tensors: list[Tensor], lr: float, beta1: float = 0.9,
                 beta2: float = 0.999, eps: float = 1e-8):
        self.tensors = tensors
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.step_count = 0
        self.m = [np.zeros_like(t.v) for t in tensors]
        self.v = [np.zeros_like(t.v) for t in tensors]

    def step(self) -> None:
        self.step_count += 1
        b1c = 1.0 - self.beta1**self.step_count
        b2c = 1.0 - self.beta2**self.step_count
        for k, t in enumerate(self.tensors):
            g = t.g
            if g is None:
                continue
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * g
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * g * g
            t.v -= self.lr * (self.m[k] / b1c) / (np.sqrt(self.v[k] / b2c) + self.eps)
            t.g = None


@dataclass
class _Example:
    char_ids: list[int]
    label_ids: list[int]
    bags: list[FeatureBag] | None


def _prepare(
    queries: list[LabeledQuery],
    cfg: TrainConfig,
    vocab,
    index,
) -> list[_Example]:
    out = []
    for q in queries:
        bags = None
        if cfg.variant != "q":
            bags = build_feature_bags(
                q.text, index, vocab,
                cap=cfg.context_cap, seed=cfg.seed, t=cfg.t, k_max=cfg.k_max,
                exclude_self=cfg.exclude_self,
            )
        out.append(_Example(
            char_ids=vocab.encode(q.text),
            label_ids=[m.B_ID if tag == "B" else m.I_ID for tag in q.labels],
            bags=bags,
        ))
    return out


def _example_loss(params: m.ModelParams, cfg: TrainConfig, ex: _Example,
                  grad_weight: float | None) -> float:
    tape = Tape()
    zs = m.forward_z(tape, params, cfg.variant, ex.char_ids, ex.bags)
    ll = m.crf_log_likelihood(tape, zs, ex.label_ids, params.w_crf)
    if grad_weight is not None:
        tape.backward(ll, seed=grad_weight)
    return -float(ll.v)


def _predictions(mdl: m.Model, cfg: TrainConfig, queries: list[LabeledQuery],
                 examples: list[_Example]) -> list[list[str]]:
    return [
        m.predict(mdl, q.text, ex.bags)
        for q, ex in zip(queries, examples)
    ]


def train(
    dataset: list[LabeledQuery],
    documents: list[str],
    cfg: TrainConfig,
) -> TrainResult:
    train_set, val_set = split_train_val(dataset, cfg.val_fraction, cfg.seed)
    vocab = build_vocabulary([q.text for q in train_set] + documents)
    index = build_index(documents)
    # feature bags are sampled once here and stay frozen across epochs
    train_ex = _prepare(train_set, cfg, vocab, index)
    val_ex = _prepare(val_set, cfg, vocab, index)

    params = m.init_params(cfg.hyper(), vocab.size, cfg.seed)
    mdl = m.Model(cfg.hyper(), vocab, params)
    adam = Adam(params.all(), cfg.lr)
    rng = random.Random(derive_seed(cfg.seed, "epochs"))

    history: list[EpochStats] = []
    best_f1 = -math.inf
    best_epoch = 0
    best_values = m.clone_values(params)
    val_gold = [list(q.segments) for q in val_set]

    for epoch in range(1, cfg.max_epochs + 1):
        order = list(range(len(train_ex)))
        rng.shuffle(order)
        total_loss = 0.0
        for start in range(0, len(order), cfg.batch_size):
            batch = order[start : start + cfg.batch_size]
            batch_loss = 0.0
            for idx in batch:
                # d(-mean ll)/d ll = -1/B, accumulated across the batch
                batch_loss += _example_loss(params, cfg, train_ex[idx], -1.0 / len(batch))
            if not math.isfinite(batch_loss):
                raise NonFiniteLoss(
                    f"non-finite loss at epoch {epoch},"
                    f" batch starting at {start} (loss={batch_loss})"
                )
            adam.step()
            total_loss += batch_loss
        epoch_loss = total_loss / len(train_ex)

        val_pred = _predictions(mdl, cfg, val_set, val_ex)
        _, _, val_f1 = evaluation.segment_prf(val_pred, val_gold)
        history.append(EpochStats(epoch, epoch_loss, val_f1))

        if val_f1 > best_f1:
            best_f1 = val_f1
            best_epoch = epoch
            best_values = m.clone_values(params)
        elif epoch - best_epoch > cfg.patience:
            break

    m.restore_values(params, best_values)
    return TrainResult(mdl, history, best_epoch)
