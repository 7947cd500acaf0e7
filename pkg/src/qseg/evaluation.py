"""Segment-level evaluation: P/R/F1, exact-match accuracy, in/out-vocabulary recall.

A predicted segment counts as correct only when its character span (start,
end) is identical to a gold span; matching by span, not by string, so a
correct string in the wrong place earns nothing.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

from .corpus import LengthMismatch


@dataclass
class Metrics:
    precision: float
    recall: float
    f1: float
    query_accuracy: float
    matched: int
    total_pred: int
    total_gold: int
    recall_iv: float | None = None
    recall_ov: float | None = None
    oov_rate: float | None = None


def spans(segments: list[str]) -> list[tuple[int, int]]:
    """Half-open character spans of a segmentation."""
    out = []
    pos = 0
    for seg in segments:
        out.append((pos, pos + len(seg)))
        pos += len(seg)
    return out


def _check_paired(pred: list[list[str]], gold: list[list[str]]) -> None:
    if len(pred) != len(gold):
        raise LengthMismatch(f"{len(pred)} predictions for {len(gold)} gold queries")
    for k, (p, g) in enumerate(zip(pred, gold)):
        if "".join(p) != "".join(g):
            raise LengthMismatch(f"query {k}: prediction and gold cover different text")


def segment_prf(
    pred: list[list[str]], gold: list[list[str]]
) -> tuple[float, float, float]:
    _check_paired(pred, gold)
    matched = total_pred = total_gold = 0
    for p, g in zip(pred, gold):
        ps, gs = set(spans(p)), set(spans(g))
        matched += len(ps & gs)
        total_pred += len(ps)
        total_gold += len(gs)
    precision = matched / total_pred if total_pred else 0.0
    recall = matched / total_gold if total_gold else 0.0
    f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
    return precision, recall, f1


def query_accuracy(pred: list[list[str]], gold: list[list[str]]) -> float:
    _check_paired(pred, gold)
    if not gold:
        warnings.warn("query_accuracy over an empty set defaults to 1.0")
        return 1.0
    hits = sum(1 for p, g in zip(pred, gold) if p == g)
    return hits / len(gold)


def recall_iv_ov(
    pred: list[list[str]],
    gold: list[list[str]],
    train_segments: set[str],
) -> tuple[float | None, float | None, float]:
    """Recall split by whether the gold segment string was seen in training.

    Returns (recall_iv, recall_ov, oov_rate); a recall is None when its
    partition is empty.
    """
    _check_paired(pred, gold)
    found = {"iv": 0, "ov": 0}
    total = {"iv": 0, "ov": 0}
    for p, g in zip(pred, gold):
        ps = set(spans(p))
        for seg, span in zip(g, spans(g)):
            part = "iv" if seg in train_segments else "ov"
            total[part] += 1
            if span in ps:
                found[part] += 1
    n_gold = total["iv"] + total["ov"]
    r_iv = found["iv"] / total["iv"] if total["iv"] else None
    r_ov = found["ov"] / total["ov"] if total["ov"] else None
    rate = total["ov"] / n_gold if n_gold else 0.0
    return r_iv, r_ov, rate


def evaluate(
    pred: list[list[str]],
    gold: list[list[str]],
    train_segments: set[str] | None = None,
) -> Metrics:
    precision, recall, f1 = segment_prf(pred, gold)
    matched = total_pred = total_gold = 0
    for p, g in zip(pred, gold):
        ps, gs = set(spans(p)), set(spans(g))
        matched += len(ps & gs)
        total_pred += len(ps)
        total_gold += len(gs)
    metrics = Metrics(
        precision=precision,
        recall=recall,
        f1=f1,
        query_accuracy=query_accuracy(pred, gold),
        matched=matched,
        total_pred=total_pred,
        total_gold=total_gold,
    )
    if train_segments is not None:
        metrics.recall_iv, metrics.recall_ov, metrics.oov_rate = recall_iv_ov(
            pred, gold, train_segments
        )
    return metrics


def format_report(m: Metrics) -> str:
    lines = [
        f"segments: {m.matched} matched / {m.total_pred} predicted / {m.total_gold} gold",
        f"precision {m.precision:.4f}  recall {m.recall:.4f}  f1 {m.f1:.4f}",
        f"query accuracy {m.query_accuracy:.4f}",
    ]
    if m.oov_rate is not None:
        iv = "n/a" if m.recall_iv is None else f"{m.recall_iv:.4f}"
        ov = "n/a" if m.recall_ov is None else f"{m.recall_ov:.4f}"
        lines.append(f"recall-iv {iv}  recall-ov {ov}  oov-rate {m.oov_rate:.4f}")
    return "\n".join(lines) + "\n"


def format_kv(m: Metrics) -> str:
    """Machine-readable key=value report."""
    pairs = [
        ("precision", m.precision),
        ("recall", m.recall),
        ("f1", m.f1),
        ("query_accuracy", m.query_accuracy),
        ("matched", m.matched),
        ("total_pred", m.total_pred),
        ("total_gold", m.total_gold),
    ]
    if m.oov_rate is not None:
        pairs += [
            ("recall_iv", "n/a" if m.recall_iv is None else m.recall_iv),
            ("recall_ov", "n/a" if m.recall_ov is None else m.recall_ov),
            ("oov_rate", m.oov_rate),
        ]
    out = []
    for key, val in pairs:
        out.append(f"{key}={val:.6f}" if isinstance(val, float) else f"{key}={val}")
    return "\n".join(out) + "\n"
