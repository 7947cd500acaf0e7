"""Unsupervised n-gram segmentation baseline and dictionary max-matching."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from .corpus import Dictionary

EPSILON = 0.5


class NoSourceEnabled(ValueError):
    pass


@dataclass
class NgramStats:
    counts: dict[str, int] = field(default_factory=dict)
    total_unigrams: int = 0
    l_max: int = 7


def build_stats(
    queries: list[str],
    documents: list[str],
    use_queries: bool = True,
    use_documents: bool = True,
    l_max: int = 7,
) -> NgramStats:
    """Count all n-grams up to l_max over the enabled sources."""
    if not use_queries and not use_documents:
        raise NoSourceEnabled("at least one of queries/documents must be enabled")
    stats = NgramStats(l_max=l_max)
    sources = (queries if use_queries else []) + (documents if use_documents else [])
    for text in sources:
        n = len(text)
        stats.total_unigrams += n
        for length in range(1, l_max + 1):
            for i in range(n - length + 1):
                gram = text[i : i + length]
                stats.counts[gram] = stats.counts.get(gram, 0) + 1
    return stats


def segment_score(seg: str, stats: NgramStats) -> float:
    """log(count+1), plus for multi-char segments the weakest-link pointwise
    mutual information over all binary splits (additive smoothing 0.5)."""
    count = stats.counts.get(seg, 0)
    base = math.log(count + 1)
    if len(seg) <= 1:
        return base
    total = max(stats.total_unigrams, 1)
    mi = min(
        math.log(
            (count + EPSILON)
            * total
            / (
                (stats.counts.get(seg[:p], 0) + EPSILON)
                * (stats.counts.get(seg[p:], 0) + EPSILON)
            )
        )
        for p in range(1, len(seg))
    )
    return base + mi


def uns_segment(query: str, stats: NgramStats) -> list[str]:
    """Maximize the sum of segment scores by dynamic programming.

    Ties prefer fewer segments, then the lexicographically smallest tuple of
    cut positions.
    """
    n = len(query)
    if n == 0:
        return []
    # per prefix: (score, segment count, cut positions)
    best: list[tuple[float, int, tuple[int, ...]] | None] = [None] * (n + 1)
    best[0] = (0.0, 0, ())
    for j in range(1, n + 1):
        chosen = None
        for i in range(j):
            prev = best[i]
            cand = (
                prev[0] + segment_score(query[i:j], stats),
                prev[1] + 1,
                prev[2] + ((i,) if i > 0 else ()),
            )
            if chosen is None or _better(cand, chosen):
                chosen = cand
        best[j] = chosen
    cuts = best[n][2]
    bounds = [0, *cuts, n]
    return [query[a:b] for a, b in zip(bounds, bounds[1:])]


def _better(a: tuple[float, int, tuple[int, ...]], b: tuple[float, int, tuple[int, ...]]) -> bool:
    if a[0] != b[0]:
        return a[0] > b[0]
    if a[1] != b[1]:
        return a[1] < b[1]
    return a[2] < b[2]


def maxmatch_segment(query: str, d: Dictionary) -> list[str]:
    """Forward greedy longest match; uncovered characters become singletons."""
    out = []
    i = 0
    n = len(query)
    while i < n:
        match = None
        for length in range(min(d.max_entry_len, n - i), 1, -1):
            cand = query[i : i + length]
            if cand in d:
                match = cand
                break
        if match is None:
            match = query[i]
        out.append(match)
        i += len(match)
    return out
