"""Distant supervision: label raw queries by greedy dictionary matching.

Queries that a forward longest-match pass cannot cover completely are dropped
rather than partially labeled, so the produced training data contains no
guessed boundaries.
"""

from __future__ import annotations

from dataclasses import dataclass

from .corpus import Dictionary, LabeledQuery


def forward_max_match(query: str, d: Dictionary) -> tuple[str, ...] | None:
    """Greedy left-to-right longest match; None if any position is uncovered."""
    n = len(query)
    out = []
    i = 0
    while i < n:
        match = None
        for length in range(min(d.max_entry_len, n - i), 0, -1):
            cand = query[i : i + length]
            if cand in d:
                match = cand
                break
        if match is None:
            return None
        out.append(match)
        i += len(match)
    return tuple(out)


@dataclass
class AutolabelResult:
    pairs: list[LabeledQuery]
    total: int

    @property
    def coverage(self) -> float:
        """Fraction of input queries the dictionary fully covered."""
        return len(self.pairs) / self.total if self.total else 0.0


def autolabel_corpus(queries: list[str], d: Dictionary) -> AutolabelResult:
    pairs = []
    for q in queries:
        segments = forward_max_match(q, d)
        if segments is not None:
            pairs.append(LabeledQuery(q, segments))
    return AutolabelResult(pairs, len(queries))
