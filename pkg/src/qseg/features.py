"""Align-and-subtract feature extraction from mined contexts.

A context sentence is aligned to the query at the center character.  Walking
outward while characters agree yields the match radii k_l and k_r (both count
the center, so they are at least 1).  The t sentence characters immediately
beyond each matched stretch form the window; positions past the sentence edge
are padded with the reserved BOUNDARY id.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import BinaryIO

from .corpus import BOUNDARY_ID, ParseError, Vocabulary
from .context_index import BigramIndex, find_contexts


class AlignmentMismatch(ValueError):
    pass


@dataclass(frozen=True)
class SideFeature:
    window_ids: tuple[int, ...]
    distance: int


@dataclass(frozen=True)
class FeatureBag:
    """Per-query-character bag of (left, right) side features."""

    items: tuple[tuple[SideFeature, SideFeature], ...]


def subtract_align(query: str, i: int, sentence: str, center: int) -> tuple[int, int]:
    """Match radii of the aligned context; raises if the centers differ."""
    if sentence[center] != query[i]:
        raise AlignmentMismatch(
            f"sentence[{center}]={sentence[center]!r} != query[{i}]={query[i]!r}"
        )
    k_l = 1
    while i - k_l >= 0 and center - k_l >= 0 and sentence[center - k_l] == query[i - k_l]:
        k_l += 1
    k_r = 1
    while (
        i + k_r < len(query)
        and center + k_r < len(sentence)
        and sentence[center + k_r] == query[i + k_r]
    ):
        k_r += 1
    return k_l, k_r


def _window_ids(sentence: str, offsets: range, vocab: Vocabulary) -> tuple[int, ...]:
    return tuple(
        vocab.id(sentence[o]) if 0 <= o < len(sentence) else BOUNDARY_ID
        for o in offsets
    )


def extract_side_features(
    query: str,
    i: int,
    sentence: str,
    center: int,
    vocab: Vocabulary,
    t: int = 2,
    k_max: int = 7,
) -> tuple[SideFeature, SideFeature]:
    """Left and right (window, distance) features for one aligned context.

    Windows never overlap the matched region: the left window covers the t
    characters just before sentence[center - k_l + 1 .. center], the right
    window the t characters just after the match on the other side.  Distances
    are clamped into [1, k_max].
    """
    k_l, k_r = subtract_align(query, i, sentence, center)
    left = SideFeature(
        _window_ids(sentence, range(center - k_l - t + 1, center - k_l + 1), vocab),
        min(k_l, k_max),
    )
    right = SideFeature(
        _window_ids(sentence, range(center + k_r, center + k_r + t), vocab),
        min(k_r, k_max),
    )
    return left, right


def build_feature_bags(
    query: str,
    index: BigramIndex,
    vocab: Vocabulary,
    cap: int = 5,
    seed: int = 0,
    t: int = 2,
    k_max: int = 7,
    exclude_self: bool = False,
) -> list[FeatureBag]:
    """One FeatureBag per query character, in posting order of the contexts."""
    bags = []
    for i in range(len(query)):
        ctx = find_contexts(index, query, i, cap=cap, seed=seed, exclude_self=exclude_self)
        items = tuple(
            extract_side_features(query, i, index.docs[sid], center, vocab, t, k_max)
            for sid, center in ctx.items
        )
        bags.append(FeatureBag(items))
    return bags


def save_feature_bags(bags_per_query: list[list[FeatureBag]], t: int, fh: BinaryIO) -> None:
    """Per item: t left ids, k_l, t right ids, k_r as 32-bit little-endian ints."""
    fh.write(struct.pack("<II", t, len(bags_per_query)))
    for bags in bags_per_query:
        fh.write(struct.pack("<I", len(bags)))
        for bag in bags:
            fh.write(struct.pack("<I", len(bag.items)))
            for left, right in bag.items:
                flat = (*left.window_ids, left.distance, *right.window_ids, right.distance)
                fh.write(struct.pack(f"<{2 * t + 2}I", *flat))


def load_feature_bags(fh: BinaryIO) -> tuple[list[list[FeatureBag]], int]:
    blob = fh.read()
    pos = 0

    def take(fmt: str):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(blob):
            raise ParseError("truncated feature bag stream")
        vals = struct.unpack_from(fmt, blob, pos)
        pos += size
        return vals

    t, n_queries = take("<II")
    out = []
    for _ in range(n_queries):
        (n_positions,) = take("<I")
        bags = []
        for _ in range(n_positions):
            (n_items,) = take("<I")
            items = []
            for _ in range(n_items):
                flat = take(f"<{2 * t + 2}I")
                items.append(
                    (
                        SideFeature(tuple(flat[:t]), flat[t]),
                        SideFeature(tuple(flat[t + 1 : 2 * t + 1]), flat[2 * t + 1]),
                    )
                )
            bags.append(FeatureBag(tuple(items)))
        out.append(bags)
    return out, t


def format_feature_bags(query: str, bags: list[FeatureBag], vocab: Vocabulary) -> str:
    """Human-readable dump used by the CLI --dump flag."""
    id_to_char = {vocab.id(c): c for c in vocab.chars}
    id_to_char[BOUNDARY_ID] = "<b>"

    def render(ids: tuple[int, ...]) -> str:
        return "".join(id_to_char.get(x, "<unk>") for x in ids)

    lines = [f"query {query}"]
    for i, bag in enumerate(bags):
        lines.append(f"  char {i} {query[i]!r}: {len(bag.items)} contexts")
        for left, right in bag.items:
            lines.append(
                f"    left[{render(left.window_ids)}]@{left.distance}"
                f" right[{render(right.window_ids)}]@{right.distance}"
            )
    return "\n".join(lines) + "\n"
