"""Inverted bi-gram index over external documents, plus context search.

For query character c_i we look up the left bi-gram c_{i-1}c_i and the right
bi-gram c_i c_{i+1}.  Each posting (sentence_id, start_offset) maps to a
context (sentence_id, center_offset) where center_offset is the position of
the character that plays the role of c_i inside the sentence.
"""

from __future__ import annotations

import random
import struct
from dataclasses import dataclass

from .corpus import ParseError
from .util import derive_seed

INDEX_MAGIC = b"SQIX1"


@dataclass
class BigramIndex:
    postings: dict[str, list[tuple[int, int]]]
    docs: list[str]


def build_index(docs: list[str]) -> BigramIndex:
    """Index every bi-gram occurrence; duplicate sentences are indexed as-is."""
    postings: dict[str, list[tuple[int, int]]] = {}
    for sid, sentence in enumerate(docs):
        for off in range(len(sentence) - 1):
            bigram = sentence[off : off + 2]
            postings.setdefault(bigram, []).append((sid, off))
    # scan order already yields (sentence_id, start_offset) sorted lists
    return BigramIndex(postings, list(docs))


@dataclass(frozen=True)
class ContextBag:
    """Up to `cap` occurrences (sentence_id, center_offset) for one query char."""

    items: tuple[tuple[int, int], ...]
    cap: int


def find_contexts(
    index: BigramIndex,
    query: str,
    i: int,
    cap: int = 5,
    seed: int = 0,
    exclude_self: bool = False,
) -> ContextBag:
    """Collect contexts for query[i] from left and right bi-gram postings.

    At query edges only the existing bi-gram is searched; duplicates reached
    through both bi-grams collapse to one context.  When the candidate set
    exceeds `cap`, a uniform sample without replacement is taken with an RNG
    derived from (seed, query, i), so the bag is frozen per run seed.
    """
    n = len(query)
    candidates: set[tuple[int, int]] = set()
    if i > 0:
        for sid, off in index.postings.get(query[i - 1 : i + 1], ()):
            candidates.add((sid, off + 1))
    if i < n - 1:
        for sid, off in index.postings.get(query[i : i + 2], ()):
            candidates.add((sid, off))
    if exclude_self:
        candidates = {(sid, c) for sid, c in candidates if index.docs[sid] != query}
    ordered = sorted(candidates)
    if len(ordered) > cap:
        rng = random.Random(derive_seed(seed, query, i))
        ordered = sorted(rng.sample(ordered, cap))
    return ContextBag(tuple(ordered), cap)


def save_index(index: BigramIndex, path: str) -> None:
    """Binary layout: magic, bigram count, then per bi-gram the length-prefixed
    UTF-8 string and its postings as 32-bit little-endian (sid, offset) pairs."""
    with open(path, "wb") as fh:
        fh.write(INDEX_MAGIC)
        fh.write(struct.pack("<I", len(index.postings)))
        for bigram in sorted(index.postings):
            raw = bigram.encode("utf-8")
            plist = index.postings[bigram]
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<I", len(plist)))
            fh.write(struct.pack(f"<{2 * len(plist)}I", *(x for p in plist for x in p)))


def load_index(path: str, docs: list[str]) -> BigramIndex:
    """Read an index written by save_index; `docs` must be the indexed sentences."""
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(INDEX_MAGIC)] != INDEX_MAGIC:
        raise ParseError(f"{path}: bad index magic")
    pos = len(INDEX_MAGIC)

    def take(fmt: str):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(blob):
            raise ParseError(f"{path}: truncated index")
        vals = struct.unpack_from(fmt, blob, pos)
        pos += size
        return vals

    postings: dict[str, list[tuple[int, int]]] = {}
    (n_bigrams,) = take("<I")
    for _ in range(n_bigrams):
        (raw_len,) = take("<I")
        raw = blob[pos : pos + raw_len]
        pos += raw_len
        bigram = raw.decode("utf-8")
        (n_postings,) = take("<I")
        flat = take(f"<{2 * n_postings}I")
        postings[bigram] = [(flat[2 * k], flat[2 * k + 1]) for k in range(n_postings)]
    return BigramIndex(postings, list(docs))
