"""Core data model: queries, segmentations, B/I labels, vocabularies, file formats.

A query is a plain character string; a segmentation is the ordered list of
substrings it splits into.  Labels use one tag per character: B opens a
segment, I continues it, so a valid label sequence always starts with B.
Input text is taken verbatim: no case folding, no width normalization.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

PAD_ID = 0
UNK_ID = 1
BOUNDARY_ID = 2
NUM_RESERVED_IDS = 3


class ParseError(ValueError):
    """Malformed dictionary, document, or query file content."""

    def __init__(self, message: str, line_no: int | None = None):
        if line_no is not None:
            message = f"line {line_no}: {message}"
        super().__init__(message)
        self.line_no = line_no


class LengthMismatch(ValueError):
    pass


class EmptyCorpus(ValueError):
    pass


@dataclass(frozen=True)
class LabeledQuery:
    text: str
    segments: tuple[str, ...]

    @property
    def labels(self) -> str:
        return encode_labels(self.segments)


_leading_i_fixes = 0


def leading_i_fix_count() -> int:
    """Number of label sequences repaired so far (illegal leading I read as B)."""
    return _leading_i_fixes


def encode_labels(segments: Sequence[str]) -> str:
    """Turn a segmentation into its per-character B/I tag string."""
    parts = []
    for seg in segments:
        if not seg:
            raise ParseError("empty segment")
        parts.append("B" + "I" * (len(seg) - 1))
    return "".join(parts)


def decode_labels(query: str, labels: str) -> list[str]:
    """Cut a query at every B tag.

    A leading I is tolerated: it is read as B and counted in
    leading_i_fix_count() so callers can audit how often it happens.
    """
    global _leading_i_fixes
    if len(query) != len(labels):
        raise LengthMismatch(
            f"query has {len(query)} chars but labels has {len(labels)} tags"
        )
    bad = set(labels) - {"B", "I"}
    if bad:
        raise ParseError(f"unknown tags {sorted(bad)!r}")
    if not query:
        return []
    if labels[0] == "I":
        _leading_i_fixes += 1
        labels = "B" + labels[1:]
    segments = []
    start = 0
    for i in range(1, len(query)):
        if labels[i] == "B":
            segments.append(query[start:i])
            start = i
    segments.append(query[start:])
    return segments


def _check_segment(seg: str, line_no: int) -> None:
    if not seg:
        raise ParseError("empty segment", line_no)
    if any(ch.isspace() for ch in seg):
        raise ParseError(f"whitespace inside segment {seg!r}", line_no)


def parse_labeled_queries(text: str) -> list[LabeledQuery]:
    """Parse the TAB-separated labeled format, one query per line."""
    out = []
    for line_no, line in enumerate(text.splitlines(), 1):
        if not line:
            raise ParseError("blank line", line_no)
        segments = tuple(line.split("\t"))
        for seg in segments:
            _check_segment(seg, line_no)
        out.append(LabeledQuery("".join(segments), segments))
    return out


def format_labeled_queries(items: Iterable[LabeledQuery]) -> str:
    return "".join("\t".join(q.segments) + "\n" for q in items)


def parse_queries(text: str) -> list[str]:
    """Parse the unlabeled format: one raw query per line."""
    out = []
    for line_no, line in enumerate(text.splitlines(), 1):
        if not line:
            raise ParseError("blank line", line_no)
        if any(ch.isspace() for ch in line):
            raise ParseError(f"whitespace inside query {line!r}", line_no)
        out.append(line)
    return out


def format_queries(queries: Iterable[str]) -> str:
    return "".join(q + "\n" for q in queries)


class Dictionary:
    """A set of known segment strings."""

    def __init__(self, entries: Iterable[str]):
        self.entries = frozenset(entries)
        if "" in self.entries:
            raise ParseError("empty dictionary entry")
        self.max_entry_len = max((len(e) for e in self.entries), default=0)

    def __contains__(self, s: str) -> bool:
        return s in self.entries

    def __len__(self) -> int:
        return len(self.entries)


def parse_dictionary(text: str) -> Dictionary:
    """One entry per line; blank lines are ignored."""
    entries = []
    for line_no, line in enumerate(text.splitlines(), 1):
        if not line:
            continue
        if any(ch.isspace() for ch in line):
            raise ParseError(f"whitespace inside entry {line!r}", line_no)
        entries.append(line)
    return Dictionary(entries)


def format_dictionary(d: Dictionary) -> str:
    return "".join(e + "\n" for e in sorted(d.entries))


def parse_documents(text: str) -> list[str]:
    """One sentence per line, kept verbatim; empty lines are dropped."""
    return [line for line in text.splitlines() if line]


def format_documents(sentences: Iterable[str]) -> str:
    return "".join(s + "\n" for s in sentences)


class Vocabulary:
    """Dense character ids with reserved PAD, UNK and BOUNDARY slots.

    Non-reserved ids follow code-point order of the characters the vocabulary
    was built from, so identical corpora always yield identical id maps.
    """

    def __init__(self, chars: Sequence[str]):
        self.chars = tuple(chars)
        if len(set(self.chars)) != len(self.chars):
            raise ValueError("duplicate characters in vocabulary")
        self._ids = {c: NUM_RESERVED_IDS + i for i, c in enumerate(self.chars)}

    @property
    def size(self) -> int:
        return NUM_RESERVED_IDS + len(self.chars)

    def id(self, char: str) -> int:
        return self._ids.get(char, UNK_ID)

    def encode(self, text: str) -> list[int]:
        return [self._ids.get(c, UNK_ID) for c in text]

    def __contains__(self, char: str) -> bool:
        return char in self._ids

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocabulary) and self.chars == other.chars

    def __repr__(self) -> str:
        return f"Vocabulary({self.size} ids)"


def build_vocabulary(texts: Iterable[str]) -> Vocabulary:
    chars = sorted({c for t in texts for c in t})
    if not chars:
        raise EmptyCorpus("no characters to build a vocabulary from")
    return Vocabulary(chars)
