"""Synthetic corpus generator with a controllable out-of-vocabulary rate.

Words are random character strings over a small alphabet.  A held-out slice
of the vocabulary never appears in training queries; test queries draw
held-out words per slot with probability oov_fraction.  Documents are noisy
sentences that embed vocabulary words (held-out ones included) between filler
characters drawn from the same alphabet, so every word has findable contexts.

Document generation uses its own RNG stream consumed one sentence at a time:
with a fixed seed, the document list for a smaller n_docs is a prefix of the
list for a larger one, which makes document-count sweeps exactly monotone.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .corpus import Dictionary, LabeledQuery
from .distant import forward_max_match
from .util import derive_seed

ALPHABET_BASE = 0x4E00  # CJK block: compact, unambiguous one-char tokens

_WORD_LEN_WEIGHTS = {1: 0.25, 2: 4.0, 3: 4.0, 4: 2.0, 5: 1.0}
_QUERY_LEN_WEIGHTS = {2: 4.0, 3: 3.0, 4: 2.0, 5: 1.0}

_MAX_ATTEMPTS = 200


class InfeasibleConfig(ValueError):
    pass


@dataclass(frozen=True)
class SynthConfig:
    seed: int = 0
    alphabet_size: int = 150
    vocab_size: int = 200
    word_len_range: tuple[int, int] = (1, 5)
    query_len_range: tuple[int, int] = (2, 5)
    n_train: int = 2000
    n_test: int = 500
    n_docs: int = 3000
    oov_fraction: float = 0.0
    min_contexts: int = 3
    # query-log word frequencies are heavy-tailed; 0 gives a uniform draw
    zipf_exponent: float = 1.4


@dataclass
class SynthCorpus:
    dictionary: Dictionary
    train: list[LabeledQuery]
    test: list[LabeledQuery]
    documents: list[str]
    held_out: tuple[str, ...] = field(default=())


def _weighted_lengths(rng: random.Random, lo: int, hi: int, weights: dict[int, float]) -> int:
    lengths = list(range(lo, hi + 1))
    return rng.choices(lengths, [weights.get(l, 1.0) for l in lengths])[0]


def _decomposable(word: str, pieces: set[str], max_len: int) -> bool:
    """Can `word` be written as a concatenation of strings from `pieces`?"""
    n = len(word)
    ok = [False] * (n + 1)
    ok[0] = True
    for j in range(1, n + 1):
        for i in range(max(0, j - max_len), j):
            if ok[i] and word[i:j] in pieces:
                ok[j] = True
                break
    return ok[n]


def _sample_vocab(cfg: SynthConfig, rng: random.Random, alphabet: str) -> list[str]:
    lo, hi = cfg.word_len_range
    capacity = sum(cfg.alphabet_size**l for l in range(lo, hi + 1))
    if cfg.vocab_size > capacity // 2:
        raise InfeasibleConfig(
            f"vocab_size {cfg.vocab_size} too large for alphabet_size"
            f" {cfg.alphabet_size} and lengths {cfg.word_len_range}"
        )
    words: list[str] = []
    have: set[str] = set()
    for _ in range(cfg.vocab_size):
        for _ in range(_MAX_ATTEMPTS):
            length = _weighted_lengths(rng, lo, hi, _WORD_LEN_WEIGHTS)
            cand = "".join(rng.choice(alphabet) for _ in range(length))
            if cand in have:
                continue
            # keep gold segmentations unambiguous: no word may be a
            # concatenation of other words, in either direction
            if _decomposable(cand, have, hi):
                continue
            if any(
                cand in w and _decomposable(w, (have - {w}) | {cand}, hi)
                for w in words
            ):
                continue
            words.append(cand)
            have.add(cand)
            break
        else:
            raise InfeasibleConfig(
                f"could not sample {cfg.vocab_size} unambiguous words"
                f" (stuck after {len(words)})"
            )
    return words


def _make_sentence(rng: random.Random, words: list[str], alphabet: str) -> str:
    parts = [_filler(rng, alphabet)]
    for w in words:
        parts.append(w)
        parts.append(_filler(rng, alphabet))
    return "".join(parts)


def _filler(rng: random.Random, alphabet: str) -> str:
    return "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 3)))


def generate(cfg: SynthConfig) -> SynthCorpus:
    alphabet = "".join(chr(ALPHABET_BASE + i) for i in range(cfg.alphabet_size))
    words = _sample_vocab(cfg, random.Random(derive_seed(cfg.seed, "words")), alphabet)

    n_held = round(cfg.oov_fraction * cfg.vocab_size)
    held = words[len(words) - n_held :]
    train_words = words[: len(words) - n_held]
    if not train_words:
        raise InfeasibleConfig("oov_fraction leaves no training words")
    dictionary = Dictionary(train_words)

    lo_q, hi_q = cfg.query_len_range
    freq = [(rank + 1) ** -cfg.zipf_exponent for rank in range(len(train_words))]

    def make_train(rng: random.Random) -> list[LabeledQuery]:
        out = []
        for _ in range(cfg.n_train):
            for _ in range(_MAX_ATTEMPTS):
                k = _weighted_lengths(rng, lo_q, hi_q, _QUERY_LEN_WEIGHTS)
                segments = tuple(rng.choices(train_words, freq, k=k))
                text = "".join(segments)
                # only keep queries the dictionary labeler reproduces exactly,
                # so distant supervision covers 100% of the training set
                if forward_max_match(text, dictionary) == segments:
                    out.append(LabeledQuery(text, segments))
                    break
            else:
                raise InfeasibleConfig("training queries keep defeating max-match")
        return out

    def make_test(rng: random.Random) -> list[LabeledQuery]:
        out = []
        for _ in range(cfg.n_test):
            k = _weighted_lengths(rng, lo_q, hi_q, _QUERY_LEN_WEIGHTS)
            segments = tuple(
                rng.choice(held)
                if held and rng.random() < cfg.oov_fraction
                else rng.choices(train_words, freq)[0]
                for _ in range(k)
            )
            out.append(LabeledQuery("".join(segments), segments))
        return out

    def make_docs(rng: random.Random) -> list[str]:
        forced = cfg.min_contexts * len(held)
        if cfg.n_docs < forced:
            raise InfeasibleConfig(
                f"n_docs {cfg.n_docs} cannot give {len(held)} held-out words"
                f" {cfg.min_contexts} contexts each"
            )
        docs = []
        for k in range(forced):
            # round-robin so every held-out word is covered early in the stream
            docs.append(_make_sentence(rng, [held[k % len(held)], rng.choice(words)], alphabet))
        for _ in range(cfg.n_docs - forced):
            k = rng.randint(1, 3)
            docs.append(_make_sentence(rng, [rng.choice(words) for _ in range(k)], alphabet))
        return docs

    return SynthCorpus(
        dictionary=dictionary,
        train=make_train(random.Random(derive_seed(cfg.seed, "train"))),
        test=make_test(random.Random(derive_seed(cfg.seed, "test"))),
        documents=make_docs(random.Random(derive_seed(cfg.seed, "docs"))),
        held_out=tuple(held),
    )
