"""BiLSTM-CRF segment labeler with an attention bag of mined contexts.

Per query character the model may see two views: h_i, the BiLSTM state over
the query itself, and b_i, an attention-weighted sum of projected context
features.  The variant picks what the CRF consumes: "q" uses h_i, "c" uses
b_i, "qc" their concatenation.

The CRF scores a label pair (y_prev, y) at position i as w_pair . z_i, with a
START pseudo-label before the first position and no separate input-independent
transition term.  Labels are B=0, I=1.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass

import numpy as np

from .autodiff import ShapeMismatch, Tape, Tensor, accumulate
from .corpus import LengthMismatch, NUM_RESERVED_IDS, ParseError, Vocabulary, decode_labels
from .features import FeatureBag, SideFeature

MODEL_MAGIC = b"SQMD1"
VARIANTS = ("q", "c", "qc")

B_ID = 0
I_ID = 1
# label-pair rows of the CRF weight matrix
PAIR_BB, PAIR_BI, PAIR_IB, PAIR_II, PAIR_START_B, PAIR_START_I = range(6)
N_PAIRS = 6


def pair_of(prev: int | None, y: int) -> int:
    """Row index for transition (prev -> y); prev None means START."""
    return PAIR_START_B + y if prev is None else 2 * prev + y


@dataclass(frozen=True)
class ModelHyper:
    d_c: int = 10
    d_h: int = 10
    d_d: int = 5
    d_g: int = 10
    t: int = 2
    k_max: int = 7
    context_cap: int = 5
    variant: str = "qc"

    @property
    def z_dim(self) -> int:
        if self.variant == "q":
            return 2 * self.d_h
        if self.variant == "c":
            return 2 * self.d_g
        if self.variant == "qc":
            return 2 * (self.d_h + self.d_g)
        raise ValueError(f"unknown variant {self.variant!r}")


@dataclass
class ModelParams:
    e_c: Tensor
    e_d: Tensor
    lstm_fwd_w: Tensor
    lstm_fwd_b: Tensor
    lstm_bwd_w: Tensor
    lstm_bwd_b: Tensor
    w_proj: Tensor
    u: Tensor
    w_crf: Tensor

    def named(self) -> list[tuple[str, Tensor]]:
        return [
            ("e_c", self.e_c),
            ("e_d", self.e_d),
            ("lstm_fwd_w", self.lstm_fwd_w),
            ("lstm_fwd_b", self.lstm_fwd_b),
            ("lstm_bwd_w", self.lstm_bwd_w),
            ("lstm_bwd_b", self.lstm_bwd_b),
            ("w_proj", self.w_proj),
            ("u", self.u),
            ("w_crf", self.w_crf),
        ]

    def all(self) -> list[Tensor]:
        return [t for _, t in self.named()]


def init_params(hyper: ModelHyper, vocab_size: int, seed: int) -> ModelParams:
    """Standard normal init; LSTM weights are scaled by 0.1 to keep the gates
    unsaturated at the start, and the forget-gate bias slice is set to 1.0."""
    rng = np.random.default_rng(seed)

    def lstm(in_dim: int, hidden: int) -> tuple[Tensor, Tensor]:
        w = 0.1 * rng.standard_normal((4 * hidden, in_dim + hidden))
        b = 0.1 * rng.standard_normal(4 * hidden)
        b[hidden : 2 * hidden] = 1.0
        return Tensor(w), Tensor(b)

    fwd_w, fwd_b = lstm(hyper.d_c, hyper.d_h)
    bwd_w, bwd_b = lstm(hyper.d_c, hyper.d_h)
    return ModelParams(
        e_c=Tensor(rng.standard_normal((vocab_size, hyper.d_c))),
        e_d=Tensor(rng.standard_normal((hyper.k_max, hyper.d_d))),
        lstm_fwd_w=fwd_w,
        lstm_fwd_b=fwd_b,
        lstm_bwd_w=bwd_w,
        lstm_bwd_b=bwd_b,
        w_proj=Tensor(rng.standard_normal((hyper.d_g, hyper.d_c + hyper.d_d))),
        u=Tensor(rng.standard_normal((2 * hyper.d_g, 2 * hyper.d_h))),
        w_crf=Tensor(rng.standard_normal((N_PAIRS, hyper.z_dim))),
    )


@dataclass
class Model:
    hyper: ModelHyper
    vocab: Vocabulary
    params: ModelParams


# ----- encoders -----


def encode_query(tape: Tape, params: ModelParams, char_ids: list[int]) -> list[Tensor]:
    """BiLSTM over character embeddings; h_i = [forward_i; backward_i].

    Both directions start from zero states.
    """
    d_h = params.lstm_fwd_b.v.shape[0] // 4
    xs = [tape.lookup_row(params.e_c, cid) for cid in char_ids]
    h, c = Tensor(np.zeros(d_h)), Tensor(np.zeros(d_h))
    fwd = []
    for x in xs:
        h, c = tape.lstm_cell(x, h, c, params.lstm_fwd_w, params.lstm_fwd_b)
        fwd.append(h)
    h, c = Tensor(np.zeros(d_h)), Tensor(np.zeros(d_h))
    bwd: list[Tensor | None] = [None] * len(xs)
    for i in range(len(xs) - 1, -1, -1):
        h, c = tape.lstm_cell(xs[i], h, c, params.lstm_bwd_w, params.lstm_bwd_b)
        bwd[i] = h
    return [tape.concat([fwd[i], bwd[i]]) for i in range(len(xs))]


def encode_side(tape: Tape, side: SideFeature, params: ModelParams) -> Tensor:
    """tanh(W [mean window embeddings; distance embedding])."""
    ec = tape.mean_rows(params.e_c, side.window_ids)
    ed = tape.lookup_row(params.e_d, side.distance - 1)
    return tape.tanh(tape.matvec(params.w_proj, tape.concat([ec, ed])))


def encode_bag(
    tape: Tape, bag: FeatureBag, h_i: Tensor, params: ModelParams
) -> tuple[Tensor, np.ndarray]:
    """Attention over the bag: score_j = tanh(f_j^T U) . h_i.

    Returns the weighted feature sum b_i and the attention weights.  An empty
    bag contributes a zero vector and no weights.
    """
    d_g = params.w_proj.v.shape[0]
    if not bag.items:
        return Tensor(np.zeros(2 * d_g)), np.zeros(0)
    fs = []
    for left, right in bag.items:
        fs.append(tape.concat([encode_side(tape, left, params), encode_side(tape, right, params)]))
    return _attend(tape, fs, h_i, params.u)


def _attend(
    tape: Tape, fs: list[Tensor], h: Tensor, u: Tensor
) -> tuple[Tensor, np.ndarray]:
    """Fused attention node: softmax over per-item scores, then weighted sum."""
    if u.v.shape != (fs[0].v.shape[0], h.v.shape[0]):
        raise ShapeMismatch(f"attention: U {u.v.shape} vs f {fs[0].v.shape} h {h.v.shape}")
    f_mat = np.stack([f.v for f in fs])
    act = np.tanh(f_mat @ u.v)
    scores = act @ h.v
    e = np.exp(scores - scores.max())
    alphas = e / e.sum()
    out = Tensor(alphas @ f_mat)

    def bk():
        if out.g is None:
            return
        d_alpha = f_mat @ out.g
        d_score = alphas * (d_alpha - alphas @ d_alpha)
        d_act = np.outer(d_score, h.v)
        d_pre = d_act * (1.0 - act * act)
        accumulate(h, act.T @ d_score)
        accumulate(u, f_mat.T @ d_pre)
        d_f = np.outer(alphas, out.g) + d_pre @ u.v.T
        for j, f in enumerate(fs):
            accumulate(f, d_f[j])

    tape.record(bk)
    return out, alphas


def compose_z(tape: Tape, variant: str, h_i: Tensor, b_i: Tensor | None) -> Tensor:
    if variant == "q":
        return h_i
    if variant == "c":
        return b_i
    if variant == "qc":
        return tape.concat([h_i, b_i])
    raise ValueError(f"unknown variant {variant!r}")


def forward_z(
    tape: Tape,
    params: ModelParams,
    variant: str,
    char_ids: list[int],
    bags: list[FeatureBag] | None,
) -> list[Tensor]:
    """Per-character CRF inputs for the given variant."""
    hs = encode_query(tape, params, char_ids)
    if variant == "q":
        return hs
    if bags is None or len(bags) != len(char_ids):
        raise LengthMismatch(
            f"variant {variant!r} needs one feature bag per character"
            f" ({0 if bags is None else len(bags)} for {len(char_ids)} chars)"
        )
    zs = []
    for h_i, bag in zip(hs, bags):
        b_i, _ = encode_bag(tape, bag, h_i, params)
        zs.append(compose_z(tape, variant, h_i, b_i))
    return zs


# ----- CRF -----


def _pair_scores(zs: list[Tensor], w_crf: Tensor) -> tuple[np.ndarray, np.ndarray]:
    if not zs:
        raise LengthMismatch("empty input sequence")
    z_mat = np.stack([z.v for z in zs])
    if w_crf.v.shape != (N_PAIRS, z_mat.shape[1]):
        raise ShapeMismatch(f"crf weights {w_crf.v.shape} vs z dim {z_mat.shape[1]}")
    return z_mat, z_mat @ w_crf.v.T


def _log_norm(scores: np.ndarray) -> tuple[float, np.ndarray]:
    """Log partition and per-position pair marginals, both in one pass.

    scores[i, p] is the pair score at position i; marginals[i, p] is the
    posterior probability that the pair p is used at i, so each row sums to 1.
    """
    n = scores.shape[0]
    alphas = np.empty((n, 2))
    alphas[0] = scores[0, PAIR_START_B:]
    for i in range(1, n):
        trans = scores[i, :4].reshape(2, 2)
        m = alphas[i - 1][:, None] + trans
        top = m.max(axis=0)
        alphas[i] = top + np.log(np.exp(m - top).sum(axis=0))
    top = alphas[-1].max()
    log_z = top + np.log(np.exp(alphas[-1] - top).sum())

    betas = np.zeros((n, 2))
    for i in range(n - 1, 0, -1):
        trans = scores[i, :4].reshape(2, 2)
        m = trans + betas[i][None, :]
        top = m.max(axis=1)
        betas[i - 1] = top + np.log(np.exp(m - top[:, None]).sum(axis=1))

    marg = np.zeros((n, N_PAIRS))
    marg[0, PAIR_START_B:] = np.exp(scores[0, PAIR_START_B:] + betas[0] - log_z)
    for i in range(1, n):
        pij = alphas[i - 1][:, None] + scores[i, :4].reshape(2, 2) + betas[i][None, :] - log_z
        marg[i, :4] = np.exp(pij).reshape(4)
    return float(log_z), marg


def crf_log_partition(tape: Tape, zs: list[Tensor], w_crf: Tensor) -> Tensor:
    """log sum over all label sequences of exp(sum of pair scores)."""
    z_mat, scores = _pair_scores(zs, w_crf)
    log_z, marg = _log_norm(scores)
    out = Tensor(log_z)

    def bk():
        if out.g is None:
            return
        g = float(out.g)
        accumulate(w_crf, g * (marg.T @ z_mat))
        d_z = marg @ w_crf.v
        for i, z in enumerate(zs):
            accumulate(z, g * d_z[i])

    tape.record(bk)
    return out


def _gold_pairs(label_ids: list[int], n: int) -> np.ndarray:
    onehot = np.zeros((n, N_PAIRS))
    prev: int | None = None
    for i, y in enumerate(label_ids):
        onehot[i, pair_of(prev, y)] = 1.0
        prev = y
    return onehot


def crf_log_likelihood(
    tape: Tape, zs: list[Tensor], label_ids: list[int], w_crf: Tensor
) -> Tensor:
    """Gold path score minus the log partition."""
    if len(label_ids) != len(zs):
        raise LengthMismatch(f"{len(label_ids)} labels for {len(zs)} positions")
    z_mat, scores = _pair_scores(zs, w_crf)
    log_z, marg = _log_norm(scores)
    gold = _gold_pairs(label_ids, len(zs))
    out = Tensor(float((scores * gold).sum()) - log_z)
    diff = gold - marg

    def bk():
        if out.g is None:
            return
        g = float(out.g)
        accumulate(w_crf, g * (diff.T @ z_mat))
        d_z = diff @ w_crf.v
        for i, z in enumerate(zs):
            accumulate(z, g * d_z[i])

    tape.record(bk)
    return out


def viterbi_decode(
    z_mat: np.ndarray, w_crf: np.ndarray, constrain_first_b: bool = True
) -> list[int]:
    """Highest-scoring label sequence; ties prefer B at every choice point."""
    scores = z_mat @ w_crf.T
    n = scores.shape[0]
    delta = scores[0, PAIR_START_B:].copy()
    if constrain_first_b:
        delta[I_ID] = -np.inf
    pointers = np.empty((n - 1, 2), dtype=np.intp) if n > 1 else None
    for i in range(1, n):
        cand = delta[:, None] + scores[i, :4].reshape(2, 2)
        # argmax scans B first, so equal scores resolve to B
        best_prev = cand.argmax(axis=0)
        pointers[i - 1] = best_prev
        delta = cand[best_prev, [0, 1]]
    y = int(delta.argmax())
    path = [y]
    for i in range(n - 2, -1, -1):
        y = int(pointers[i][y])
        path.append(y)
    path.reverse()
    return path


def viterbi_score(z_mat: np.ndarray, w_crf: np.ndarray, path: list[int]) -> float:
    scores = z_mat @ w_crf.T
    prev: int | None = None
    total = 0.0
    for i, y in enumerate(path):
        total += scores[i, pair_of(prev, y)]
        prev = y
    return total


# ----- inference -----

LABEL_CHARS = "BI"


def predict(model: Model, query: str, bags: list[FeatureBag] | None = None) -> list[str]:
    """Segment a query; bags are required for the c/qc variants."""
    if not query:
        return []
    char_ids = model.vocab.encode(query)
    tape = Tape()
    zs = forward_z(tape, model.params, model.hyper.variant, char_ids, bags)
    z_mat = np.stack([z.v for z in zs])
    path = viterbi_decode(z_mat, model.params.w_crf.v, constrain_first_b=True)
    return decode_labels(query, "".join(LABEL_CHARS[y] for y in path))


# ----- serialization -----

_VARIANT_CODES = {"q": 0.0, "c": 1.0, "qc": 2.0}


def save_model(model: Model, path: str) -> None:
    """Versioned container: magic, section count, then named sections holding
    row-major float64 data (name, shape, values, all little-endian)."""
    hyper = model.hyper
    sections: list[tuple[str, np.ndarray]] = [
        (
            "hparams",
            np.array(
                [
                    hyper.d_c,
                    hyper.d_h,
                    hyper.d_d,
                    hyper.d_g,
                    hyper.t,
                    hyper.k_max,
                    hyper.context_cap,
                    _VARIANT_CODES[hyper.variant],
                ]
            ),
        ),
        ("vocab_codepoints", np.array([float(ord(c)) for c in model.vocab.chars])),
    ]
    sections += [(name, t.v) for name, t in model.params.named()]
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<I", len(sections)))
        for name, arr in sections:
            raw = name.encode("utf-8")
            fh.write(struct.pack("<I", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<I", arr.ndim))
            fh.write(struct.pack(f"<{arr.ndim}I", *arr.shape))
            fh.write(np.ascontiguousarray(arr, dtype="<f8").tobytes())


def load_model(path: str) -> Model:
    with open(path, "rb") as fh:
        blob = fh.read()
    if blob[: len(MODEL_MAGIC)] != MODEL_MAGIC:
        raise ParseError(f"{path}: bad model magic")
    pos = len(MODEL_MAGIC)

    def take(fmt: str):
        nonlocal pos
        size = struct.calcsize(fmt)
        if pos + size > len(blob):
            raise ParseError(f"{path}: truncated model file")
        vals = struct.unpack_from(fmt, blob, pos)
        pos += size
        return vals

    sections: dict[str, np.ndarray] = {}
    (n_sections,) = take("<I")
    for _ in range(n_sections):
        (name_len,) = take("<I")
        name = blob[pos : pos + name_len].decode("utf-8")
        pos += name_len
        (ndim,) = take("<I")
        shape = take(f"<{ndim}I")
        count = int(np.prod(shape)) if ndim else 1
        if pos + 8 * count > len(blob):
            raise ParseError(f"{path}: truncated model file")
        data = np.frombuffer(blob, dtype="<f8", count=count, offset=pos).copy()
        pos += 8 * count
        sections[name] = data.reshape(shape)

    try:
        hp = sections["hparams"]
        codes = {v: k for k, v in _VARIANT_CODES.items()}
        hyper = ModelHyper(
            d_c=int(hp[0]),
            d_h=int(hp[1]),
            d_d=int(hp[2]),
            d_g=int(hp[3]),
            t=int(hp[4]),
            k_max=int(hp[5]),
            context_cap=int(hp[6]),
            variant=codes[float(hp[7])],
        )
        vocab = Vocabulary([chr(int(cp)) for cp in sections["vocab_codepoints"]])
        params = ModelParams(
            **{name: Tensor(sections[name]) for name in (
                "e_c", "e_d", "lstm_fwd_w", "lstm_fwd_b", "lstm_bwd_w",
                "lstm_bwd_b", "w_proj", "u", "w_crf",
            )}
        )
    except KeyError as exc:
        raise ParseError(f"{path}: missing model section {exc}") from exc
    if params.e_c.v.shape != (vocab.size, hyper.d_c):
        raise ParseError(f"{path}: embedding shape does not match the stored vocabulary")
    return Model(hyper, vocab, params)


def clone_values(params: ModelParams) -> dict[str, np.ndarray]:
    return {name: t.v.copy() for name, t in params.named()}


def restore_values(params: ModelParams, snapshot: dict[str, np.ndarray]) -> None:
    for name, t in params.named():
        t.v = snapshot[name].copy()
