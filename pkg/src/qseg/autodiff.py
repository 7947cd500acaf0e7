"""Reverse-mode automatic differentiation on a recorded tape.

Dense float64 tensors only: scalars are 0-d arrays, vectors 1-d, matrices 2-d.
Every operation appends a backward closure to the tape; since an operation can
only consume tensors that already exist, replaying the tape in reverse visits
each node after all of its consumers, which is the whole scheduling story.
Dimensions in this project are tiny, so clarity and exact gradients win over
throughput tricks.

A tape is single-use: build a graph, call backward once, throw it away.
Parameter (leaf) tensors live across tapes and keep accumulating into .g until
the caller resets them, which is what minibatch training wants.
"""

from __future__ import annotations

import numpy as np


class ShapeMismatch(ValueError):
    pass


class NonScalarRoot(ValueError):
    pass


class Tensor:
    """A dense float64 value plus its accumulated gradient (None until used)."""

    __slots__ = ("v", "g")

    def __init__(self, values):
        self.v = np.asarray(values, dtype=np.float64)
        self.g = None

    @property
    def shape(self) -> tuple[int, ...]:
        return self.v.shape

    def zero_grad(self) -> None:
        self.g = None

    def __repr__(self) -> str:
        return f"Tensor(shape={self.v.shape})"


def accumulate(t: Tensor, g) -> None:
    """Add a gradient contribution to t.

    The first contribution is copied so that later in-place adds can never
    alias an array still owned by another node's closure.
    """
    if t.g is None:
        t.g = np.array(g, dtype=np.float64)
    else:
        t.g += g


def grad_buffer(t: Tensor) -> np.ndarray:
    """Gradient array for scatter-style accumulation (allocated on demand)."""
    if t.g is None:
        t.g = np.zeros_like(t.v)
    return t.g


def _want(t: Tensor, ndim: int, op: str) -> None:
    if t.v.ndim != ndim:
        raise ShapeMismatch(f"{op}: expected {ndim}-d tensor, got shape {t.v.shape}")


def _same(a: Tensor, b: Tensor, op: str) -> None:
    if a.v.shape != b.v.shape:
        raise ShapeMismatch(f"{op}: shapes {a.v.shape} and {b.v.shape} differ")


class Tape:
    """Append-only operation record; backward replays it newest-first."""

    __slots__ = ("_ops",)

    def __init__(self):
        self._ops: list = []

    def record(self, backward_fn) -> None:
        """Register a custom node; backward_fn reads output .g, feeds inputs."""
        self._ops.append(backward_fn)

    def __len__(self) -> int:
        return len(self._ops)

    def backward(self, root: Tensor, seed: float = 1.0) -> None:
        if root.v.shape != ():
            raise NonScalarRoot(f"root has shape {root.v.shape}, expected a scalar")
        root.g = np.asarray(seed, dtype=np.float64)
        for fn in reversed(self._ops):
            fn()

    # ----- elementwise -----

    def add(self, a: Tensor, b: Tensor) -> Tensor:
        _same(a, b, "add")
        out = Tensor(a.v + b.v)

        def bk():
            if out.g is not None:
                accumulate(a, out.g)
                accumulate(b, out.g)

        self._ops.append(bk)
        return out

    def sub(self, a: Tensor, b: Tensor) -> Tensor:
        _same(a, b, "sub")
        out = Tensor(a.v - b.v)

        def bk():
            if out.g is not None:
                accumulate(a, out.g)
                accumulate(b, -out.g)

        self._ops.append(bk)
        return out

    def mul(self, a: Tensor, b: Tensor) -> Tensor:
        """Elementwise product of same-shape tensors."""
        _same(a, b, "mul")
        out = Tensor(a.v * b.v)

        def bk():
            if out.g is not None:
                accumulate(a, out.g * b.v)
                accumulate(b, out.g * a.v)

        self._ops.append(bk)
        return out

    def neg(self, a: Tensor) -> Tensor:
        out = Tensor(-a.v)

        def bk():
            if out.g is not None:
                accumulate(a, -out.g)

        self._ops.append(bk)
        return out

    def scale(self, a: Tensor, c: float) -> Tensor:
        """Multiply by a plain Python constant (no gradient for c)."""
        out = Tensor(a.v * c)

        def bk():
            if out.g is not None:
                accumulate(a, out.g * c)

        self._ops.append(bk)
        return out

    def smul(self, s: Tensor, a: Tensor) -> Tensor:
        """Scalar tensor times arbitrary tensor."""
        _want(s, 0, "smul")
        out = Tensor(s.v * a.v)

        def bk():
            if out.g is not None:
                accumulate(s, np.sum(out.g * a.v))
                accumulate(a, out.g * s.v)

        self._ops.append(bk)
        return out

    def tanh(self, a: Tensor) -> Tensor:
        out = Tensor(np.tanh(a.v))

        def bk():
            if out.g is not None:
                accumulate(a, out.g * (1.0 - out.v * out.v))

        self._ops.append(bk)
        return out

    def sigmoid(self, a: Tensor) -> Tensor:
        out = Tensor(_sigmoid(a.v))

        def bk():
            if out.g is not None:
                accumulate(a, out.g * out.v * (1.0 - out.v))

        self._ops.append(bk)
        return out

    def exp(self, a: Tensor) -> Tensor:
        out = Tensor(np.exp(a.v))

        def bk():
            if out.g is not None:
                accumulate(a, out.g * out.v)

        self._ops.append(bk)
        return out

    def log(self, a: Tensor) -> Tensor:
        out = Tensor(np.log(a.v))

        def bk():
            if out.g is not None:
                accumulate(a, out.g / a.v)

        self._ops.append(bk)
        return out

    # ----- linear algebra -----

    def matvec(self, m: Tensor, v: Tensor) -> Tensor:
        _want(m, 2, "matvec")
        _want(v, 1, "matvec")
        if m.v.shape[1] != v.v.shape[0]:
            raise ShapeMismatch(f"matvec: {m.v.shape} @ {v.v.shape}")
        out = Tensor(m.v @ v.v)

        def bk():
            if out.g is not None:
                accumulate(m, np.outer(out.g, v.v))
                accumulate(v, m.v.T @ out.g)

        self._ops.append(bk)
        return out

    def vecmat(self, v: Tensor, m: Tensor) -> Tensor:
        """Row vector times matrix: (n,) @ (n, k) -> (k,)."""
        _want(v, 1, "vecmat")
        _want(m, 2, "vecmat")
        if v.v.shape[0] != m.v.shape[0]:
            raise ShapeMismatch(f"vecmat: {v.v.shape} @ {m.v.shape}")
        out = Tensor(v.v @ m.v)

        def bk():
            if out.g is not None:
                accumulate(v, m.v @ out.g)
                accumulate(m, np.outer(v.v, out.g))

        self._ops.append(bk)
        return out

    def dot(self, a: Tensor, b: Tensor) -> Tensor:
        _want(a, 1, "dot")
        _same(a, b, "dot")
        out = Tensor(np.dot(a.v, b.v))

        def bk():
            if out.g is not None:
                accumulate(a, out.g * b.v)
                accumulate(b, out.g * a.v)

        self._ops.append(bk)
        return out

    # ----- shape manipulation -----

    def concat(self, parts: list[Tensor]) -> Tensor:
        for p in parts:
            _want(p, 1, "concat")
        out = Tensor(np.concatenate([p.v for p in parts]))
        sizes = [p.v.shape[0] for p in parts]

        def bk():
            if out.g is not None:
                pos = 0
                for p, size in zip(parts, sizes):
                    accumulate(p, out.g[pos : pos + size])
                    pos += size

        self._ops.append(bk)
        return out

    def stack(self, scalars: list[Tensor]) -> Tensor:
        """Pack scalar tensors into a vector."""
        for s in scalars:
            _want(s, 0, "stack")
        out = Tensor(np.array([s.v for s in scalars]))

        def bk():
            if out.g is not None:
                for k, s in enumerate(scalars):
                    accumulate(s, out.g[k])

        self._ops.append(bk)
        return out

    def lookup_row(self, m: Tensor, i: int) -> Tensor:
        _want(m, 2, "lookup_row")
        out = Tensor(m.v[i].copy())

        def bk():
            if out.g is not None:
                grad_buffer(m)[i] += out.g

        self._ops.append(bk)
        return out

    def mean_rows(self, m: Tensor, ids) -> Tensor:
        """Mean of the selected rows; repeated ids accumulate correctly."""
        _want(m, 2, "mean_rows")
        idx = list(ids)
        if not idx:
            raise ShapeMismatch("mean_rows: empty id list")
        out = Tensor(m.v[idx].mean(axis=0))

        def bk():
            if out.g is not None:
                np.add.at(grad_buffer(m), idx, out.g / len(idx))

        self._ops.append(bk)
        return out

    # ----- reductions -----

    def sum(self, a: Tensor) -> Tensor:
        out = Tensor(a.v.sum())

        def bk():
            if out.g is not None:
                accumulate(a, np.broadcast_to(out.g, a.v.shape))

        self._ops.append(bk)
        return out

    def softmax(self, a: Tensor) -> Tensor:
        _want(a, 1, "softmax")
        out = Tensor(_softmax(a.v))

        def bk():
            if out.g is not None:
                accumulate(a, out.v * (out.g - np.dot(out.g, out.v)))

        self._ops.append(bk)
        return out

    def logsumexp(self, a: Tensor) -> Tensor:
        """Stable log(sum(exp(a))); gradient is softmax(a)."""
        _want(a, 1, "logsumexp")
        m = a.v.max()
        out = Tensor(m + np.log(np.exp(a.v - m).sum()))
        soft = np.exp(a.v - out.v)

        def bk():
            if out.g is not None:
                accumulate(a, out.g * soft)

        self._ops.append(bk)
        return out

    # ----- recurrent cell -----

    def lstm_cell(
        self, x: Tensor, h_prev: Tensor, c_prev: Tensor, w: Tensor, b: Tensor
    ) -> tuple[Tensor, Tensor]:
        """Standard LSTM step with fused gates.

        w has shape (4H, D+H) and b shape (4H,), gate order (input, forget,
        output, candidate) over the concatenated [x; h_prev].
        """
        _want(x, 1, "lstm_cell")
        hidden = h_prev.v.shape[0]
        if w.v.shape != (4 * hidden, x.v.shape[0] + hidden):
            raise ShapeMismatch(
                f"lstm_cell: weights {w.v.shape} do not fit input {x.v.shape}"
                f" and hidden {h_prev.v.shape}"
            )
        if b.v.shape != (4 * hidden,):
            raise ShapeMismatch(f"lstm_cell: bias shape {b.v.shape}")
        xh = np.concatenate([x.v, h_prev.v])
        pre = w.v @ xh + b.v
        gi = _sigmoid(pre[:hidden])
        gf = _sigmoid(pre[hidden : 2 * hidden])
        go = _sigmoid(pre[2 * hidden : 3 * hidden])
        gc = np.tanh(pre[3 * hidden :])
        c = Tensor(gf * c_prev.v + gi * gc)
        tc = np.tanh(c.v)
        h = Tensor(go * tc)

        def bk():
            gh, gc_out = h.g, c.g
            if gh is None and gc_out is None:
                return
            if gh is None:
                d_o = np.zeros(hidden)
                d_c = gc_out.copy()
            else:
                d_o = gh * tc
                d_c = gh * go * (1.0 - tc * tc)
                if gc_out is not None:
                    d_c += gc_out
            d_pre = np.empty(4 * hidden)
            d_pre[:hidden] = (d_c * gc) * gi * (1.0 - gi)
            d_pre[hidden : 2 * hidden] = (d_c * c_prev.v) * gf * (1.0 - gf)
            d_pre[2 * hidden : 3 * hidden] = d_o * go * (1.0 - go)
            d_pre[3 * hidden :] = (d_c * gi) * (1.0 - gc * gc)
            accumulate(w, np.outer(d_pre, xh))
            accumulate(b, d_pre)
            d_xh = w.v.T @ d_pre
            accumulate(x, d_xh[: x.v.shape[0]])
            accumulate(h_prev, d_xh[x.v.shape[0] :])
            accumulate(c_prev, d_c * gf)

        self._ops.append(bk)
        return h, c


def _sigmoid(x: np.ndarray) -> np.ndarray:
    # exp only on non-positive inputs, so it never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _softmax(x: np.ndarray) -> np.ndarray:
    e = np.exp(x - x.max())
    return e / e.sum()
