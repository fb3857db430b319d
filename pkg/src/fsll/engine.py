"""Reverse-mode differentiation over float64 numpy arrays.

A GradTape records every operation as a Node in creation order, which is
already a topological order of the computation graph. backward() walks the
recorded list once in reverse and accumulates gradients into Node.grad.

Conventions at non-differentiable points (kinks resolve to the zero-side
subgradient): relu'(0) = 0, hinge'(0) = 0, d|x|/dx at 0 = 0, and the
gradient of a euclidean distance at coincident points is 0.

Ops are fused at the granularity the training loops need (dense layer,
softmax cross-entropy, triplet hinge, ...) so tapes stay short. Leaf nodes
do not copy their arrays: a leaf reads whatever the caller's array holds at
recording time, and a tape must be rebuilt after parameters are mutated.
"""

from __future__ import annotations

from typing import Callable, Sequence

import numpy as np

from .errors import DegenerateInputError, ShapeError

Array = np.ndarray


def _as_f64(x) -> Array:
    return np.asarray(x, dtype=np.float64)


class Node:
    """One recorded value. ``grad`` is populated by GradTape.backward and is
    None for nodes the loss does not depend on (read it via ``grad_of``)."""

    __slots__ = ("tape", "value", "parents", "grad", "_backward", "index")

    def __init__(self, tape: "GradTape", value: Array, parents: tuple,
                 backward: Callable | None, index: int):
        self.tape = tape
        self.value = value
        self.parents = parents
        self.grad: Array | None = None
        self._backward = backward
        self.index = index

    @property
    def shape(self):
        return self.value.shape

    def __float__(self) -> float:
        if self.value.shape != ():
            raise ShapeError(f"cannot take float() of node with shape {self.value.shape}")
        return float(self.value)

    def __repr__(self):
        return f"Node(shape={self.value.shape}, index={self.index})"


class GradTape:
    """Flat record of nodes in creation order."""

    def __init__(self):
        self._nodes: list[Node] = []

    def __len__(self) -> int:
        return len(self._nodes)

    def leaf(self, value) -> Node:
        """Record an input node. The array is shared, not copied; do not
        mutate it while this tape is still in use."""
        return self._record(_as_f64(value), (), None)

    def _record(self, value: Array, parents: tuple, backward) -> Node:
        node = Node(self, value, parents, backward, len(self._nodes))
        self._nodes.append(node)
        return node

    def backward(self, root: Node) -> None:
        """Accumulate d(root)/d(node) into node.grad for every ancestor of
        ``root``. The root must be a scalar (shape ()). Grads are reset
        first, so calling backward twice does not double-count."""
        if root.tape is not self:
            raise ValueError("root node was recorded on a different tape")
        if root.value.shape != ():
            raise ShapeError(f"backward root must be scalar, got shape {root.value.shape}")
        for node in self._nodes:
            node.grad = None
        root.grad = np.ones((), dtype=np.float64)
        for node in self._nodes[root.index::-1]:
            if node.grad is None or node._backward is None:
                continue
            contributions = node._backward(node.grad)
            for parent, g in zip(node.parents, contributions):
                if g is None:
                    continue
                if parent.grad is None:
                    parent.grad = g.copy()
                else:
                    parent.grad += g


def grad_of(node: Node) -> Array:
    """Gradient of the last backward() root w.r.t. ``node``; zeros if the
    root did not depend on it."""
    if node.grad is None:
        return np.zeros_like(node.value)
    return node.grad


def _tape_of(*args) -> GradTape:
    tape = None
    for a in args:
        if isinstance(a, Node):
            if tape is None:
                tape = a.tape
            elif a.tape is not tape:
                raise ValueError("operands live on different tapes")
    if tape is None:
        tape = GradTape()
    return tape


def _lift(tape: GradTape, x) -> Node:
    if isinstance(x, Node):
        return x
    return tape.leaf(x)


# ---------------------------------------------------------------------------
# plain (tape-free) vector helpers

def euclidean_distance(a, b) -> float:
    """||a - b||_2 for two equal-length 1-d vectors."""
    a = _as_f64(a)
    b = _as_f64(b)
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise ShapeError(f"euclidean_distance needs equal-length vectors, got {a.shape} and {b.shape}")
    return float(np.sqrt(((a - b) ** 2).sum()))


def cosine_similarity(a, b) -> float:
    """cos(a, b) in [-1, 1]. Raises DegenerateInputError on zero-norm input."""
    a = _as_f64(a)
    b = _as_f64(b)
    if a.ndim != 1 or b.ndim != 1 or a.shape != b.shape:
        raise ShapeError(f"cosine_similarity needs equal-length vectors, got {a.shape} and {b.shape}")
    na = float(np.sqrt((a * a).sum()))
    nb = float(np.sqrt((b * b).sum()))
    if na == 0.0 or nb == 0.0:
        raise DegenerateInputError("cosine similarity of a zero-norm vector is undefined")
    c = float((a * b).sum()) / (na * nb)
    return min(1.0, max(-1.0, c))


# ---------------------------------------------------------------------------
# recorded ops

def dense_forward(x, weights, bias) -> Node:
    """x @ weights + bias for a batch: x (n, i), weights (i, o), bias (o,)."""
    tape = _tape_of(x, weights, bias)
    x, weights, bias = _lift(tape, x), _lift(tape, weights), _lift(tape, bias)
    xv, wv, bv = x.value, weights.value, bias.value
    if xv.ndim != 2 or wv.ndim != 2 or bv.ndim != 1:
        raise ShapeError(f"dense_forward expects 2-d input, 2-d weights, 1-d bias; "
                         f"got {xv.shape}, {wv.shape}, {bv.shape}")
    if xv.shape[1] != wv.shape[0] or wv.shape[1] != bv.shape[0]:
        raise ShapeError(f"dense_forward dimension mismatch: input {xv.shape}, "
                         f"weights {wv.shape}, bias {bv.shape}")
    value = xv @ wv + bv

    def backward(g):
        return g @ wv.T, xv.T @ g, g.sum(axis=0)

    return tape._record(value, (x, weights, bias), backward)


def relu(x) -> Node:
    tape = _tape_of(x)
    x = _lift(tape, x)
    xv = x.value
    value = np.maximum(xv, 0.0)

    def backward(g):
        return (g * (xv > 0.0),)

    return tape._record(value, (x,), backward)


def softmax_cross_entropy(logits, labels) -> Node:
    """Mean negative log-softmax-likelihood of integer ``labels`` under
    ``logits`` (n, c). Stabilised by row-max subtraction."""
    tape = _tape_of(logits)
    logits = _lift(tape, logits)
    lv = logits.value
    if lv.ndim != 2:
        raise ShapeError(f"softmax_cross_entropy expects 2-d logits, got {lv.shape}")
    n, c = lv.shape
    if n == 0:
        raise ShapeError("softmax_cross_entropy on an empty batch")
    labels = np.asarray(labels)
    if labels.shape != (n,):
        raise ShapeError(f"labels shape {labels.shape} does not match batch size {n}")
    if not np.issubdtype(labels.dtype, np.integer):
        raise ValueError("labels must be integers")
    if labels.min() < 0 or labels.max() >= c:
        raise ValueError(f"label out of range [0, {c})")

    z = lv - lv.max(axis=1, keepdims=True)
    expz = np.exp(z)
    sumexp = expz.sum(axis=1, keepdims=True)
    log_probs = z - np.log(sumexp)
    value = np.float64(-log_probs[np.arange(n), labels].mean())
    probs = expz / sumexp

    def backward(g):
        gl = probs.copy()
        gl[np.arange(n), labels] -= 1.0
        gl *= float(g) / n
        return (gl,)

    return tape._record(np.asarray(value), (logits,), backward)


def euclidean(a, b) -> Node:
    """Recorded ||a - b||_2 of two 1-d vectors. Zero gradient at a == b."""
    tape = _tape_of(a, b)
    a, b = _lift(tape, a), _lift(tape, b)
    av, bv = a.value, b.value
    if av.ndim != 1 or bv.ndim != 1 or av.shape != bv.shape:
        raise ShapeError(f"euclidean needs equal-length vectors, got {av.shape} and {bv.shape}")
    diff = av - bv
    d = float(np.sqrt((diff * diff).sum()))

    def backward(g):
        if d == 0.0:
            z = np.zeros_like(diff)
            return z, z.copy()
        ga = (float(g) / d) * diff
        return ga, -ga

    return tape._record(np.asarray(np.float64(d)), (a, b), backward)


def cosine(a, b) -> Node:
    """Recorded cosine similarity of two 1-d vectors."""
    tape = _tape_of(a, b)
    a, b = _lift(tape, a), _lift(tape, b)
    av, bv = a.value, b.value
    if av.ndim != 1 or bv.ndim != 1 or av.shape != bv.shape:
        raise ShapeError(f"cosine needs equal-length vectors, got {av.shape} and {bv.shape}")
    na = float(np.sqrt((av * av).sum()))
    nb = float(np.sqrt((bv * bv).sum()))
    if na == 0.0 or nb == 0.0:
        raise DegenerateInputError("cosine of a zero-norm vector is undefined")
    raw = float((av * bv).sum()) / (na * nb)
    value = min(1.0, max(-1.0, raw))

    def backward(g):
        ga = float(g) * (bv / (na * nb) - raw * av / (na * na))
        gb = float(g) * (av / (na * nb) - raw * bv / (nb * nb))
        return ga, gb

    return tape._record(np.asarray(np.float64(value)), (a, b), backward)


def triplet(anchor, positive, negative, margin: float = 0.0) -> Node:
    """Hinge max(d(a,p) - d(a,n) + margin, 0) over 1-d feature vectors.
    Zero gradient when the hinge is inactive or exactly at the boundary."""
    if margin < 0.0:
        raise ValueError("triplet margin must be >= 0")
    tape = _tape_of(anchor, positive, negative)
    a, p, n = _lift(tape, anchor), _lift(tape, positive), _lift(tape, negative)
    av, pv, nv = a.value, p.value, n.value
    for v in (pv, nv):
        if av.ndim != 1 or v.shape != av.shape:
            raise ShapeError("triplet expects three equal-length vectors")
    dp_vec = av - pv
    dn_vec = av - nv
    dp = float(np.sqrt((dp_vec * dp_vec).sum()))
    dn = float(np.sqrt((dn_vec * dn_vec).sum()))
    value = dp - dn + margin
    active = value > 0.0
    if not active:
        value = 0.0

    def backward(g):
        if not active:
            z = np.zeros_like(av)
            return z, z.copy(), z.copy()
        up = dp_vec / dp if dp > 0.0 else np.zeros_like(av)
        un = dn_vec / dn if dn > 0.0 else np.zeros_like(av)
        gf = float(g)
        return gf * (up - un), -gf * up, gf * un

    return tape._record(np.asarray(np.float64(value)), (a, p, n), backward)


def row(x: Node, i: int) -> Node:
    """Single row of a 2-d node as a 1-d node."""
    if not isinstance(x, Node):
        raise TypeError("row expects a recorded node")
    if x.value.ndim != 2:
        raise ShapeError(f"row expects a 2-d node, got shape {x.value.shape}")
    n = x.value.shape[0]
    if not 0 <= i < n:
        raise IndexError(f"row {i} out of range for {n} rows")
    value = x.value[i].copy()

    def backward(g):
        gx = np.zeros_like(x.value)
        gx[i] = g
        return (gx,)

    return x.tape._record(value, (x,), backward)


def mean_rows(x: Node, indices) -> Node:
    """Mean of selected rows of a 2-d node; gradients flow back to each
    selected row."""
    if not isinstance(x, Node):
        raise TypeError("mean_rows expects a recorded node")
    if x.value.ndim != 2:
        raise ShapeError(f"mean_rows expects a 2-d node, got shape {x.value.shape}")
    idx = np.asarray(indices, dtype=np.int64)
    if idx.ndim != 1 or idx.size == 0:
        raise ShapeError("mean_rows needs a non-empty 1-d index list")
    n = x.value.shape[0]
    if idx.min() < 0 or idx.max() >= n:
        raise IndexError(f"row index out of range for {n} rows")
    value = x.value[idx].mean(axis=0)
    k = idx.size

    def backward(g):
        gx = np.zeros_like(x.value)
        np.add.at(gx, idx, g / k)
        return (gx,)

    return x.tape._record(value, (x,), backward)


def gather(x: Node, flat_offsets) -> Node:
    """Selected entries of a node by flat (row-major) offset, as a 1-d node."""
    if not isinstance(x, Node):
        raise TypeError("gather expects a recorded node")
    off = np.asarray(flat_offsets, dtype=np.int64)
    if off.ndim != 1:
        raise ShapeError("gather offsets must be 1-d")
    size = x.value.size
    if off.size and (off.min() < 0 or off.max() >= size):
        raise ValueError(f"offset outside parameter array of size {size}")
    flat = x.value.reshape(-1)
    value = flat[off]

    def backward(g):
        gx = np.zeros_like(x.value)
        np.add.at(gx.reshape(-1), off, g)
        return (gx,)

    return x.tape._record(value, (x,), backward)


def l1_anchor(x, target) -> Node:
    """sum(|x - target|) of a 1-d node against a constant anchor. The
    subgradient at equality is 0 (elementwise sign)."""
    tape = _tape_of(x)
    x = _lift(tape, x)
    t = _as_f64(target)
    if x.value.ndim != 1 or t.shape != x.value.shape:
        raise ShapeError(f"l1_anchor needs matching 1-d vectors, got {x.value.shape} and {t.shape}")
    diff = x.value - t
    value = np.asarray(np.float64(np.abs(diff).sum()))

    def backward(g):
        return (float(g) * np.sign(diff),)

    return tape._record(value, (x,), backward)


def add(a, b) -> Node:
    tape = _tape_of(a, b)
    a, b = _lift(tape, a), _lift(tape, b)
    if a.value.shape != b.value.shape:
        raise ShapeError(f"add shape mismatch: {a.value.shape} vs {b.value.shape}")
    value = a.value + b.value

    def backward(g):
        return g, g

    return tape._record(value, (a, b), backward)


def add_n(nodes: Sequence[Node]) -> Node:
    """Sum of same-shape nodes."""
    if len(nodes) == 0:
        raise ValueError("add_n of an empty list")
    if len(nodes) == 1:
        return nodes[0]
    tape = _tape_of(*nodes)
    lifted = [_lift(tape, n) for n in nodes]
    shape = lifted[0].value.shape
    for n in lifted[1:]:
        if n.value.shape != shape:
            raise ShapeError("add_n shape mismatch")
    value = lifted[0].value.copy()
    for n in lifted[1:]:
        value += n.value

    def backward(g):
        return tuple(g for _ in lifted)

    return tape._record(value, tuple(lifted), backward)


def scale(x, c: float) -> Node:
    tape = _tape_of(x)
    x = _lift(tape, x)
    c = float(c)
    value = x.value * c

    def backward(g):
        return (g * c,)

    return tape._record(value, (x,), backward)


# ---------------------------------------------------------------------------
# gradient verification

def finite_difference_check(build: Callable[[], tuple[Node, Sequence[Node]]],
                            params: Sequence[Array],
                            epsilon: float = 1e-6) -> float:
    """Worst relative disagreement between backward() gradients and central
    finite differences.

    ``build`` must construct a fresh tape, returning the scalar loss node and
    leaf nodes bound to the live arrays in ``params`` (same order). Entries
    of ``params`` are perturbed in place and restored. The relative error for
    one entry is |analytic - numeric| / max(1, |analytic|, |numeric|).
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    loss, param_nodes = build()
    if len(param_nodes) != len(params):
        raise ValueError("build() returned a different number of parameter nodes")
    loss.tape.backward(loss)
    analytic = [grad_of(p).copy() for p in param_nodes]

    worst = 0.0
    for arr, ana in zip(params, analytic):
        if arr.shape != ana.shape:
            raise ShapeError("parameter array and node shape mismatch")
        for j in range(arr.size):
            idx = np.unravel_index(j, arr.shape) if arr.ndim else ()
            orig = arr[idx]
            arr[idx] = orig + epsilon
            up = float(build()[0].value)
            arr[idx] = orig - epsilon
            down = float(build()[0].value)
            arr[idx] = orig
            numeric = (up - down) / (2.0 * epsilon)
            a = float(ana[idx])
            err = abs(a - numeric) / max(1.0, abs(a), abs(numeric))
            if err > worst:
                worst = err
    return worst
