"""
Differentiable kernels over dense double-precision matrices.

Every op computes its forward value eagerly and records an analytic backward
closure on the tape. ``Tape.backward`` replays the closures in reverse
recording order (a Wengert list), so a node's gradient is complete before it
is handed to the node's inputs. Nothing else is tracked: no graph object,
no operator overloading.

All values are 2-D ``float64`` arrays; scalars are 1x1.
"""

from collections.abc import Callable, Sequence

import numpy as np
import numpy.typing as npt

from chuk_grounding.errors import DimensionError, PreconditionError

FloatArray = npt.NDArray[np.float64]
IntArray = npt.NDArray[np.int64]

# Additive attention-mask sentinel for blocked positions.
MASKED = -np.inf

# Probabilities entering log terms are clamped to [PROB_CLAMP, 1 - PROB_CLAMP].
PROB_CLAMP = 1e-7


def as_matrix(value: npt.ArrayLike) -> FloatArray:
    """Coerce scalars, vectors and matrices to a 2-D float64 array."""
    arr = np.asarray(value, dtype=np.float64)
    if arr.ndim == 0:
        return arr.reshape(1, 1)
    if arr.ndim == 1:
        return arr.reshape(1, -1)
    if arr.ndim != 2:
        raise DimensionError(f"expected at most 2 dimensions, got shape {arr.shape}")
    return arr


class Node:
    """A matrix value on the tape with an optional gradient accumulator."""

    __slots__ = ("value", "grad", "requires_grad")

    def __init__(self, value: npt.ArrayLike, requires_grad: bool = True) -> None:
        self.value: FloatArray = as_matrix(value)
        self.grad: FloatArray | None = None
        self.requires_grad = requires_grad

    @property
    def shape(self) -> tuple[int, int]:
        return (int(self.value.shape[0]), int(self.value.shape[1]))

    @property
    def rows(self) -> int:
        return int(self.value.shape[0])

    @property
    def cols(self) -> int:
        return int(self.value.shape[1])

    def item(self) -> float:
        if self.value.size != 1:
            raise DimensionError(f"item() needs a 1x1 node, got {self.shape}")
        return float(self.value[0, 0])

    def accumulate(self, grad: FloatArray) -> None:
        if not self.requires_grad:
            return
        if grad.shape != self.value.shape:
            raise DimensionError(
                f"gradient shape {grad.shape} does not match value shape {self.value.shape}"
            )
        if self.grad is None:
            self.grad = np.array(grad, dtype=np.float64, copy=True)
        else:
            self.grad += grad


class Param(Node):
    """Trainable matrix with a gradient buffer of the same shape."""

    __slots__ = ("name", "frozen")

    def __init__(self, name: str, value: npt.ArrayLike, frozen: bool = False) -> None:
        super().__init__(np.array(as_matrix(value), copy=True), requires_grad=True)
        self.name = name
        self.frozen = frozen
        self.grad = np.zeros_like(self.value)

    def zero_grad(self) -> None:
        self.grad = np.zeros_like(self.value)

    def __repr__(self) -> str:
        return f"Param({self.name!r}, shape={self.shape}, frozen={self.frozen})"


def _broadcast_shape(a: Node, b: Node, op: str) -> tuple[int, int]:
    try:
        shape = np.broadcast_shapes(a.shape, b.shape)
    except ValueError as exc:
        raise DimensionError(f"{op}: shapes {a.shape} and {b.shape} do not match") from exc
    return (int(shape[0]), int(shape[1]))


def _reduce_to(grad: FloatArray, shape: tuple[int, int]) -> FloatArray:
    """Sum a broadcast gradient back down to an operand's shape."""
    if grad.shape == shape:
        return grad
    if shape[0] == 1 and grad.shape[0] != 1:
        grad = grad.sum(axis=0, keepdims=True)
    if shape[1] == 1 and grad.shape[1] != 1:
        grad = grad.sum(axis=1, keepdims=True)
    return grad


def _stable_sigmoid(x: FloatArray) -> FloatArray:
    return np.exp(-np.logaddexp(0.0, -x))


class Tape:
    """Records backward closures in forward order and replays them in reverse."""

    def __init__(self) -> None:
        self._steps: list[Callable[[], None]] = []

    def __len__(self) -> int:
        return len(self._steps)

    # ------------------------------------------------------------------
    # plumbing
    # ------------------------------------------------------------------

    def constant(self, value: npt.ArrayLike) -> Node:
        """A node that never receives gradient."""
        return Node(value, requires_grad=False)

    def record(self, out: Node, backward: Callable[[FloatArray], None]) -> Node:
        """Register ``backward(out.grad)`` to run during the reverse sweep."""
        if out.requires_grad:

            def step() -> None:
                if out.grad is not None:
                    backward(out.grad)

            self._steps.append(step)
        return out

    def backward(self, loss: Node, seed: float = 1.0) -> None:
        """Propagate ``seed * d(loss)`` into every node that requires it."""
        if loss.shape != (1, 1):
            raise DimensionError(f"backward needs a scalar loss, got shape {loss.shape}")
        loss.accumulate(np.full((1, 1), seed))
        for step in reversed(self._steps):
            step()
        self._steps.clear()

    @staticmethod
    def _result(value: FloatArray, *inputs: Node) -> Node:
        return Node(value, requires_grad=any(node.requires_grad for node in inputs))

    # ------------------------------------------------------------------
    # linear algebra
    # ------------------------------------------------------------------

    def matmul(self, a: Node, b: Node) -> Node:
        if a.cols != b.rows:
            raise DimensionError(f"matmul: {a.shape} x {b.shape}")
        out = self._result(a.value @ b.value, a, b)

        def backward(g: FloatArray) -> None:
            if a.requires_grad:
                a.accumulate(g @ b.value.T)
            if b.requires_grad:
                b.accumulate(a.value.T @ g)

        return self.record(out, backward)

    def transpose(self, a: Node) -> Node:
        out = self._result(np.ascontiguousarray(a.value.T), a)
        return self.record(out, lambda g: a.accumulate(np.ascontiguousarray(g.T)))

    # ------------------------------------------------------------------
    # elementwise binary (numpy broadcasting of unit rows/cols)
    # ------------------------------------------------------------------

    def add(self, a: Node, b: Node) -> Node:
        _broadcast_shape(a, b, "add")
        out = self._result(a.value + b.value, a, b)

        def backward(g: FloatArray) -> None:
            a.accumulate(_reduce_to(g, a.shape))
            b.accumulate(_reduce_to(g, b.shape))

        return self.record(out, backward)

    def sub(self, a: Node, b: Node) -> Node:
        _broadcast_shape(a, b, "sub")
        out = self._result(a.value - b.value, a, b)

        def backward(g: FloatArray) -> None:
            a.accumulate(_reduce_to(g, a.shape))
            b.accumulate(_reduce_to(-g, b.shape))

        return self.record(out, backward)

    def mul(self, a: Node, b: Node) -> Node:
        _broadcast_shape(a, b, "mul")
        out = self._result(a.value * b.value, a, b)

        def backward(g: FloatArray) -> None:
            if a.requires_grad:
                a.accumulate(_reduce_to(g * b.value, a.shape))
            if b.requires_grad:
                b.accumulate(_reduce_to(g * a.value, b.shape))

        return self.record(out, backward)

    def div(self, a: Node, b: Node) -> Node:
        _broadcast_shape(a, b, "div")
        out = self._result(a.value / b.value, a, b)

        def backward(g: FloatArray) -> None:
            if a.requires_grad:
                a.accumulate(_reduce_to(g / b.value, a.shape))
            if b.requires_grad:
                b.accumulate(_reduce_to(-g * a.value / (b.value * b.value), b.shape))

        return self.record(out, backward)

    def minimum(self, a: Node, b: Node) -> Node:
        """Elementwise minimum; ties route the gradient to ``a``."""
        _broadcast_shape(a, b, "minimum")
        pick_a = a.value <= b.value
        out = self._result(np.where(pick_a, a.value, b.value), a, b)

        def backward(g: FloatArray) -> None:
            a.accumulate(_reduce_to(np.where(pick_a, g, 0.0), a.shape))
            b.accumulate(_reduce_to(np.where(pick_a, 0.0, g), b.shape))

        return self.record(out, backward)

    def maximum(self, a: Node, b: Node) -> Node:
        """Elementwise maximum; ties route the gradient to ``a``."""
        _broadcast_shape(a, b, "maximum")
        pick_a = a.value >= b.value
        out = self._result(np.where(pick_a, a.value, b.value), a, b)

        def backward(g: FloatArray) -> None:
            a.accumulate(_reduce_to(np.where(pick_a, g, 0.0), a.shape))
            b.accumulate(_reduce_to(np.where(pick_a, 0.0, g), b.shape))

        return self.record(out, backward)

    # ------------------------------------------------------------------
    # elementwise unary
    # ------------------------------------------------------------------

    def scale(self, a: Node, factor: float) -> Node:
        out = self._result(a.value * factor, a)
        return self.record(out, lambda g: a.accumulate(g * factor))

    def add_scalar(self, a: Node, c: float) -> Node:
        out = self._result(a.value + c, a)
        return self.record(out, lambda g: a.accumulate(g))

    def sigmoid(self, a: Node) -> Node:
        y = _stable_sigmoid(a.value)
        out = self._result(y, a)
        return self.record(out, lambda g: a.accumulate(g * y * (1.0 - y)))

    def relu(self, a: Node) -> Node:
        positive = a.value > 0.0
        out = self._result(np.where(positive, a.value, 0.0), a)
        return self.record(out, lambda g: a.accumulate(np.where(positive, g, 0.0)))

    def softplus(self, a: Node) -> Node:
        out = self._result(np.logaddexp(0.0, a.value), a)
        slope = _stable_sigmoid(a.value)
        return self.record(out, lambda g: a.accumulate(g * slope))

    def exp(self, a: Node) -> Node:
        y = np.exp(a.value)
        out = self._result(y, a)
        return self.record(out, lambda g: a.accumulate(g * y))

    def log(self, a: Node) -> Node:
        out = self._result(np.log(a.value), a)
        return self.record(out, lambda g: a.accumulate(g / a.value))

    def clamp_min(self, a: Node, low: float) -> Node:
        above = a.value > low
        out = self._result(np.where(above, a.value, low), a)
        return self.record(out, lambda g: a.accumulate(np.where(above, g, 0.0)))

    def smooth_l1(self, a: Node, beta: float = 1.0) -> Node:
        magnitude = np.abs(a.value)
        quadratic = magnitude < beta
        y = np.where(quadratic, 0.5 * a.value * a.value / beta, magnitude - 0.5 * beta)
        slope = np.where(quadratic, a.value / beta, np.sign(a.value))
        out = self._result(y, a)
        return self.record(out, lambda g: a.accumulate(g * slope))

    # ------------------------------------------------------------------
    # reductions and indexing
    # ------------------------------------------------------------------

    def sum(self, a: Node) -> Node:
        out = self._result(np.array([[a.value.sum()]]), a)
        return self.record(out, lambda g: a.accumulate(np.full(a.shape, g[0, 0])))

    def mean(self, a: Node) -> Node:
        size = a.value.size
        out = self._result(np.array([[a.value.sum() / size]]), a)
        return self.record(out, lambda g: a.accumulate(np.full(a.shape, g[0, 0] / size)))

    def mean_over_rows(self, a: Node) -> Node:
        """Column means: ``rows x cols -> 1 x cols``."""
        rows = a.rows
        out = self._result(a.value.mean(axis=0, keepdims=True), a)
        return self.record(out, lambda g: a.accumulate(np.repeat(g / rows, rows, axis=0)))

    def index_rows(self, a: Node, index: Sequence[int] | IntArray) -> Node:
        """Gather rows; repeated indices accumulate gradient."""
        idx = np.asarray(index, dtype=np.int64).reshape(-1)
        if idx.size and (idx.min() < 0 or idx.max() >= a.rows):
            raise DimensionError(f"row index out of range for {a.rows} rows")
        out = self._result(a.value[idx], a)

        def backward(g: FloatArray) -> None:
            grad = np.zeros_like(a.value)
            np.add.at(grad, idx, g)
            a.accumulate(grad)

        return self.record(out, backward)

    def slice_cols(self, a: Node, start: int, stop: int) -> Node:
        if not 0 <= start < stop <= a.cols:
            raise DimensionError(f"column slice [{start}:{stop}] invalid for {a.cols} columns")
        out = self._result(np.ascontiguousarray(a.value[:, start:stop]), a)

        def backward(g: FloatArray) -> None:
            grad = np.zeros_like(a.value)
            grad[:, start:stop] = g
            a.accumulate(grad)

        return self.record(out, backward)

    def concat_cols(self, parts: Sequence[Node]) -> Node:
        if not parts:
            raise PreconditionError("concat_cols needs at least one part")
        rows = parts[0].rows
        if any(part.rows != rows for part in parts):
            raise DimensionError("concat_cols: parts disagree on row count")
        out = self._result(np.concatenate([part.value for part in parts], axis=1), *parts)
        bounds = np.cumsum([0] + [part.cols for part in parts])

        def backward(g: FloatArray) -> None:
            for part, start, stop in zip(parts, bounds[:-1], bounds[1:]):
                part.accumulate(np.ascontiguousarray(g[:, start:stop]))

        return self.record(out, backward)

    # ------------------------------------------------------------------
    # softmax family
    # ------------------------------------------------------------------

    def row_softmax(self, a: Node, additive_mask: FloatArray | None = None) -> Node:
        """
        Row-wise softmax with an optional {0, -inf} additive mask.

        A row whose every entry is masked falls back to the unmasked softmax.
        """
        logits = a.value
        if additive_mask is not None:
            if additive_mask.shape != a.shape:
                raise DimensionError(
                    f"row_softmax: mask shape {additive_mask.shape} != input shape {a.shape}"
                )
            blocked = additive_mask == MASKED
            fully_blocked = blocked.all(axis=1)
            if fully_blocked.any():
                blocked = blocked.copy()
                blocked[fully_blocked] = False
            logits = np.where(blocked, -np.inf, logits)
        shifted = logits - logits.max(axis=1, keepdims=True)
        e = np.exp(shifted)
        y = e / e.sum(axis=1, keepdims=True)
        out = self._result(y, a)

        def backward(g: FloatArray) -> None:
            a.accumulate(y * (g - (g * y).sum(axis=1, keepdims=True)))

        return self.record(out, backward)

    def log_softmax_rows(self, a: Node) -> Node:
        shifted = a.value - a.value.max(axis=1, keepdims=True)
        lse = np.log(np.exp(shifted).sum(axis=1, keepdims=True))
        y = shifted - lse
        probs = np.exp(y)
        out = self._result(y, a)

        def backward(g: FloatArray) -> None:
            a.accumulate(g - probs * g.sum(axis=1, keepdims=True))

        return self.record(out, backward)

    # ------------------------------------------------------------------
    # pooling
    # ------------------------------------------------------------------

    def maxpool_groups(self, a: Node, group: int) -> tuple[Node, IntArray]:
        """
        Columnwise max over consecutive blocks of ``group`` rows.

        Returns the pooled ``(rows / group) x cols`` node and the winning row
        offset inside each block per column. Ties go to the lowest offset.
        """
        if a.rows < 1 or group < 1:
            raise PreconditionError("maxpool needs at least one row")
        if a.rows % group:
            raise DimensionError(f"maxpool: {a.rows} rows are not a multiple of {group}")
        blocks = a.value.reshape(a.rows // group, group, a.cols)
        winners = np.argmax(blocks, axis=1)
        pooled = np.take_along_axis(blocks, winners[:, None, :], axis=1)[:, 0, :]
        out = self._result(pooled, a)

        def backward(g: FloatArray) -> None:
            grad = np.zeros_like(blocks)
            np.put_along_axis(grad, winners[:, None, :], g[:, None, :], axis=1)
            a.accumulate(grad.reshape(a.shape))

        return self.record(out, backward), winners.astype(np.int64)

    def maxpool_rows(self, a: Node) -> tuple[Node, IntArray]:
        """Columnwise max over all rows; argmax per column (lowest index on ties)."""
        if a.rows < 1:
            raise PreconditionError("maxpool needs at least one row")
        pooled, winners = self.maxpool_groups(a, a.rows)
        return pooled, winners[0]

    # ------------------------------------------------------------------
    # fused loss kernels
    # ------------------------------------------------------------------

    def focal_terms(
        self, p: Node, target: FloatArray, gamma: float, alpha: float
    ) -> Node:
        """
        Elementwise focal loss ``-a_t (1 - p_t)^gamma log p_t`` against a 0/1 target.

        Probabilities are clamped to ``[PROB_CLAMP, 1 - PROB_CLAMP]``; the
        clamp passes no gradient.
        """
        t = as_matrix(target)
        if t.shape != p.shape:
            raise DimensionError(f"focal: target shape {t.shape} != prediction shape {p.shape}")
        positive = t >= 0.5
        clamped = np.clip(p.value, PROB_CLAMP, 1.0 - PROB_CLAMP)
        p_t = np.where(positive, clamped, 1.0 - clamped)
        alpha_t = np.where(positive, alpha, 1.0 - alpha)
        one_minus = 1.0 - p_t
        log_pt = np.log(p_t)
        loss = -alpha_t * one_minus**gamma * log_pt
        out = self._result(loss, p)

        inside = (p.value > PROB_CLAMP) & (p.value < 1.0 - PROB_CLAMP)
        if gamma == 0.0:
            d_pt = -alpha_t / p_t
        else:
            d_pt = alpha_t * (gamma * one_minus ** (gamma - 1.0) * log_pt - one_minus**gamma / p_t)
        d_p = np.where(positive, d_pt, -d_pt) * inside

        return self.record(out, lambda g: p.accumulate(g * d_p))
