"""Dense float64 tensors with a reverse-mode differentiation tape.

A `Tape` is entered as a context manager. While it is active on the current thread,
every operation that has at least one input requiring gradients appends a
`TapeEntry`. Outside of any tape, operations compute values only, which is how the
evaluation path runs.

Example:
    with Tape() as tape:
        loss = sum_all(x @ w)
    tape.backward(loss)

"""

from __future__ import annotations

import itertools
import threading
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from syntax_fusion_lab.errors import NumericalOverflowError, ShapeMismatchError, TapeError

FloatArray = NDArray[np.float64]
BackwardRule = Callable[[FloatArray, tuple[FloatArray, ...]], tuple[FloatArray | None, ...]]

_node_ids = itertools.count()
_local = threading.local()


def _tape_stack() -> list[Tape]:
    stack: list[Tape] | None = getattr(_local, "stack", None)
    if stack is None:
        stack = []
        _local.stack = stack
    return stack


def active_tape() -> Tape | None:
    """Return the innermost tape entered on this thread, if any."""
    stack = _tape_stack()
    return stack[-1] if stack else None


@dataclass(frozen=True, kw_only=True)
class TapeEntry:
    """One recorded operation: which nodes went in, which came out, and how to undo it."""

    op_kind: str
    inputs: tuple[int, ...]
    output: int
    saved: tuple[FloatArray, ...]
    rule: BackwardRule


class Tensor:
    """Row-major float64 array that can take part in a differentiation graph."""

    __slots__ = ("data", "grad", "name", "node_id", "requires_grad", "tape")

    def __init__(
        self, data: ArrayLike, *, requires_grad: bool = False, name: str | None = None
    ) -> None:
        """Copy `data` into a new float64 leaf tensor."""
        array = np.array(data, dtype=np.float64)
        if any(dim < 1 for dim in array.shape):
            msg = f"Tensor dimensions must be positive, got shape {array.shape}"
            raise ShapeMismatchError(msg)
        self.data: FloatArray = array
        self.requires_grad = requires_grad
        self.grad: FloatArray | None = None
        self.name = name
        self.node_id = next(_node_ids)
        self.tape: Tape | None = None

    @classmethod
    def _wrap(cls, array: FloatArray, *, requires_grad: bool = False) -> Tensor:
        """Adopt an already computed array without copying."""
        tensor = cls.__new__(cls)
        tensor.data = array
        tensor.requires_grad = requires_grad
        tensor.grad = None
        tensor.name = None
        tensor.node_id = next(_node_ids)
        tensor.tape = None
        return tensor

    @property
    def shape(self) -> tuple[int, ...]:
        """Dimension sizes."""
        return self.data.shape

    @property
    def size(self) -> int:
        """Number of elements."""
        return int(self.data.size)

    @property
    def T(self) -> Tensor:  # noqa: N802
        """Transpose of a matrix."""
        return transpose(self)

    def item(self) -> float:
        """Return the value of a single-element tensor."""
        return float(self.data.reshape(-1)[0])

    def zero_grad(self) -> None:
        """Drop the accumulated gradient."""
        self.grad = None

    def __repr__(self) -> str:
        """Show name, shape and whether gradients are tracked."""
        label = f"{self.name}, " if self.name else ""
        return f"Tensor({label}shape={self.shape}, requires_grad={self.requires_grad})"

    def __add__(self, other: Tensor | float) -> Tensor:
        """Elementwise sum."""
        return add(self, other)

    def __radd__(self, other: float) -> Tensor:
        """Elementwise sum."""
        return add(other, self)

    def __sub__(self, other: Tensor | float) -> Tensor:
        """Elementwise difference."""
        return sub(self, other)

    def __rsub__(self, other: float) -> Tensor:
        """Elementwise difference."""
        return sub(other, self)

    def __mul__(self, other: Tensor | float) -> Tensor:
        """Elementwise product."""
        return mul(self, other)

    def __rmul__(self, other: float) -> Tensor:
        """Elementwise product."""
        return mul(other, self)

    def __neg__(self) -> Tensor:
        """Elementwise negation."""
        return mul(self, -1.0)

    def __matmul__(self, other: Tensor) -> Tensor:
        """Matrix product."""
        return matmul(self, other)


class Tape:
    """Append-only record of one forward pass, owned by a single thread."""

    def __init__(self) -> None:
        """Start an empty tape."""
        self.entries: list[TapeEntry] = []
        self.consumed = False
        self._nodes: dict[int, Tensor] = {}

    def __enter__(self) -> Tape:
        """Make this the tape that operations record onto."""
        _tape_stack().append(self)
        return self

    def __exit__(self, *_exc: object) -> None:
        """Stop recording onto this tape."""
        _tape_stack().pop()

    def record(
        self,
        op_kind: str,
        inputs: tuple[Tensor, ...],
        out: FloatArray,
        saved: tuple[FloatArray, ...],
        rule: BackwardRule,
    ) -> Tensor:
        """Append an entry and return the output tensor bound to this tape."""
        if self.consumed:
            msg = "Tape was already consumed by backward(); call reset() first"
            raise TapeError(msg)
        output = Tensor._wrap(out, requires_grad=True)  # noqa: SLF001
        output.tape = self
        for tensor in inputs:
            self._nodes[tensor.node_id] = tensor
        self._nodes[output.node_id] = output
        self.entries.append(
            TapeEntry(
                op_kind=op_kind,
                inputs=tuple(t.node_id for t in inputs),
                output=output.node_id,
                saved=saved,
                rule=rule,
            )
        )
        return output

    def backward(self, loss: Tensor) -> None:
        """Accumulate d(loss)/d(leaf) into `.grad` of every leaf requiring gradients."""
        if loss.size != 1:
            msg = f"backward() needs a scalar loss, got shape {loss.shape}"
            raise TapeError(msg)
        if loss.tape is not self:
            msg = "Loss was not recorded on this tape"
            raise TapeError(msg)
        if self.consumed:
            msg = "backward() was already run on this tape; call reset() first"
            raise TapeError(msg)

        grads: dict[int, FloatArray] = {loss.node_id: np.ones_like(loss.data)}
        for entry in reversed(self.entries):
            grad_out = grads.pop(entry.output, None)
            if grad_out is None:
                continue
            input_grads = entry.rule(grad_out, entry.saved)
            for input_id, input_grad in zip(entry.inputs, input_grads, strict=True):
                if input_grad is None or not self._nodes[input_id].requires_grad:
                    continue
                if input_id in grads:
                    grads[input_id] = grads[input_id] + input_grad
                else:
                    grads[input_id] = input_grad

        # Whatever is left belongs to leaves.
        for node_id, grad in grads.items():
            leaf = self._nodes[node_id]
            leaf.grad = grad.copy() if leaf.grad is None else leaf.grad + grad
        self.consumed = True

    def reset(self) -> None:
        """Forget all entries so the tape can record a new forward pass."""
        self.entries.clear()
        self._nodes.clear()
        self.consumed = False


def backward(loss: Tensor) -> None:
    """Run the backward pass of the tape that produced `loss`."""
    if loss.tape is None:
        msg = "backward() before forward: loss was not produced by a recorded pass"
        raise TapeError(msg)
    loss.tape.backward(loss)


def as_tensor(value: Tensor | ArrayLike) -> Tensor:
    """Wrap plain numbers and arrays as constant tensors."""
    if isinstance(value, Tensor):
        return value
    return Tensor(value)


def apply_op(
    op_kind: str,
    inputs: tuple[Tensor, ...],
    out: FloatArray,
    rule: BackwardRule,
    saved: tuple[FloatArray, ...] = (),
) -> Tensor:
    """Finish an operation: check the output and record it when gradients are needed."""
    if not np.all(np.isfinite(out)):
        msg = f"{op_kind} produced non-finite values from finite inputs"
        raise NumericalOverflowError(msg)
    tape = active_tape()
    if tape is None or not any(t.requires_grad for t in inputs):
        return Tensor._wrap(out)  # noqa: SLF001
    return tape.record(op_kind, inputs, out, saved, rule)


def unbroadcast(grad: FloatArray, shape: tuple[int, ...]) -> FloatArray:
    """Sum `grad` back down to `shape` after numpy broadcasting."""
    while grad.ndim > len(shape):
        grad = grad.sum(axis=0)
    for axis, dim in enumerate(shape):
        if dim == 1 and grad.shape[axis] != 1:
            grad = grad.sum(axis=axis, keepdims=True)
    return grad


def _broadcast_shape(op_kind: str, a: Tensor, b: Tensor) -> None:
    try:
        np.broadcast_shapes(a.shape, b.shape)
    except ValueError as e:
        msg = f"{op_kind}: shapes {a.shape} and {b.shape} do not broadcast"
        raise ShapeMismatchError(msg) from e


def add(a: Tensor | float, b: Tensor | float) -> Tensor:
    """Elementwise sum with numpy broadcasting."""
    ta, tb = as_tensor(a), as_tensor(b)
    _broadcast_shape("add", ta, tb)
    shape_a, shape_b = ta.shape, tb.shape

    def rule(g: FloatArray, _saved: tuple[FloatArray, ...]) -> tuple[FloatArray, ...]:
        return unbroadcast(g, shape_a), unbroadcast(g, shape_b)

    return apply_op("add", (ta, tb), ta.data + tb.data, rule)


def sub(a: Tensor | float, b: Tensor | float) -> Tensor:
    """Elementwise difference with numpy broadcasting."""
    ta, tb = as_tensor(a), as_tensor(b)
    _broadcast_shape("sub", ta, tb)
    shape_a, shape_b = ta.shape, tb.shape

    def rule(g: FloatArray, _saved: tuple[FloatArray, ...]) -> tuple[FloatArray, ...]:
        return unbroadcast(g, shape_a), unbroadcast(-g, shape_b)

    return apply_op("sub", (ta, tb), ta.data - tb.data, rule)


def mul(a: Tensor | float, b: Tensor | float) -> Tensor:
    """Elementwise product with numpy broadcasting."""
    ta, tb = as_tensor(a), as_tensor(b)
    _broadcast_shape("mul", ta, tb)

    def rule(g: FloatArray, saved: tuple[FloatArray, ...]) -> tuple[FloatArray, ...]:
        a_data, b_data = saved
        return unbroadcast(g * b_data, a_data.shape), unbroadcast(g * a_data, b_data.shape)

    return apply_op("mul", (ta, tb), ta.data * tb.data, rule, (ta.data, tb.data))


def matmul(a: Tensor, b: Tensor) -> Tensor:
    """Matrix product of an m×k and a k×n tensor."""
    if a.data.ndim != 2 or b.data.ndim != 2 or a.shape[1] != b.shape[0]:
        msg = f"matmul: cannot multiply shape {a.shape} by shape {b.shape}"
        raise ShapeMismatchError(msg)

    def rule(g: FloatArray, saved: tuple[FloatArray, ...]) -> tuple[FloatArray, ...]:
        a_data, b_data = saved
        return g @ b_data.T, a_data.T @ g

    return apply_op("matmul", (a, b), a.data @ b.data, rule, (a.data, b.data))


def transpose(a: Tensor) -> Tensor:
    """Swap the two axes of a matrix."""
    if a.data.ndim != 2:
        msg = f"transpose: expected a matrix, got shape {a.shape}"
        raise ShapeMismatchError(msg)

    def rule(g: FloatArray, _saved: tuple[FloatArray, ...]) -> tuple[FloatArray, ...]:
        return (g.T,)

    return apply_op("transpose", (a,), a.data.T.copy(), rule)
