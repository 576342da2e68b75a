"""Differentiable operations used by the model layers, beyond plain arithmetic."""

from __future__ import annotations

import math
from collections.abc import Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.special import expit, logsumexp as _scipy_logsumexp

from syntax_fusion_lab.errors import MaskedRowError, ShapeMismatchError
from syntax_fusion_lab.tensor.core import FloatArray, Tensor, apply_op

IntArray = NDArray[np.int64]
BoolArray = NDArray[np.bool_]

LAYER_NORM_EPS = 1e-5
_GELU_C = math.sqrt(2.0 / math.pi)
_GELU_K = 0.044715


def sum_all(a: Tensor) -> Tensor:
    """Sum of every element, as a 0-d tensor."""
    shape = a.shape

    def rule(g: FloatArray, _saved: tuple[FloatArray, ...]) -> tuple[FloatArray, ...]:
        return (np.broadcast_to(g, shape).copy(),)

    return apply_op("sum", (a,), np.asarray(a.data.sum()), rule)


def reshape(a: Tensor, shape: tuple[int, ...]) -> Tensor:
    """Same values, new shape."""
    original = a.shape

    def rule(g: FloatArray, _saved: tuple[FloatArray, ...]) -> tuple[FloatArray, ...]:
        return (g.reshape(original),)

    return apply_op("reshape", (a,), a.data.reshape(shape).copy(), rule)


def take_rows(a: Tensor, index: IntArray | Sequence[int]) -> Tensor:
    """Gather rows `a[index]`; used for embedding lookups."""
    idx = np.asarray(index, dtype=np.int64)
    if idx.size and (idx.min() < 0 or idx.max() >= a.shape[0]):
        msg = f"take_rows: index out of range for {a.shape[0]} rows"
        raise ShapeMismatchError(msg)
    shape = a.shape

    def rule(g: FloatArray, _saved: tuple[FloatArray, ...]) -> tuple[FloatArray, ...]:
        grad = np.zeros(shape)
        np.add.at(grad, idx, g)
        return (grad,)

    return apply_op("take_rows", (a,), a.data[idx], rule)


def pick(a: Tensor, rows: Sequence[int], cols: Sequence[int]) -> Tensor:
    """Gather single entries `a[rows[k], cols[k]]` into a vector."""
    r = np.asarray(rows, dtype=np.int64)
    c = np.asarray(cols, dtype=np.int64)
    shape = a.shape

    def rule(g: FloatArray, _saved: tuple[FloatArray, ...]) -> tuple[FloatArray, ...]:
        grad = np.zeros(shape)
        np.add.at(grad, (r, c), g)
        return (grad,)

    return apply_op("pick", (a,), a.data[r, c], rule)


def concat(tensors: Sequence[Tensor], axis: int = 0) -> Tensor:
    """Join tensors along an existing axis."""
    sizes = [t.shape[axis] for t in tensors]
    try:
        out = np.concatenate([t.data for t in tensors], axis=axis)
    except ValueError as e:
        msg = f"concat: incompatible shapes {[t.shape for t in tensors]}"
        raise ShapeMismatchError(msg) from e
    splits = np.cumsum(sizes)[:-1]

    def rule(g: FloatArray, _saved: tuple[FloatArray, ...]) -> tuple[FloatArray, ...]:
        return tuple(np.split(g, splits, axis=axis))

    return apply_op("concat", tuple(tensors), out, rule)


def slice_cols(a: Tensor, start: int, stop: int) -> Tensor:
    """Columns `start:stop` of a matrix (one attention head's slice)."""
    shape = a.shape

    def rule(g: FloatArray, _saved: tuple[FloatArray, ...]) -> tuple[FloatArray, ...]:
        grad = np.zeros(shape)
        grad[:, start:stop] = g
        return (grad,)

    return apply_op("slice_cols", (a,), a.data[:, start:stop].copy(), rule)


def logsumexp(a: Tensor, axis: int | None = None, *, keepdims: bool = False) -> Tensor:
    """Stable log(sum(exp(a))) along `axis` (all elements when None)."""
    out = np.asarray(_scipy_logsumexp(a.data, axis=axis, keepdims=keepdims))

    def rule(g: FloatArray, saved: tuple[FloatArray, ...]) -> tuple[FloatArray, ...]:
        (x,) = saved
        kept = np.asarray(_scipy_logsumexp(x, axis=axis, keepdims=True))
        g_kept = g if keepdims or axis is None else np.expand_dims(g, axis)
        return (g_kept * np.exp(x - kept),)

    return apply_op("logsumexp", (a,), out, rule, (a.data,))


def max_rows(a: Tensor, rows: Sequence[int]) -> Tensor:
    """Elementwise max over the selected rows, as a 1×d tensor.

    Ties send the gradient to the lowest selected row.
    """
    r = np.asarray(rows, dtype=np.int64)
    if r.size == 0:
        msg = "max_rows: no rows selected"
        raise ShapeMismatchError(msg)
    selected = a.data[r]
    winners = selected.argmax(axis=0)
    cols = np.arange(a.shape[1])
    shape = a.shape

    def rule(g: FloatArray, _saved: tuple[FloatArray, ...]) -> tuple[FloatArray, ...]:
        grad = np.zeros(shape)
        np.add.at(grad, (r[winners], cols), g.reshape(-1))
        return (grad,)

    return apply_op("max_rows", (a,), selected[winners, cols][None, :], rule)


def masked_softmax(scores: Tensor, mask: BoolArray) -> Tensor:
    """Softmax over the last axis restricted to `mask`; masked entries are exactly 0."""
    full_mask = np.broadcast_to(np.asarray(mask, dtype=bool), scores.shape)
    if not full_mask.any(axis=-1).all():
        msg = "masked_softmax: a row has no unmasked entry (isolated node)"
        raise MaskedRowError(msg)
    masked = np.where(full_mask, scores.data, -np.inf)
    shifted = masked - masked.max(axis=-1, keepdims=True)
    weights = np.exp(shifted)
    out = weights / weights.sum(axis=-1, keepdims=True)

    def rule(g: FloatArray, saved: tuple[FloatArray, ...]) -> tuple[FloatArray, ...]:
        (y,) = saved
        return (y * (g - (g * y).sum(axis=-1, keepdims=True)),)

    return apply_op("masked_softmax", (scores,), out, rule, (out,))


def layer_norm(
    x: Tensor, gain: Tensor, bias: Tensor, eps: float = LAYER_NORM_EPS
) -> Tensor:
    """Standardise the last axis, then scale by `gain` and shift by `bias`."""
    d = x.shape[-1]
    if gain.shape != (d,) or bias.shape != (d,):
        msg = f"layer_norm: gain {gain.shape} / bias {bias.shape} do not match width {d}"
        raise ShapeMismatchError(msg)
    centered = x.data - x.data.mean(axis=-1, keepdims=True)
    inv_std = 1.0 / np.sqrt((centered**2).mean(axis=-1, keepdims=True) + eps)
    x_hat = centered * inv_std

    def rule(g: FloatArray, saved: tuple[FloatArray, ...]) -> tuple[FloatArray, ...]:
        x_hat_s, inv_std_s, gain_s = saved
        d_hat = g * gain_s
        dx = inv_std_s * (
            d_hat
            - d_hat.mean(axis=-1, keepdims=True)
            - x_hat_s * (d_hat * x_hat_s).mean(axis=-1, keepdims=True)
        )
        d_gain = (g * x_hat_s).reshape(-1, d).sum(axis=0)
        d_bias = g.reshape(-1, d).sum(axis=0)
        return dx, d_gain, d_bias

    return apply_op(
        "layer_norm",
        (x, gain, bias),
        x_hat * gain.data + bias.data,
        rule,
        (x_hat, inv_std, gain.data),
    )


def _gelu_grad(x: FloatArray) -> FloatArray:
    t = np.tanh(_GELU_C * (x + _GELU_K * x**3))
    return 0.5 * (1.0 + t) + 0.5 * x * (1.0 - t**2) * _GELU_C * (1.0 + 3.0 * _GELU_K * x**2)


def gelu(x: Tensor) -> Tensor:
    """GELU, tanh approximation."""
    out = 0.5 * x.data * (1.0 + np.tanh(_GELU_C * (x.data + _GELU_K * x.data**3)))

    def rule(g: FloatArray, saved: tuple[FloatArray, ...]) -> tuple[FloatArray, ...]:
        return (g * _gelu_grad(saved[0]),)

    return apply_op("gelu", (x,), out, rule, (x.data,))


def sigmoid(x: Tensor) -> Tensor:
    """Logistic function, saturating without overflow."""
    out = np.asarray(expit(x.data), dtype=np.float64)

    def rule(g: FloatArray, saved: tuple[FloatArray, ...]) -> tuple[FloatArray, ...]:
        (y,) = saved
        return (g * y * (1.0 - y),)

    return apply_op("sigmoid", (x,), out, rule, (out,))


def dropout(
    x: Tensor, p: float, rng: np.random.Generator | None, *, training: bool
) -> Tensor:
    """Inverted dropout: zero entries with probability `p`, scale survivors by 1/(1-p)."""
    if not training or p == 0.0:
        return x
    if not 0.0 <= p < 1.0:
        msg = f"dropout probability must lie in [0, 1), got {p}"
        raise ValueError(msg)
    if rng is None:
        msg = "dropout in training mode needs an explicit random stream"
        raise ValueError(msg)
    scale = (rng.random(x.shape) >= p) / (1.0 - p)

    def rule(g: FloatArray, saved: tuple[FloatArray, ...]) -> tuple[FloatArray, ...]:
        return (g * saved[0],)

    return apply_op("dropout", (x,), x.data * scale, rule, (scale,))
