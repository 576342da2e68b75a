"""Scaled dot-product multi-head attention shared by the encoder and the graph encoder.

The caller supplies a boolean query×key mask. The encoder passes its padding mask,
the graph encoder passes the adjacency matrix, so both run exactly the same numbers
when the mask is full.
"""

from __future__ import annotations

import math

import numpy as np
from numpy.typing import NDArray

from syntax_fusion_lab.errors import ShapeMismatchError
from syntax_fusion_lab.model.config import RunMode
from syntax_fusion_lab.tensor import (
    FloatArray,
    Tensor,
    concat,
    dropout,
    masked_softmax,
    slice_cols,
)


def attend(
    q: Tensor,
    k: Tensor,
    v: Tensor,
    mask: NDArray[np.bool_],
    heads: int,
    *,
    dropout_p: float,
    mode: RunMode,
) -> tuple[Tensor, tuple[FloatArray, ...], tuple[FloatArray, ...]]:
    """Attend `heads` ways from the rows of `q` over the rows of `k` / `v`.

    Returns the concatenated head outputs (before the output projection), then per
    head the scaled scores and the attention weights (before dropout).
    """
    m_q, d = q.shape
    if k.shape[1] != d or v.shape != k.shape:
        msg = f"attention: queries {q.shape}, keys {k.shape}, values {v.shape}"
        raise ShapeMismatchError(msg)
    if mask.shape != (m_q, k.shape[0]):
        msg = f"attention: mask {mask.shape} does not match {m_q} queries × {k.shape[0]} keys"
        raise ShapeMismatchError(msg)
    width = d // heads
    scale = 1.0 / math.sqrt(width)

    outputs: list[Tensor] = []
    scores_per_head: list[FloatArray] = []
    weights_per_head: list[FloatArray] = []
    for h in range(heads):
        cols = (h * width, (h + 1) * width)
        q_h, k_h, v_h = (slice_cols(t, *cols) for t in (q, k, v))
        scores = (q_h @ k_h.T) * scale
        alpha = masked_softmax(scores, mask)
        scores_per_head.append(np.where(mask, scores.data, np.nan))
        weights_per_head.append(alpha.data.copy())
        alpha = dropout(alpha, dropout_p, mode.rng, training=mode.training)
        outputs.append(alpha @ v_h)
    merged = outputs[0] if heads == 1 else concat(outputs, axis=1)
    return merged, tuple(scores_per_head), tuple(weights_per_head)
