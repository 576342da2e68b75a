"""Miniature transformer encoder with key/value hooks for Joint Fusion.

Post-norm blocks: h = LN(h + attn(h)), then h = LN(h + W2 gelu(h W1 + b1) + b2).
Dropout sits on the embeddings, on attention weights and on each sublayer output.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from syntax_fusion_lab.errors import ConfigError, ShapeMismatchError
from syntax_fusion_lab.model.attention import attend
from syntax_fusion_lab.model.config import EncoderConfig, JointMode, RunMode
from syntax_fusion_lab.model.params import BlockParams, EncoderParams, FfnParams, LayerNormParams
from syntax_fusion_lab.tensor import (
    FloatArray,
    Tensor,
    concat,
    dropout,
    gelu,
    layer_norm,
    take_rows,
)

IdArray = NDArray[np.int64]


@dataclass(frozen=True, kw_only=True)
class EncoderInput:
    """Id sequences for one sentence. `pad_mask` is True at real positions."""

    wordpiece_ids: IdArray
    segment_ids: IdArray
    indicator_ids: IdArray | None = None
    pad_mask: NDArray[np.bool_] | None = None

    @property
    def m(self) -> int:
        """Sequence length, padding included."""
        return int(self.wordpiece_ids.shape[0])

    def real_mask(self) -> NDArray[np.bool_]:
        """Padding mask, all True when none was given."""
        if self.pad_mask is None:
            return np.ones(self.m, dtype=bool)
        return self.pad_mask

    @classmethod
    def plain(cls, ids: Sequence[int]) -> EncoderInput:
        """Single-segment input without indicators or padding."""
        array = np.asarray(ids, dtype=np.int64)
        return cls(wordpiece_ids=array, segment_ids=np.zeros_like(array))


@dataclass(frozen=True, kw_only=True)
class SyntaxKV:
    """Extra keys and values a layer attends over, one row per syntax position."""

    keys: Tensor
    values: Tensor
    key_mask: NDArray[np.bool_] | None = None


@dataclass(frozen=True, kw_only=True)
class AttentionTrace:
    """Attention weights per layer and head; rows run over key positions."""

    layers: tuple[tuple[FloatArray, ...], ...] = ()

    def __add__(self, other: AttentionTrace) -> AttentionTrace:
        """Layers of `self` followed by those of `other`."""
        return AttentionTrace(layers=self.layers + other.layers)

    def max_row_error(self) -> float:
        """Largest |row sum - 1| over all layers and heads."""
        return max(
            (
                float(np.abs(weights.sum(axis=-1) - 1.0).max())
                for layer in self.layers
                for weights in layer
            ),
            default=0.0,
        )


def _check_ids(name: str, ids: IdArray, table: Tensor) -> None:
    if ids.size and (ids.min() < 0 or ids.max() >= table.shape[0]):
        msg = f"{name} id out of range for a table of {table.shape[0]} rows"
        raise ShapeMismatchError(msg)


def embed(
    inputs: EncoderInput,
    params: EncoderParams,
    config: EncoderConfig,
    mode: RunMode,
) -> Tensor:
    """Wordpiece + positional + segment embeddings, plus indicators when present."""
    m = inputs.m
    if m > config.max_len:
        msg = f"Sequence of {m} wordpieces exceeds max_len={config.max_len}"
        raise ShapeMismatchError(msg)
    _check_ids("wordpiece", inputs.wordpiece_ids, params.wordpiece_emb)
    _check_ids("segment", inputs.segment_ids, params.seg_emb)
    x = (
        take_rows(params.wordpiece_emb, inputs.wordpiece_ids)
        + take_rows(params.pos_emb, np.arange(m))
        + take_rows(params.seg_emb, inputs.segment_ids)
    )
    if inputs.indicator_ids is not None:
        _check_ids("indicator", inputs.indicator_ids, params.indicator_emb)
        x = x + take_rows(params.indicator_emb, inputs.indicator_ids)
    return dropout(x, config.dropout_p, mode.rng, training=mode.training)


def _combine_kv(
    k: Tensor,
    v: Tensor,
    key_mask: NDArray[np.bool_],
    extra: SyntaxKV,
    joint_mode: JointMode,
) -> tuple[Tensor, Tensor, NDArray[np.bool_]]:
    if extra.keys.shape[1] != k.shape[1] or extra.values.shape != extra.keys.shape:
        msg = (
            f"syntax keys {extra.keys.shape} / values {extra.values.shape} "
            f"do not match width {k.shape[1]}"
        )
        raise ShapeMismatchError(msg)
    extra_mask = (
        np.ones(extra.keys.shape[0], dtype=bool)
        if extra.key_mask is None
        else extra.key_mask
    )
    match joint_mode:
        case JointMode.CONCAT:
            return (
                concat([k, extra.keys], axis=0),
                concat([v, extra.values], axis=0),
                np.concatenate([key_mask, extra_mask]),
            )
        case JointMode.ADD:
            if extra.keys.shape != k.shape:
                msg = f"add mode needs {k.shape} syntax keys, got {extra.keys.shape}"
                raise ShapeMismatchError(msg)
            return k + extra.keys, v + extra.values, key_mask & extra_mask
        case _:
            msg = f"Unknown joint mode {joint_mode!r}"
            raise ConfigError(msg)


def self_attention_layer(
    h: Tensor,
    pad_mask: NDArray[np.bool_],
    params: BlockParams,
    config: EncoderConfig,
    mode: RunMode,
    *,
    extra_kv: SyntaxKV | None = None,
    joint_mode: JointMode = JointMode.CONCAT,
) -> tuple[Tensor, AttentionTrace]:
    """Multi-head self-attention sublayer with residual and layer norm.

    Padded positions are masked out as keys. With `extra_kv`, syntax keys and values
    are appended to (concat) or summed into (add) the layer's own before the softmax.
    """
    attn = params.attn
    q, k, v = h @ attn.w_q, h @ attn.w_k, h @ attn.w_v
    key_mask = pad_mask
    if extra_kv is not None:
        k, v, key_mask = _combine_kv(k, v, pad_mask, extra_kv, joint_mode)
    mask = np.broadcast_to(key_mask, (h.shape[0], key_mask.shape[0]))
    merged, _, weights = attend(
        q, k, v, mask, config.heads, dropout_p=config.dropout_p, mode=mode
    )
    out = dropout(merged @ attn.w_o, config.dropout_p, mode.rng, training=mode.training)
    normed = layer_norm(h + out, params.ln1.gain, params.ln1.bias)
    return normed, AttentionTrace(layers=(weights,))


def ffn_layer(
    h: Tensor,
    ffn: FfnParams,
    ln: LayerNormParams,
    dropout_p: float,
    mode: RunMode,
) -> Tensor:
    """LN(h + dropout(W2 gelu(h W1 + b1) + b2))."""
    hidden = gelu(h @ ffn.w1 + ffn.b1)
    out = dropout(hidden @ ffn.w2 + ffn.b2, dropout_p, mode.rng, training=mode.training)
    return layer_norm(h + out, ln.gain, ln.bias)


def encode_layers(
    x: Tensor,
    pad_mask: NDArray[np.bool_],
    params: EncoderParams,
    config: EncoderConfig,
    mode: RunMode,
    *,
    extra_kv: Sequence[SyntaxKV] | None = None,
    joint_mode: JointMode = JointMode.CONCAT,
) -> tuple[Tensor, AttentionTrace]:
    """Run every encoder block over already embedded inputs."""
    if extra_kv is not None and len(extra_kv) != config.layers:
        msg = f"{len(extra_kv)} syntax key/value sets for {config.layers} layers"
        raise ShapeMismatchError(msg)
    trace = AttentionTrace()
    h = x
    for i, block in enumerate(params.layers):
        h, layer_trace = self_attention_layer(
            h,
            pad_mask,
            block,
            config,
            mode,
            extra_kv=None if extra_kv is None else extra_kv[i],
            joint_mode=joint_mode,
        )
        h = ffn_layer(h, block.ffn, block.ln2, config.dropout_p, mode)
        trace += layer_trace
    return h, trace


def encode(
    inputs: EncoderInput,
    params: EncoderParams,
    config: EncoderConfig,
    mode: RunMode,
    *,
    extra_kv: Sequence[SyntaxKV] | None = None,
    joint_mode: JointMode = JointMode.CONCAT,
) -> tuple[Tensor, AttentionTrace]:
    """Embed, then run every block; returns m×d states and the attention trace."""
    x = embed(inputs, params, config, mode)
    return encode_layers(
        x,
        inputs.real_mask(),
        params,
        config,
        mode,
        extra_kv=extra_kv,
        joint_mode=joint_mode,
    )
