"""Tests for the sequence encoder."""

import numpy as np
import pytest

from syntax_fusion_lab.errors import ShapeMismatchError
from syntax_fusion_lab.model import (
    EVAL,
    EncoderConfig,
    EncoderInput,
    FusionModel,
    JointMode,
    RunMode,
    SyntaxKV,
    Variant,
    embed,
    encode,
    ffn_layer,
    self_attention_layer,
)
from syntax_fusion_lab.tensor import Tensor, layer_norm
from test import factories


def _baseline(layers: int = 2) -> FusionModel:
    return factories.model(Variant.BASELINE, layers=layers)


def test_zero_tables_embed_to_zero() -> None:
    model = _baseline()
    params = model.encoder_params
    for table in (params.wordpiece_emb, params.pos_emb, params.seg_emb):
        table.data[...] = 0.0
    out = embed(EncoderInput.plain([3, 4, 5]), params, model.config.encoder, EVAL)
    assert np.all(out.data == 0.0)


def test_null_indicator_changes_nothing() -> None:
    model = _baseline()
    params = model.encoder_params
    params.indicator_emb.data[0] = 0.0
    plain = EncoderInput.plain([3, 4, 5])
    marked = EncoderInput(
        wordpiece_ids=plain.wordpiece_ids,
        segment_ids=plain.segment_ids,
        indicator_ids=np.zeros(3, dtype=np.int64),
    )
    config = model.config.encoder
    assert np.array_equal(
        embed(plain, params, config, EVAL).data, embed(marked, params, config, EVAL).data
    )


def test_single_wordpiece_embedding_is_table_sum() -> None:
    model = _baseline()
    p = model.encoder_params
    out = embed(EncoderInput.plain([7]), p, model.config.encoder, EVAL)
    expected = p.wordpiece_emb.data[7] + p.pos_emb.data[0] + p.seg_emb.data[0]
    assert np.allclose(out.data[0], expected)


def test_too_long_sequence() -> None:
    model = _baseline()
    with pytest.raises(ShapeMismatchError, match="max_len"):
        embed(EncoderInput.plain([3] * 33), model.encoder_params, model.config.encoder, EVAL)


def test_out_of_range_id() -> None:
    model = _baseline()
    with pytest.raises(ShapeMismatchError, match="wordpiece"):
        embed(
            EncoderInput.plain([len(model.vocab)]),
            model.encoder_params,
            model.config.encoder,
            EVAL,
        )


def test_single_position_attends_to_itself() -> None:
    model = _baseline()
    block = model.encoder_params.layers[0]
    h = Tensor(np.random.default_rng(0).normal(size=(1, 8)))
    out, trace = self_attention_layer(
        h, np.ones(1, dtype=bool), block, model.config.encoder, EVAL
    )
    assert all(w.tolist() == [[1.0]] for w in trace.layers[0])
    a = block.attn
    expected = layer_norm(h + h @ a.w_v @ a.w_o, block.ln1.gain, block.ln1.bias)
    assert np.allclose(out.data, expected.data)


def test_identical_positions_get_identical_outputs() -> None:
    model = _baseline()
    block = model.encoder_params.layers[0]
    row = np.random.default_rng(1).normal(size=8)
    h = Tensor(np.stack([row, row]))
    out, _ = self_attention_layer(h, np.ones(2, dtype=bool), block, model.config.encoder, EVAL)
    assert np.array_equal(out.data[0], out.data[1])


def test_padding_gets_no_weight() -> None:
    model = _baseline()
    block = model.encoder_params.layers[0]
    h = Tensor(np.random.default_rng(2).normal(size=(4, 8)))
    pad = np.array([True, True, True, False])
    _, trace = self_attention_layer(h, pad, block, model.config.encoder, EVAL)
    assert trace.max_row_error() <= 1e-9
    for weights in trace.layers[0]:
        assert np.all(weights[:, 3] == 0.0)


def test_zero_ffn_is_layer_norm() -> None:
    model = _baseline()
    block = model.encoder_params.layers[0]
    for t in (block.ffn.w1, block.ffn.b1, block.ffn.w2, block.ffn.b2):
        t.data[...] = 0.0
    h = Tensor(np.random.default_rng(3).normal(size=(3, 8)))
    out = ffn_layer(h, block.ffn, block.ln2, 0.0, EVAL)
    expected = layer_norm(h, block.ln2.gain, block.ln2.bias)
    assert np.allclose(out.data, expected.data)


def test_zero_layers_is_embedding() -> None:
    model = _baseline(layers=0)
    inputs = EncoderInput.plain([3, 4, 5])
    config = model.config.encoder
    h, trace = encode(inputs, model.encoder_params, config, EVAL)
    assert np.array_equal(h.data, embed(inputs, model.encoder_params, config, EVAL).data)
    assert trace.layers == ()


def test_eval_is_deterministic() -> None:
    model = _baseline()
    inputs = EncoderInput.plain([3, 4, 5, 6])
    first, _ = encode(inputs, model.encoder_params, model.config.encoder, EVAL)
    second, _ = encode(inputs, model.encoder_params, model.config.encoder, EVAL)
    assert np.array_equal(first.data, second.data)


def test_zero_syntax_keys_in_add_mode_change_nothing() -> None:
    model = _baseline()
    inputs = EncoderInput.plain([3, 4, 5, 6])
    config = model.config.encoder
    zeros = SyntaxKV(keys=Tensor(np.zeros((4, 8))), values=Tensor(np.zeros((4, 8))))
    plain, _ = encode(inputs, model.encoder_params, config, EVAL)
    injected, _ = encode(
        inputs,
        model.encoder_params,
        config,
        EVAL,
        extra_kv=[zeros] * config.layers,
        joint_mode=JointMode.ADD,
    )
    assert np.allclose(plain.data, injected.data, atol=1e-9, rtol=0.0)


def test_order_matters() -> None:
    """Positional embeddings break permutation equivariance."""
    model = _baseline()
    config = model.config.encoder
    forward, _ = encode(EncoderInput.plain([3, 4, 5]), model.encoder_params, config, EVAL)
    backward, _ = encode(EncoderInput.plain([5, 4, 3]), model.encoder_params, config, EVAL)
    assert not np.allclose(forward.data[::-1], backward.data)


def test_dropout_uses_the_given_stream() -> None:
    model = factories.model(Variant.BASELINE)
    config = EncoderConfig(
        vocab_size=model.config.encoder.vocab_size,
        layers=1,
        heads=2,
        d_model=8,
        d_ff=16,
        max_len=32,
        dropout_p=0.5,
    )
    inputs = EncoderInput.plain([3, 4, 5])
    mode_a = RunMode.train(np.random.default_rng(9))
    mode_b = RunMode.train(np.random.default_rng(9))
    a, _ = encode(inputs, model.encoder_params, config, mode_a)
    b, _ = encode(inputs, model.encoder_params, config, mode_b)
    c, _ = encode(inputs, model.encoder_params, config, EVAL)
    assert np.array_equal(a.data, b.data)
    assert not np.allclose(a.data, c.data)
