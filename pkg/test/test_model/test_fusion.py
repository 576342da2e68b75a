"""Tests for the baseline, Late Fusion and Joint Fusion forwards."""

import numpy as np
import pytest

from syntax_fusion_lab.errors import CompatibilityError, ConfigError
from syntax_fusion_lab.model import (
    EVAL,
    FusionModel,
    JointMode,
    SyntaxKV,
    Task,
    Variant,
    aggregation_matrix,
    baseline_forward,
    encode,
    encoder_input,
    forward,
    joint_fusion_forward,
    late_fusion_forward,
    predict,
    prune_mask,
    self_attention_layer,
    sentence_graph,
    sentence_loss,
)
from syntax_fusion_lab.model.syntax_gnn import gnn_encode, gnn_params
from syntax_fusion_lab.tensor import Tensor
from syntax_fusion_lab.treebank import DepTree, ReInstance, Sentence, TagSeq, Vocab
from test import factories
from test.factories import chain_tree, re_sentence, srl_sentence, tag_sentence


def _encoder_states(model: FusionModel, sentence: Sentence) -> Tensor:
    states, _ = encode(
        encoder_input(sentence, model.vocab),
        model.encoder_params,
        model.config.encoder,
        EVAL,
    )
    return states


def test_gate_open_bypasses_graph() -> None:
    model = factories.model(Variant.LATE)
    model.params["gate.b_g"].data[...] = 1e4
    sentence = tag_sentence()
    out = late_fusion_forward(sentence, sentence_graph(sentence), model)
    assert out.gate is not None
    assert np.all(out.gate == 1.0)
    assert np.array_equal(out.wordpieces.data, _encoder_states(model, sentence).data)


def test_gate_closed_keeps_only_graph() -> None:
    model = factories.model(Variant.LATE)
    model.params["gate.b_g"].data[...] = -1e4
    sentence = tag_sentence()
    graph = sentence_graph(sentence)
    out = late_fusion_forward(sentence, graph, model)
    z, _ = gnn_encode(
        _encoder_states(model, sentence),
        graph,
        gnn_params(model.params, model.config.gnn),
        model.config.gnn,
        EVAL,
    )
    assert np.array_equal(out.wordpieces.data, z.data)


def test_gate_mixes_convexly() -> None:
    model = factories.model(Variant.LATE)
    sentence = tag_sentence()
    graph = sentence_graph(sentence)
    out = late_fusion_forward(sentence, graph, model)
    v = _encoder_states(model, sentence).data
    z, _ = gnn_encode(
        Tensor(v), graph, gnn_params(model.params, model.config.gnn), model.config.gnn, EVAL
    )
    low = np.minimum(v, z.data) - 1e-12
    high = np.maximum(v, z.data) + 1e-12
    assert np.all((low <= out.wordpieces.data) & (out.wordpieces.data <= high))
    assert out.gate is not None
    assert np.all((out.gate > 0.0) & (out.gate < 1.0))


def test_single_piece_tokens_aggregate_to_themselves() -> None:
    sentence = tag_sentence()
    assert sentence.m == sentence.n
    out = forward(sentence, factories.model(Variant.LATE))
    assert np.array_equal(out.tokens.data, out.wordpieces.data)


def test_split_token_states_are_summed() -> None:
    matrix = aggregation_matrix(((0, 1), (1, 3)))
    assert matrix.data.tolist() == [[1.0, 0.0, 0.0], [0.0, 1.0, 1.0]]


def test_zero_projections_in_add_mode_give_plain_encoder() -> None:
    model = factories.model(Variant.JOINT, joint_mode=JointMode.ADD)
    for name, tensor in model.params.items():
        if name.startswith("joint."):
            tensor.data[...] = 0.0
    sentence = tag_sentence()
    out = joint_fusion_forward(sentence, sentence_graph(sentence), model)
    expected = _encoder_states(model, sentence).data
    assert np.allclose(out.wordpieces.data, expected, atol=1e-9, rtol=0.0)


def test_hopeless_syntax_keys_get_no_mass() -> None:
    model = factories.model(Variant.JOINT)
    block = model.encoder_params.layers[0]
    rng = np.random.default_rng(4)
    block.attn.w_q.data[...] = np.abs(rng.normal(size=(8, 8)))
    h = Tensor(np.abs(rng.normal(size=(4, 8))) + 0.1)
    hopeless = SyntaxKV(
        keys=Tensor(np.full((4, 8), -1e3)), values=Tensor(rng.normal(size=(4, 8)))
    )
    pad = np.ones(4, dtype=bool)
    config = model.config.encoder
    plain, _ = self_attention_layer(h, pad, block, config, EVAL)
    injected, trace = self_attention_layer(h, pad, block, config, EVAL, extra_kv=hopeless)
    for weights in trace.layers[0]:
        assert weights.shape == (4, 8)
        assert weights[:, 4:].sum() < 1e-12
    assert np.allclose(plain.data, injected.data, atol=1e-9)


def test_baseline_ignores_the_tree() -> None:
    model = factories.model(Variant.BASELINE)
    sentence = tag_sentence()
    other = sentence.with_tree(chain_tree(sentence.n))
    assert np.array_equal(
        baseline_forward(sentence, model).tokens.data,
        baseline_forward(other, model).tokens.data,
    )


@pytest.mark.parametrize("variant", [Variant.LATE, Variant.JOINT])
def test_fusion_reads_the_tree(variant: Variant) -> None:
    model = factories.model(variant)
    sentence = tag_sentence()
    other = sentence.with_tree(chain_tree(sentence.n))
    assert not np.allclose(
        forward(sentence, model).tokens.data, forward(other, model).tokens.data
    )


def test_forward_checks_variant() -> None:
    model = factories.model(Variant.BASELINE)
    sentence = tag_sentence()
    with pytest.raises(ConfigError, match="late"):
        late_fusion_forward(sentence, sentence_graph(sentence), model)


def test_vocab_size_mismatch() -> None:
    model = factories.model(Variant.LATE)
    with pytest.raises(CompatibilityError, match="Vocabulary"):
        FusionModel(config=model.config, params=model.params, vocab=Vocab.build(["a"]))


def test_srl_indicator_marks_predicate_pieces() -> None:
    sentence = srl_sentence()
    inputs = encoder_input(sentence, factories.vocab())
    assert inputs.indicator_ids is not None
    assert inputs.indicator_ids.tolist() == [0, 0, 1, 0, 0, 0]


def test_relation_graph_is_pruned() -> None:
    sentence = re_sentence()
    mask = prune_mask(sentence)
    assert mask is not None
    assert mask.all()
    narrow = Sentence(
        tokens=sentence.tokens,
        wordpieces=sentence.wordpieces,
        alignment=sentence.alignment,
        tree=sentence.tree,
        payload=ReInstance(subj=(4, 5), obj=(5, 6), relation="likes"),
    )
    mask = prune_mask(narrow)
    assert mask is not None
    assert mask.tolist() == [False, False, False, True, True, True]
    graph = sentence_graph(narrow)
    assert graph.adjacency[1] == (1,)
    assert graph.adjacency[3] == (3, 5)


@pytest.mark.parametrize("variant", list(Variant))
def test_losses_and_predictions(variant: Variant) -> None:
    tagger = factories.model(variant)
    sentence = tag_sentence()
    loss = sentence_loss(sentence, tagger, EVAL)
    assert np.isfinite(loss.item())
    assert loss.item() > 0.0
    tags = predict(sentence, tagger)
    assert isinstance(tags, list)
    assert len(tags) == sentence.n

    relation_model = factories.model(variant, task=Task.RE)
    relation = predict(re_sentence(), relation_model)
    assert relation in relation_model.config.labels
    assert sentence_loss(re_sentence(), relation_model, EVAL).item() > 0.0


def test_head_and_payload_must_agree() -> None:
    with pytest.raises(CompatibilityError, match="payload"):
        predict(re_sentence(), factories.model(Variant.LATE))


def test_unknown_gold_tag() -> None:
    sentence = Sentence.from_parts(
        ("the", "cat"),
        DepTree(heads=(2, 0), deprels=("det", "root")),
        TagSeq(tags=("B-Z", "O")),
        factories.vocab(),
    )
    with pytest.raises(ValueError, match="B-Z"):
        sentence_loss(sentence, factories.model(Variant.LATE), EVAL)
