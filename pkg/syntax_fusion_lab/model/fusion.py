"""Baseline, Late Fusion and Joint Fusion models, and the task losses on top of them.

Late Fusion stacks the graph encoder on the sequence encoder's output and mixes the
two with an elementwise highway gate. Joint Fusion runs the graph encoder once over
the input embeddings and feeds projections of its states to every encoder layer as
extra keys and values. Both sum wordpiece states into token states at the end.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from syntax_fusion_lab.errors import CompatibilityError, ConfigError
from syntax_fusion_lab.model.config import EVAL, ModelConfig, RunMode, Variant
from syntax_fusion_lab.model.encoder import (
    AttentionTrace,
    EncoderInput,
    SyntaxKV,
    embed,
    encode,
    encode_layers,
)
from syntax_fusion_lab.model.heads import (
    TagSet,
    bio_penalty,
    classification_loss,
    crf_log_likelihood,
    re_classify,
    viterbi_decode,
)
from syntax_fusion_lab.model.params import (
    CrfParams,
    EncoderParams,
    GateParams,
    JointFusionParams,
    ParamStore,
    ReHeadParams,
    init_params,
    parameter_shapes,
)
from syntax_fusion_lab.model.syntax_gnn import GraphAttentionTrace, gnn_encode, gnn_params
from syntax_fusion_lab.tensor import FloatArray, Tensor, sigmoid
from syntax_fusion_lab.treebank import (
    ReInstance,
    Sentence,
    SrlFrame,
    TagSeq,
    Vocab,
    WordpieceGraph,
    build_wordpiece_graph,
    lca_prune,
    payload_task,
)


@dataclass(kw_only=True)
class FusionModel:
    """Configuration, parameters and vocabulary of one trained or fresh model."""

    config: ModelConfig
    params: ParamStore
    vocab: Vocab
    provenance: dict[str, str] = field(default_factory=dict[str, str])

    def __post_init__(self) -> None:
        """Check that the store holds exactly the tensors the configuration calls for."""
        expected = parameter_shapes(self.config)
        actual = {name: t.shape for name, t in self.params.items()}
        if expected != actual:
            missing = sorted(set(expected) - set(actual))
            extra = sorted(set(actual) - set(expected))
            wrong = sorted(
                n for n in set(expected) & set(actual) if expected[n] != actual[n]
            )
            msg = f"Parameters do not fit config: missing={missing} extra={extra} shape={wrong}"
            raise CompatibilityError(msg)
        if self.config.encoder.vocab_size != len(self.vocab):
            msg = (
                f"Vocabulary has {len(self.vocab)} pieces, "
                f"config expects {self.config.encoder.vocab_size}"
            )
            raise CompatibilityError(msg)

    @classmethod
    def fresh(
        cls, config: ModelConfig, vocab: Vocab, rng: np.random.Generator
    ) -> FusionModel:
        """Randomly initialized model."""
        return cls(config=config, params=init_params(config, rng), vocab=vocab)

    @property
    def encoder_params(self) -> EncoderParams:
        """Typed view of `encoder.*`."""
        return EncoderParams.view(self.params, self.config.encoder.layers)

    @property
    def tagset(self) -> TagSet:
        """Tag set of tagging and SRL models."""
        return TagSet(self.config.labels)

    def check_compatible(self, sentence: Sentence) -> None:
        """Raise `CompatibilityError` if `sentence` cannot be scored by this head."""
        task = payload_task(sentence.payload)
        if task != self.config.task.value:
            msg = f"Model head is {self.config.task.value!r}, dataset payload is {task!r}"
            raise CompatibilityError(msg)


@dataclass(frozen=True, kw_only=True)
class FusionOutput:
    """Token states plus what the forward pass looked like on the way."""

    tokens: Tensor
    wordpieces: Tensor
    encoder_trace: AttentionTrace
    gnn_trace: GraphAttentionTrace | None = None
    gate: FloatArray | None = None


def encoder_input(sentence: Sentence, vocab: Vocab) -> EncoderInput:
    """Ids of a sentence; SRL frames mark every wordpiece of the predicate."""
    ids = np.array([vocab.lookup(p) for p in sentence.wordpieces], dtype=np.int64)
    indicators = None
    if isinstance(sentence.payload, SrlFrame):
        indicators = np.zeros_like(ids)
        start, end = sentence.alignment[sentence.payload.predicate]
        indicators[start:end] = 1
    return EncoderInput(
        wordpiece_ids=ids, segment_ids=np.zeros_like(ids), indicator_ids=indicators
    )


def prune_mask(sentence: Sentence) -> NDArray[np.bool_] | None:
    """LCA subtree mask for relation instances, None for other payloads."""
    if isinstance(sentence.payload, ReInstance):
        return lca_prune(sentence.tree, sentence.payload.subj, sentence.payload.obj)
    return None


def sentence_graph(sentence: Sentence) -> WordpieceGraph:
    """Wordpiece graph of the sentence's tree, pruned for relation instances."""
    return build_wordpiece_graph(sentence.tree, sentence.alignment, prune_mask(sentence))


def aggregation_matrix(alignment: tuple[tuple[int, int], ...]) -> Tensor:
    """Constant n×m 0/1 matrix summing each token's wordpieces."""
    m = alignment[-1][1]
    matrix = np.zeros((len(alignment), m))
    for token, (start, end) in enumerate(alignment):
        matrix[token, start:end] = 1.0
    return Tensor(matrix)


def _require(model: FusionModel, variant: Variant) -> None:
    if model.config.variant is not variant:
        msg = f"{variant.value} forward called on a {model.config.variant.value} model"
        raise ConfigError(msg)


def baseline_forward(
    sentence: Sentence, model: FusionModel, mode: RunMode = EVAL
) -> FusionOutput:
    """Encoder only, then token aggregation; the tree is never read."""
    _require(model, Variant.BASELINE)
    h, trace = encode(
        encoder_input(sentence, model.vocab),
        model.encoder_params,
        model.config.encoder,
        mode,
    )
    return FusionOutput(
        tokens=aggregation_matrix(sentence.alignment) @ h,
        wordpieces=h,
        encoder_trace=trace,
    )


def late_fusion_forward(
    sentence: Sentence,
    graph: WordpieceGraph,
    model: FusionModel,
    mode: RunMode = EVAL,
) -> FusionOutput:
    """v = encode, z = gnn(v), h = g*v + (1-g)*z with g = sigmoid(v W_g + b_g)."""
    _require(model, Variant.LATE)
    config = model.config
    v, trace = encode(
        encoder_input(sentence, model.vocab), model.encoder_params, config.encoder, mode
    )
    z, gnn_trace = gnn_encode(
        v, graph, gnn_params(model.params, config.gnn), config.gnn, mode
    )
    gate_params = GateParams.view(model.params)
    g = sigmoid(v @ gate_params.w_g + gate_params.b_g)
    h = g * v + (1.0 - g) * z
    return FusionOutput(
        tokens=aggregation_matrix(sentence.alignment) @ h,
        wordpieces=h,
        encoder_trace=trace,
        gnn_trace=gnn_trace,
        gate=g.data.copy(),
    )


def joint_fusion_forward(
    sentence: Sentence,
    graph: WordpieceGraph,
    model: FusionModel,
    mode: RunMode = EVAL,
) -> FusionOutput:
    """Graph states from the embeddings, injected as keys/values into every layer."""
    _require(model, Variant.JOINT)
    config = model.config
    inputs = encoder_input(sentence, model.vocab)
    encoder_params = model.encoder_params
    u = embed(inputs, encoder_params, config.encoder, mode)
    s, gnn_trace = gnn_encode(
        u, graph, gnn_params(model.params, config.gnn), config.gnn, mode
    )
    joint = JointFusionParams.view(model.params, config.encoder.layers)
    extra = [
        SyntaxKV(keys=s @ p_k, values=s @ p_v)
        for p_k, p_v in zip(joint.p_k, joint.p_v, strict=True)
    ]
    h, trace = encode_layers(
        u,
        inputs.real_mask(),
        encoder_params,
        config.encoder,
        mode,
        extra_kv=extra,
        joint_mode=config.joint_mode,
    )
    return FusionOutput(
        tokens=aggregation_matrix(sentence.alignment) @ h,
        wordpieces=h,
        encoder_trace=trace,
        gnn_trace=gnn_trace,
    )


def forward(sentence: Sentence, model: FusionModel, mode: RunMode = EVAL) -> FusionOutput:
    """Dispatch on the model's variant, building the sentence graph when needed."""
    match model.config.variant:
        case Variant.BASELINE:
            return baseline_forward(sentence, model, mode)
        case Variant.LATE:
            return late_fusion_forward(sentence, sentence_graph(sentence), model, mode)
        case Variant.JOINT:
            return joint_fusion_forward(sentence, sentence_graph(sentence), model, mode)


def _penalty(model: FusionModel) -> tuple[FloatArray, FloatArray] | None:
    return bio_penalty(model.tagset) if model.config.crf_constrained else None


def _relation_id(model: FusionModel, relation: str) -> int:
    try:
        return model.config.labels.index(relation)
    except ValueError:
        msg = f"Relation {relation!r} is not in the model's label set"
        raise CompatibilityError(msg) from None


def sentence_loss(sentence: Sentence, model: FusionModel, mode: RunMode) -> Tensor:
    """Negative log-likelihood (tagging) or cross-entropy (relations) of one sentence."""
    model.check_compatible(sentence)
    states = forward(sentence, model, mode).tokens
    match sentence.payload:
        case TagSeq(tags=tags) | SrlFrame(tags=tags):
            gold = model.tagset.encode(tags)
            return -crf_log_likelihood(
                states, gold, CrfParams.view(model.params), _penalty(model)
            )
        case ReInstance(subj=subj, obj=obj, relation=relation):
            mask = prune_mask(sentence)
            assert mask is not None
            scores = re_classify(states, subj, obj, mask, ReHeadParams.view(model.params))
            return classification_loss(scores, _relation_id(model, relation))


def predict(sentence: Sentence, model: FusionModel) -> list[str] | str:
    """Viterbi tags for tagging payloads, the best relation label for relations."""
    model.check_compatible(sentence)
    states = forward(sentence, model, EVAL).tokens
    match sentence.payload:
        case TagSeq() | SrlFrame():
            path, _ = viterbi_decode(states, CrfParams.view(model.params), _penalty(model))
            return model.tagset.decode(path)
        case ReInstance(subj=subj, obj=obj):
            mask = prune_mask(sentence)
            assert mask is not None
            scores = re_classify(states, subj, obj, mask, ReHeadParams.view(model.params))
            return model.config.labels[int(scores.data.argmax())]
