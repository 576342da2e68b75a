"""Sequence encoder, graph encoder, fusion variants and task heads."""

from syntax_fusion_lab.model.config import (
    EVAL,
    EncoderConfig,
    GnnConfig,
    JointMode,
    ModelConfig,
    RunMode,
    Task,
    Variant,
)
from syntax_fusion_lab.model.encoder import (
    AttentionTrace,
    EncoderInput,
    SyntaxKV,
    embed,
    encode,
    encode_layers,
    ffn_layer,
    self_attention_layer,
)
from syntax_fusion_lab.model.fusion import (
    FusionModel,
    FusionOutput,
    aggregation_matrix,
    baseline_forward,
    encoder_input,
    forward,
    joint_fusion_forward,
    late_fusion_forward,
    predict,
    prune_mask,
    sentence_graph,
    sentence_loss,
)
from syntax_fusion_lab.model.heads import (
    NO_RELATION,
    OUTSIDE,
    TagSet,
    bio_penalty,
    classification_loss,
    crf_log_likelihood,
    extract_spans,
    re_classify,
    render_tags,
    sequence_score,
    viterbi_decode,
)
from syntax_fusion_lab.model.params import ParamStore, init_params, parameter_shapes
from syntax_fusion_lab.model.syntax_gnn import (
    GraphAttentionTrace,
    gnn_encode,
    gnn_layer,
    gnn_params,
    graph_attention,
)

__all__ = [
    "EVAL",
    "NO_RELATION",
    "OUTSIDE",
    "AttentionTrace",
    "EncoderConfig",
    "EncoderInput",
    "FusionModel",
    "FusionOutput",
    "GnnConfig",
    "GraphAttentionTrace",
    "JointMode",
    "ModelConfig",
    "ParamStore",
    "RunMode",
    "SyntaxKV",
    "TagSet",
    "Task",
    "Variant",
    "aggregation_matrix",
    "baseline_forward",
    "bio_penalty",
    "classification_loss",
    "crf_log_likelihood",
    "embed",
    "encode",
    "encode_layers",
    "encoder_input",
    "extract_spans",
    "ffn_layer",
    "forward",
    "gnn_encode",
    "gnn_layer",
    "gnn_params",
    "graph_attention",
    "init_params",
    "joint_fusion_forward",
    "late_fusion_forward",
    "parameter_shapes",
    "predict",
    "prune_mask",
    "re_classify",
    "render_tags",
    "self_attention_layer",
    "sentence_graph",
    "sentence_loss",
    "sequence_score",
    "viterbi_decode",
]
