"""Training, evaluation, synthetic data, the tree-quality experiment and checkpoints."""

from syntax_fusion_lab.harness.checkpoint import (
    FORMAT_VERSION,
    MAGIC,
    decode_checkpoint,
    encode_checkpoint,
    load_checkpoint,
    save_checkpoint,
)
from syntax_fusion_lab.harness.data import (
    TreeSource,
    apply_trees,
    dataset_task,
    dataset_vocab,
    label_set,
    split_dataset,
    to_sentences,
)
from syntax_fusion_lab.harness.gradient_suite import CHECK_NAMES, SuiteResult, run_suite
from syntax_fusion_lab.harness.metrics import (
    LineFit,
    MetricsReport,
    SentenceScore,
    f1_score,
    fit_line,
    micro_report,
    relation_report,
    score_relation,
    score_spans,
    span_report,
)
from syntax_fusion_lab.harness.optim import OptimState, adam_step
from syntax_fusion_lab.harness.rng import stream
from syntax_fusion_lab.harness.sensitivity import (
    DEFAULT_RATES,
    SensitivityReport,
    SentencePoint,
    fits_frame,
    parse_condition_table,
    points_frame,
    sensitivity_experiment,
    summary_json,
    write_csv,
)
from syntax_fusion_lab.harness.synthetic import (
    SyntheticSpec,
    make_synthetic,
    sample_heads,
    tree_blind_bayes_accuracy,
)
from syntax_fusion_lab.harness.train import (
    TASK_EPOCHS,
    EpochMetrics,
    TrainConfig,
    TrainResult,
    eval_relations,
    eval_spans,
    evaluate,
    final_parameters_digest,
    train,
    worker_count,
)

__all__ = [
    "CHECK_NAMES",
    "DEFAULT_RATES",
    "FORMAT_VERSION",
    "MAGIC",
    "TASK_EPOCHS",
    "EpochMetrics",
    "LineFit",
    "MetricsReport",
    "OptimState",
    "SensitivityReport",
    "SentencePoint",
    "SentenceScore",
    "SuiteResult",
    "SyntheticSpec",
    "TrainConfig",
    "TrainResult",
    "TreeSource",
    "adam_step",
    "apply_trees",
    "dataset_task",
    "dataset_vocab",
    "decode_checkpoint",
    "encode_checkpoint",
    "eval_relations",
    "eval_spans",
    "evaluate",
    "f1_score",
    "final_parameters_digest",
    "fit_line",
    "fits_frame",
    "label_set",
    "load_checkpoint",
    "make_synthetic",
    "micro_report",
    "parse_condition_table",
    "points_frame",
    "relation_report",
    "run_suite",
    "sample_heads",
    "save_checkpoint",
    "score_relation",
    "score_spans",
    "sensitivity_experiment",
    "span_report",
    "split_dataset",
    "stream",
    "summary_json",
    "to_sentences",
    "train",
    "tree_blind_bayes_accuracy",
    "worker_count",
    "write_csv",
]
