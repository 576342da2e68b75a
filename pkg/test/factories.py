"""Small models and sentences shared by the tests."""

import numpy as np

from syntax_fusion_lab.model import (
    EncoderConfig,
    FusionModel,
    GnnConfig,
    JointMode,
    ModelConfig,
    Task,
    Variant,
)
from syntax_fusion_lab.treebank import (
    DatasetRecord,
    DepTree,
    ReInstance,
    Sentence,
    SrlFrame,
    TagSeq,
    Vocab,
)

WORDS = ("the", "cat", "sat", "on", "mat", "shipping", "dog", "ran")
TAGS = ("O", "B-X", "I-X", "B-Y", "I-Y")
RELATIONS = ("no_relation", "likes", "owns")


def vocab(words: tuple[str, ...] = WORDS) -> Vocab:
    return Vocab.build(words)


def model_config(
    *,
    vocab_size: int,
    task: Task = Task.TAG,
    variant: Variant = Variant.LATE,
    joint_mode: JointMode = JointMode.CONCAT,
    labels: tuple[str, ...] | None = None,
    layers: int = 1,
    gnn_layers: int = 1,
    d_model: int = 8,
    heads: int = 2,
    d_ff: int = 16,
    init_std: float = 0.3,
    crf_constrained: bool = False,
) -> ModelConfig:
    if labels is None:
        labels = RELATIONS if task is Task.RE else TAGS
    return ModelConfig(
        task=task,
        labels=labels,
        variant=variant,
        joint_mode=joint_mode,
        crf_constrained=crf_constrained,
        init_std=init_std,
        encoder=EncoderConfig(
            vocab_size=vocab_size,
            layers=layers,
            heads=heads,
            d_model=d_model,
            d_ff=d_ff,
            max_len=32,
            dropout_p=0.0,
        ),
        gnn=GnnConfig(
            layers=gnn_layers, heads=heads, d_model=d_model, d_ff=d_ff, dropout_p=0.0
        ),
    )


def model(
    variant: Variant = Variant.LATE,
    task: Task = Task.TAG,
    seed: int = 0,
    *,
    joint_mode: JointMode = JointMode.CONCAT,
    layers: int = 1,
    gnn_layers: int = 1,
    crf_constrained: bool = False,
) -> FusionModel:
    v = vocab()
    config = model_config(
        vocab_size=len(v),
        task=task,
        variant=variant,
        joint_mode=joint_mode,
        layers=layers,
        gnn_layers=gnn_layers,
        crf_constrained=crf_constrained,
    )
    return FusionModel.fresh(config, v, np.random.default_rng(seed))


def chain_tree(n: int) -> DepTree:
    """Token i attaches to token i+1; the last token is the root."""
    heads = tuple(i + 2 for i in range(n - 1)) + (0,)
    return DepTree(heads=heads, deprels=("dep",) * (n - 1) + ("root",))


def tag_record() -> DatasetRecord:
    return DatasetRecord(
        tokens=("the", "cat", "sat", "on", "the", "mat"),
        tree=DepTree(heads=(2, 3, 0, 6, 6, 3), deprels=("det", "nsubj", "root", "case", "det", "obl")),
        payload=TagSeq(tags=("B-X", "I-X", "O", "O", "B-Y", "I-Y")),
    )


def tag_sentence() -> Sentence:
    return tag_record().to_sentence(vocab())


def srl_sentence() -> Sentence:
    record = tag_record()
    return Sentence.from_parts(
        record.tokens,
        record.tree,
        SrlFrame(predicate=2, tags=("B-X", "I-X", "O", "O", "B-Y", "I-Y")),
        vocab(),
    )


def re_sentence(relation: str = "likes") -> Sentence:
    record = tag_record()
    return Sentence.from_parts(
        record.tokens,
        record.tree,
        ReInstance(subj=(0, 2), obj=(4, 6), relation=relation),
        vocab(),
    )
