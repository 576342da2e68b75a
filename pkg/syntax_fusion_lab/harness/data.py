"""Dataset plumbing: label sets, train/dev splits and tree substitution."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Literal

import numpy as np
from beartype import beartype
from loguru import logger

from syntax_fusion_lab.errors import ConfigError, DatasetError
from syntax_fusion_lab.model.config import Task
from syntax_fusion_lab.model.heads import NO_RELATION, TagSet
from syntax_fusion_lab.treebank import (
    DatasetRecord,
    ReInstance,
    Sentence,
    SrlFrame,
    TagSeq,
    Vocab,
    corrupt_tree,
    payload_task,
    read_conllu,
    uas,
)


def dataset_task(records: Sequence[DatasetRecord]) -> Task:
    """The single task all records share."""
    if not records:
        msg = "Dataset is empty"
        raise DatasetError(msg)
    tasks = {payload_task(r.payload) for r in records}
    if len(tasks) != 1:
        msg = f"Dataset mixes payload kinds {sorted(tasks)}"
        raise DatasetError(msg)
    return Task(tasks.pop())


def label_set(records: Sequence[DatasetRecord]) -> tuple[str, ...]:
    """BIO tag set for tagging and SRL; sorted relations (no_relation first) for RE."""
    task = dataset_task(records)
    if task is Task.RE:
        relations = {r.payload.relation for r in records if isinstance(r.payload, ReInstance)}
        relations.add(NO_RELATION)
        return (NO_RELATION, *sorted(relations - {NO_RELATION}))
    sequences = [
        r.payload.tags for r in records if isinstance(r.payload, TagSeq | SrlFrame)
    ]
    return TagSet.from_sequences(sequences).tags


def dataset_vocab(records: Sequence[DatasetRecord]) -> Vocab:
    """Vocabulary covering every surface token of `records`."""
    return Vocab.build(token for r in records for token in r.tokens)


def split_dataset(
    records: Sequence[DatasetRecord], dev_fraction: float, rng: np.random.Generator
) -> tuple[list[DatasetRecord], list[DatasetRecord]]:
    """Shuffle once and hold out ceil(dev_fraction * N) records, at least one."""
    if not 0.0 < dev_fraction < 1.0:
        msg = f"dev fraction must lie in (0, 1), got {dev_fraction}"
        raise ConfigError(msg)
    if len(records) < 2:
        msg = f"Need at least 2 records to split, got {len(records)}"
        raise DatasetError(msg)
    order = rng.permutation(len(records))
    n_dev = min(len(records) - 1, max(1, math.ceil(dev_fraction * len(records))))
    dev = [records[i] for i in sorted(order[:n_dev])]
    train = [records[i] for i in sorted(order[n_dev:])]
    return train, dev


@dataclass(frozen=True, kw_only=True)
class TreeSource:
    """Where evaluation or training trees come from: gold, corrupted@RATE or file:PATH."""

    kind: Literal["gold", "corrupted", "file"]
    rate: float = 0.0
    path: Path | None = None

    @classmethod
    @beartype
    def parse(cls, text: str) -> TreeSource:
        """Parse the --trees flag value."""
        if text == "gold":
            return cls(kind="gold")
        if text.startswith("corrupted@"):
            try:
                rate = float(text.removeprefix("corrupted@"))
            except ValueError:
                msg = f"--trees: cannot read a rate from {text!r}"
                raise ConfigError(msg) from None
            if not 0.0 <= rate <= 1.0:
                msg = f"--trees: rate {rate} outside [0, 1]"
                raise ConfigError(msg)
            return cls(kind="corrupted", rate=rate)
        if text.startswith("file:"):
            path = Path(text.removeprefix("file:"))
            if not path.is_file():
                msg = f"--trees: {path} does not exist"
                raise ConfigError(msg)
            return cls(kind="file", path=path)
        msg = f"--trees must be gold, corrupted@RATE or file:PATH, got {text!r}"
        raise ConfigError(msg)

    def __str__(self) -> str:
        """Flag form."""
        match self.kind:
            case "gold":
                return "gold"
            case "corrupted":
                return f"corrupted@{self.rate:g}"
            case "file":
                return f"file:{self.path}"


def apply_trees(
    records: Sequence[DatasetRecord], source: TreeSource, rng: np.random.Generator
) -> list[DatasetRecord]:
    """Replace gold trees according to `source`; logs mean UAS against gold."""
    replaced: list[DatasetRecord]
    match source.kind:
        case "gold":
            return list(records)
        case "corrupted":
            replaced = [
                r.with_tree(corrupt_tree(r.tree, source.rate, rng).tree) for r in records
            ]
        case "file":
            assert source.path is not None
            parsed = read_conllu(source.path.read_text(encoding="utf-8"))
            if len(parsed) != len(records):
                msg = f"{source.path} has {len(parsed)} sentences, dataset has {len(records)}"
                raise DatasetError(msg)
            replaced = []
            for index, (record, sentence) in enumerate(zip(records, parsed, strict=True)):
                if sentence.tree.n != len(record.tokens):
                    msg = (
                        f"{source.path}: sentence {index} has {sentence.tree.n} tokens, "
                        f"dataset has {len(record.tokens)}"
                    )
                    raise DatasetError(msg)
                replaced.append(record.with_tree(sentence.tree))
    mean_uas = float(
        np.mean([uas(new.tree, old.tree) for new, old in zip(replaced, records, strict=True)])
    )
    logger.info(f"Trees from {source}: mean UAS vs gold {mean_uas:.4f}")
    return replaced


def to_sentences(records: Sequence[DatasetRecord], vocab: Vocab) -> list[Sentence]:
    """Tokenize every record with `vocab`."""
    return [r.to_sentence(vocab) for r in records]
