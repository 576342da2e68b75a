"""Tests for label sets, splits and tree substitution."""

from pathlib import Path

import numpy as np
import pytest

from syntax_fusion_lab.errors import ConfigError, DatasetError
from syntax_fusion_lab.harness import (
    TreeSource,
    apply_trees,
    dataset_task,
    label_set,
    split_dataset,
)
from syntax_fusion_lab.model import Task
from syntax_fusion_lab.treebank import (
    ConlluSentence,
    DatasetRecord,
    ReInstance,
    uas,
    write_conllu,
)
from test import factories


def _re_record(relation: str) -> DatasetRecord:
    record = factories.tag_record()
    return DatasetRecord(
        tokens=record.tokens,
        tree=record.tree,
        payload=ReInstance(subj=(0, 2), obj=(4, 6), relation=relation),
    )


def test_tag_label_set() -> None:
    assert label_set([factories.tag_record()]) == factories.TAGS


def test_relation_label_set() -> None:
    records = [_re_record("owns"), _re_record("likes")]
    assert label_set(records) == ("no_relation", "likes", "owns")
    assert dataset_task(records) is Task.RE


def test_mixed_payloads() -> None:
    with pytest.raises(DatasetError, match="mixes"):
        dataset_task([factories.tag_record(), _re_record("likes")])


def test_split_sizes() -> None:
    records = [factories.tag_record()] * 10
    train, dev = split_dataset(records, 0.25, np.random.default_rng(0))
    assert (len(train), len(dev)) == (7, 3)
    train, dev = split_dataset(records[:2], 0.01, np.random.default_rng(0))
    assert (len(train), len(dev)) == (1, 1)
    with pytest.raises(ConfigError):
        split_dataset(records, 1.0, np.random.default_rng(0))


@pytest.mark.parametrize("text", ["gold", "corrupted@0.25"])
def test_tree_source_round_trip(text: str) -> None:
    assert str(TreeSource.parse(text)) == text


@pytest.mark.parametrize("text", ["silver", "corrupted@2", "corrupted@x", "file:/no/such"])
def test_tree_source_rejects(text: str) -> None:
    with pytest.raises(ConfigError):
        TreeSource.parse(text)


def test_corrupted_trees() -> None:
    records = [factories.tag_record()] * 4
    full = apply_trees(records, TreeSource.parse("corrupted@1"), np.random.default_rng(0))
    assert all(uas(r.tree, factories.tag_record().tree) < 1.0 for r in full)
    assert apply_trees(records, TreeSource.parse("corrupted@0"), np.random.default_rng(0)) == records


def test_trees_from_file(tmp_path: Path) -> None:
    record = factories.tag_record()
    tree = factories.chain_tree(len(record.tokens))
    path = tmp_path / "parsed.conllu"
    path.write_text(write_conllu([ConlluSentence(tokens=record.tokens, tree=tree)]))
    replaced = apply_trees([record], TreeSource.parse(f"file:{path}"), np.random.default_rng(0))
    assert replaced[0].tree == tree
    assert replaced[0].payload == record.payload

    with pytest.raises(DatasetError, match="1 sentences"):
        apply_trees([record, record], TreeSource.parse(f"file:{path}"), np.random.default_rng(0))
