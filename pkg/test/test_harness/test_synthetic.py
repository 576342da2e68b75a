"""Tests for the synthetic head-copy task."""

import numpy as np
import pytest

from syntax_fusion_lab.errors import ConfigError
from syntax_fusion_lab.harness import (
    SyntheticSpec,
    make_synthetic,
    sample_heads,
    tree_blind_bayes_accuracy,
)
from syntax_fusion_lab.treebank import TagSeq, check_heads


def test_sampled_heads_form_trees() -> None:
    rng = np.random.default_rng(0)
    for n in range(1, 15):
        heads = sample_heads(n, rng)
        check_heads(heads)
        assert heads.count(0) == 1


def test_tags_copy_the_head_class() -> None:
    spec = SyntheticSpec(vocab_size=12, classes=4, min_len=3, max_len=7)
    records = make_synthetic(spec, 50, np.random.default_rng(1))
    assert len(records) == 50
    for record in records:
        assert 3 <= len(record.tokens) <= 7
        assert isinstance(record.payload, TagSeq)
        types = [int(token[1:]) for token in record.tokens]
        for i, (head, tag) in enumerate(zip(record.tree.heads, record.payload.tags, strict=True)):
            source = types[i] if head == 0 else types[head - 1]
            assert tag == f"B-c{spec.class_of(source)}"


def test_same_seed_same_corpus() -> None:
    spec = SyntheticSpec()
    a = make_synthetic(spec, 5, np.random.default_rng(9))
    b = make_synthetic(spec, 5, np.random.default_rng(9))
    assert a == b


def test_tree_blind_accuracy_range() -> None:
    spec = SyntheticSpec(vocab_size=20, classes=5)
    accuracy = tree_blind_bayes_accuracy(spec, np.random.default_rng(2), samples=300)
    assert 1 / 5 <= accuracy < 1.0


def test_tree_blind_accuracy_single_token() -> None:
    spec = SyntheticSpec(vocab_size=4, classes=4, min_len=1, max_len=1)
    assert tree_blind_bayes_accuracy(spec, np.random.default_rng(3), samples=50) == 1.0


@pytest.mark.parametrize(
    "kwargs",
    [{"vocab_size": 3, "classes": 4}, {"classes": 1}, {"min_len": 5, "max_len": 4}],
)
def test_invalid_spec(kwargs: dict[str, int]) -> None:
    with pytest.raises(ConfigError):
        SyntheticSpec(**kwargs)
