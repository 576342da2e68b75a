"""Tests for the CoNLL-U reader and writer."""

import pytest

from syntax_fusion_lab.errors import TreeError
from syntax_fusion_lab.treebank import ConlluSentence, DepTree, read_conllu, write_conllu


def _row(*cols: str) -> str:
    return "\t".join(cols)


def test_two_line_block() -> None:
    text = "\n".join(
        [
            _row("1", "a", "_", "_", "_", "_", "2", "det", "_", "_"),
            _row("2", "cat", "_", "_", "_", "_", "0", "root", "_", "_"),
        ]
    )
    (sentence,) = read_conllu(text)
    assert sentence.tokens == ("a", "cat")
    assert sentence.tree.heads == (2, 0)
    assert sentence.tree.deprels == ("det", "root")


def test_comments_and_multiword_ranges_are_skipped() -> None:
    text = "\n".join(
        [
            "# sent_id = 1",
            _row("1-2", "dont", "_", "_", "_", "_", "_", "_", "_", "_"),
            _row("1", "do", "_", "_", "_", "_", "0", "root", "_", "_"),
            _row("2", "nt", "_", "_", "_", "_", "1", "advmod", "_", "_"),
            "",
        ]
    )
    (sentence,) = read_conllu(text)
    assert sentence.tokens == ("do", "nt")


def test_cycle_names_block_and_line() -> None:
    good = "\n".join(
        [
            _row("1", "a", "_", "_", "_", "_", "0", "root", "_", "_"),
            "",
        ]
    )
    bad = "\n".join(
        [
            _row("1", "a", "_", "_", "_", "_", "2", "x", "_", "_"),
            _row("2", "b", "_", "_", "_", "_", "1", "x", "_", "_"),
        ]
    )
    with pytest.raises(TreeError) as info:
        read_conllu(good + "\n" + bad)
    assert info.value.block_index == 1
    assert info.value.line == 3


def test_wrong_column_count() -> None:
    with pytest.raises(TreeError, match="columns"):
        read_conllu("1\ta\t0\troot\n")


def test_write_then_read_keeps_trees() -> None:
    sentences = [
        ConlluSentence(
            tokens=("the", "cat", "sat"),
            tree=DepTree(heads=(2, 3, 0), deprels=("det", "nsubj", "root")),
        ),
        ConlluSentence(tokens=("hi",), tree=DepTree(heads=(0,), deprels=("root",))),
    ]
    assert read_conllu(write_conllu(sentences)) == sentences
