"""Tests for sentences and the JSON-lines dataset format."""

from pathlib import Path

import pytest

from syntax_fusion_lab.errors import DatasetError
from syntax_fusion_lab.treebank import (
    DatasetRecord,
    DepTree,
    ReInstance,
    Sentence,
    SrlFrame,
    TagSeq,
    payload_task,
    read_records,
    record_from_json,
    write_records,
)
from test.factories import re_sentence, srl_sentence, tag_record, tag_sentence, vocab


def test_payload_tasks() -> None:
    assert payload_task(tag_sentence().payload) == "tag"
    assert payload_task(srl_sentence().payload) == "srl"
    assert payload_task(re_sentence().payload) == "re"


def test_split_token_alignment() -> None:
    sentence = Sentence.from_parts(
        ("shipping", "cat"),
        DepTree(heads=(0, 1), deprels=("root", "obj")),
        TagSeq(tags=("O", "O")),
        vocab(),
    )
    assert sentence.n == 2
    assert sentence.m == 2


def test_non_contiguous_alignment() -> None:
    with pytest.raises(DatasetError, match="contiguous"):
        Sentence(
            tokens=("a", "b"),
            wordpieces=("a", "b", "c"),
            alignment=((0, 1), (2, 3)),
            tree=DepTree(heads=(0, 1), deprels=("root", "x")),
            payload=TagSeq(tags=("O", "O")),
        )


@pytest.mark.parametrize(
    "line",
    [
        {"tokens": ["a"], "heads": [0], "deprels": ["root"]},
        {"tokens": ["a"], "heads": [0], "deprels": ["root"], "tags": ["O", "O"]},
        {"tokens": ["a"], "heads": [0], "deprels": ["root"], "predicate": 3, "tags": ["O"]},
        {"tokens": ["a", "b"], "heads": [0, 1], "deprels": ["root", "x"],
         "subj": [0, 0], "obj": [1, 2], "relation": "r"},
        {"tokens": ["a", "b"], "heads": [0, 0], "deprels": ["root", "x"], "tags": ["O", "O"]},
        {"tokens": ["a", "b"], "heads": ["x", 0], "deprels": ["root", "x"], "tags": ["O", "O"]},
        {"tokens": ["a"], "heads": None, "deprels": ["root"], "tags": ["O"]},
        {"tokens": ["a"], "heads": [0], "deprels": ["root"], "predicate": "v", "tags": ["O"]},
        {"tokens": ["a", "b"], "heads": [0, 1], "deprels": ["root", "x"],
         "subj": ["s", 1], "obj": [1, 2], "relation": "r"},
    ],
    ids=[
        "no payload",
        "tag count",
        "predicate range",
        "empty span",
        "two roots",
        "non-numeric head",
        "null heads",
        "non-numeric predicate",
        "non-numeric span",
    ],
)
def test_invalid_records(line: dict[str, object]) -> None:
    with pytest.raises(DatasetError):
        record_from_json(line)


def test_write_then_read(tmp_path: Path) -> None:
    base = tag_record()
    records = [
        base,
        DatasetRecord(
            tokens=base.tokens,
            tree=base.tree,
            payload=SrlFrame(predicate=2, tags=("O",) * 6),
        ),
        DatasetRecord(
            tokens=base.tokens,
            tree=base.tree,
            payload=ReInstance(subj=(0, 2), obj=(4, 6), relation="likes"),
        ),
    ]
    path = tmp_path / "data.jsonl"
    write_records(path, records)
    assert read_records(path) == records


def test_bad_line_is_located(tmp_path: Path) -> None:
    path = tmp_path / "data.jsonl"
    path.write_text('{"tokens": ["a"], "heads": [0], "deprels": ["root"], "tags": ["O"]}\n{oops\n')
    with pytest.raises(DatasetError, match=r"data.jsonl:2"):
        read_records(path)


def test_mistyped_field_is_located(tmp_path: Path) -> None:
    path = tmp_path / "data.jsonl"
    path.write_text('{"tokens": ["a"], "heads": ["x"], "deprels": ["root"], "tags": ["O"]}\n')
    with pytest.raises(DatasetError, match=r"data.jsonl:1"):
        read_records(path)


def test_non_object_line_is_rejected(tmp_path: Path) -> None:
    path = tmp_path / "data.jsonl"
    path.write_text("[1, 2]\n")
    with pytest.raises(DatasetError, match=r"data.jsonl:1"):
        read_records(path)
