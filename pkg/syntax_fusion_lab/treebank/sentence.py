"""Sentences with their task payloads, and the JSON-lines dataset format.

Each dataset line holds `tokens`, `heads` (1-based, 0 = root), `deprels` and one
payload: `tags` (tagging), `predicate` + `tags` (SRL), or `subj` + `obj` +
`relation` (relation extraction). Spans are [start, end) token indices.
"""

from __future__ import annotations

import dataclasses
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import orjson
from beartype import beartype
from loguru import logger

from syntax_fusion_lab.errors import DatasetError, TreeError
from syntax_fusion_lab.treebank.tree import DepTree, Span
from syntax_fusion_lab.treebank.wordpiece import Vocab, tokenize


@dataclass(frozen=True, kw_only=True)
class TagSeq:
    """One tag per token."""

    tags: tuple[str, ...]


@dataclass(frozen=True, kw_only=True)
class SrlFrame:
    """Predicate position plus one role tag per token."""

    predicate: int
    tags: tuple[str, ...]


@dataclass(frozen=True, kw_only=True)
class ReInstance:
    """Two entity spans and the relation between them."""

    subj: Span
    obj: Span
    relation: str


Payload = TagSeq | SrlFrame | ReInstance


def payload_task(payload: Payload) -> str:
    """Task name of a payload: 'tag', 'srl' or 're'."""
    match payload:
        case TagSeq():
            return "tag"
        case SrlFrame():
            return "srl"
        case ReInstance():
            return "re"


def _check_payload(payload: Payload, n: int) -> None:
    match payload:
        case TagSeq(tags=tags) | SrlFrame(tags=tags) if len(tags) != n:
            msg = f"{len(tags)} tags for {n} tokens"
            raise DatasetError(msg)
        case SrlFrame(predicate=predicate) if not 0 <= predicate < n:
            msg = f"Predicate index {predicate} outside [0, {n})"
            raise DatasetError(msg)
        case ReInstance(subj=subj, obj=obj):
            for name, (start, end) in (("subj", subj), ("obj", obj)):
                if not 0 <= start < end <= n:
                    msg = f"{name} span {(start, end)} is empty or outside [0, {n})"
                    raise DatasetError(msg)
        case _:
            pass


@dataclass(frozen=True, kw_only=True)
class Sentence:
    """Tokens, wordpieces, their alignment, a tree and a task payload."""

    tokens: tuple[str, ...]
    wordpieces: tuple[str, ...]
    alignment: tuple[tuple[int, int], ...]
    tree: DepTree
    payload: Payload

    def __post_init__(self) -> None:
        """Check alignment coverage, tree length and payload bounds."""
        if len(self.alignment) != len(self.tokens) or self.tree.n != len(self.tokens):
            msg = (
                f"{len(self.tokens)} tokens, {len(self.alignment)} alignment ranges, "
                f"{self.tree.n} tree nodes"
            )
            raise DatasetError(msg)
        cursor = 0
        for start, end in self.alignment:
            if start != cursor or end <= start:
                msg = f"Alignment {self.alignment} is not contiguous and ordered"
                raise DatasetError(msg)
            cursor = end
        if cursor != len(self.wordpieces):
            msg = f"Alignment covers {cursor} of {len(self.wordpieces)} wordpieces"
            raise DatasetError(msg)
        _check_payload(self.payload, len(self.tokens))

    @property
    def n(self) -> int:
        """Token count."""
        return len(self.tokens)

    @property
    def m(self) -> int:
        """Wordpiece count."""
        return len(self.wordpieces)

    @classmethod
    def from_parts(
        cls, tokens: Sequence[str], tree: DepTree, payload: Payload, vocab: Vocab
    ) -> Sentence:
        """Tokenize `tokens` with `vocab` and assemble the sentence."""
        tokenization = tokenize(tokens, vocab)
        return cls(
            tokens=tuple(tokens),
            wordpieces=tokenization.wordpieces,
            alignment=tokenization.alignment,
            tree=tree,
            payload=payload,
        )

    def with_tree(self, tree: DepTree) -> Sentence:
        """Same sentence over a different tree."""
        return dataclasses.replace(self, tree=tree)


@dataclass(frozen=True, kw_only=True)
class DatasetRecord:
    """One dataset line before tokenization."""

    tokens: tuple[str, ...]
    tree: DepTree
    payload: Payload

    def to_sentence(self, vocab: Vocab) -> Sentence:
        """Tokenize with `vocab`."""
        return Sentence.from_parts(self.tokens, self.tree, self.payload, vocab)

    def with_tree(self, tree: DepTree) -> DatasetRecord:
        """Same record over a different tree."""
        return dataclasses.replace(self, tree=tree)


def _span(value: Any, name: str) -> Span:  # noqa: ANN401
    if not (isinstance(value, list) and len(value) == 2):  # pyright: ignore[reportUnknownArgumentType]
        msg = f"{name} must be a [start, end) pair"
        raise DatasetError(msg)
    return int(value[0]), int(value[1])  # pyright: ignore[reportUnknownArgumentType]


def record_from_json(obj: dict[str, Any]) -> DatasetRecord:
    """Build a record from one decoded dataset line.

    Raises:
        DatasetError: a field is missing, mistyped or inconsistent.
    """
    try:
        return _record_from_json(obj)
    except DatasetError:
        raise
    except (TypeError, ValueError, AttributeError) as e:
        msg = f"Malformed record ({e})"
        raise DatasetError(msg) from None


def _record_from_json(obj: dict[str, Any]) -> DatasetRecord:
    try:
        tokens = tuple(str(t) for t in obj["tokens"])
        tree = DepTree(
            heads=tuple(int(h) for h in obj["heads"]),
            deprels=tuple(str(d) for d in obj["deprels"]),
        )
    except KeyError as e:
        msg = f"Missing field {e.args[0]!r}"
        raise DatasetError(msg) from None
    except TreeError as e:
        raise DatasetError(str(e)) from None

    payload: Payload
    if "relation" in obj:
        payload = ReInstance(
            subj=_span(obj.get("subj"), "subj"),
            obj=_span(obj.get("obj"), "obj"),
            relation=str(obj["relation"]),
        )
    elif "predicate" in obj:
        payload = SrlFrame(
            predicate=int(obj["predicate"]), tags=tuple(str(t) for t in obj["tags"])
        )
    elif "tags" in obj:
        payload = TagSeq(tags=tuple(str(t) for t in obj["tags"]))
    else:
        msg = "Record has no payload (tags, predicate+tags, or subj+obj+relation)"
        raise DatasetError(msg)
    _check_payload(payload, len(tokens))
    if tree.n != len(tokens):
        msg = f"{len(tokens)} tokens but {tree.n} heads"
        raise DatasetError(msg)
    return DatasetRecord(tokens=tokens, tree=tree, payload=payload)


def record_to_json(record: DatasetRecord) -> dict[str, Any]:
    """Inverse of `record_from_json`, with fixed key order."""
    obj: dict[str, Any] = {
        "tokens": list(record.tokens),
        "heads": list(record.tree.heads),
        "deprels": list(record.tree.deprels),
    }
    match record.payload:
        case TagSeq(tags=tags):
            obj["tags"] = list(tags)
        case SrlFrame(predicate=predicate, tags=tags):
            obj["predicate"] = predicate
            obj["tags"] = list(tags)
        case ReInstance(subj=subj, obj=obj_span, relation=relation):
            obj["subj"] = list(subj)
            obj["obj"] = list(obj_span)
            obj["relation"] = relation
    return obj


@beartype
def read_records(path: Path) -> list[DatasetRecord]:
    """Read a JSON-lines dataset; errors name the offending line."""
    records: list[DatasetRecord] = []
    with path.open("rb") as fp:
        for number, line in enumerate(fp, start=1):
            if not line.strip():
                continue
            try:
                records.append(record_from_json(orjson.loads(line)))
            except orjson.JSONDecodeError as e:
                msg = f"{path}:{number}: invalid JSON ({e})"
                raise DatasetError(msg) from None
            except DatasetError as e:
                msg = f"{path}:{number}: {e}"
                raise DatasetError(msg) from None
    logger.info(f"Read {len(records)} records from {path}")
    return records


@beartype
def write_records(path: Path, records: Iterable[DatasetRecord]) -> None:
    """Write a JSON-lines dataset."""
    with path.open("wb") as fp:
        for record in records:
            fp.write(orjson.dumps(record_to_json(record), option=orjson.OPT_APPEND_NEWLINE))
