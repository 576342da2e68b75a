"""Read and write the four CoNLL-U columns this project uses (ID, FORM, HEAD, DEPREL)."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from typing import TextIO

from syntax_fusion_lab.errors import TreeError
from syntax_fusion_lab.treebank.tree import DepTree

CONLLU_COLUMNS = 10


@dataclass(frozen=True, kw_only=True)
class ConlluSentence:
    """Surface tokens of one block and their tree."""

    tokens: tuple[str, ...]
    tree: DepTree


def _blocks(lines: Iterable[str]) -> Iterable[list[tuple[int, str]]]:
    """Group (line number, line) pairs into blank-line separated blocks."""
    block: list[tuple[int, str]] = []
    for number, raw in enumerate(lines, start=1):
        line = raw.rstrip("\r\n")
        if line.strip():
            block.append((number, line))
        elif block:
            yield block
            block = []
    if block:
        yield block


def _parse_block(block_index: int, block: list[tuple[int, str]]) -> ConlluSentence:
    tokens: list[str] = []
    heads: list[int] = []
    deprels: list[str] = []
    for number, line in block:
        if line.startswith("#"):
            continue
        columns = line.split("\t")
        if len(columns) != CONLLU_COLUMNS:
            msg = f"Expected {CONLLU_COLUMNS} tab-separated columns, got {len(columns)}"
            raise TreeError(msg, block_index=block_index, line=number)
        token_id = columns[0]
        # Multi-word ranges ("3-4") and empty nodes ("3.1") carry no tree position.
        if "-" in token_id or "." in token_id:
            continue
        if token_id != str(len(tokens) + 1):
            msg = f"Expected token ID {len(tokens) + 1}, got {token_id!r}"
            raise TreeError(msg, block_index=block_index, line=number)
        try:
            head = int(columns[6])
        except ValueError:
            msg = f"Non-integer HEAD {columns[6]!r}"
            raise TreeError(msg, block_index=block_index, line=number) from None
        tokens.append(columns[1])
        heads.append(head)
        deprels.append(columns[7])

    try:
        tree = DepTree(heads=tuple(heads), deprels=tuple(deprels))
    except TreeError as e:
        raise TreeError(str(e), block_index=block_index, line=block[0][0]) from None
    return ConlluSentence(tokens=tuple(tokens), tree=tree)


def read_conllu(source: str | TextIO) -> list[ConlluSentence]:
    """Parse every sentence block of a CoNLL-U text or stream.

    Raises:
        TreeError: Wrong column count, non-integer HEAD, several roots or a cycle.
            The message names the 0-based block index and 1-based line number.

    """
    text = source if isinstance(source, str) else source.read()
    return [
        _parse_block(index, block)
        for index, block in enumerate(_blocks(text.splitlines()))
    ]


def write_conllu(sentences: Sequence[ConlluSentence]) -> str:
    """Render sentences as CoNLL-U, filling unused columns with '_'."""
    blocks: list[str] = []
    for sentence in sentences:
        rows = [
            "\t".join(
                (str(i + 1), form, "_", "_", "_", "_", str(head), deprel, "_", "_")
            )
            for i, (form, head, deprel) in enumerate(
                zip(
                    sentence.tokens,
                    sentence.tree.heads,
                    sentence.tree.deprels,
                    strict=True,
                )
            )
        ]
        blocks.append("\n".join(rows) + "\n")
    return "\n".join(blocks)
