"""Wordpiece vocabulary and greedy longest-match segmentation."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field
from pathlib import Path

from loguru import logger

from syntax_fusion_lab.errors import VocabError

PAD = "[PAD]"
UNK = "[UNK]"
BOS = "[BOS]"
RESERVED = (PAD, UNK, BOS)
CONTINUATION = "##"


@dataclass(frozen=True)
class Vocab:
    """Dense wordpiece <-> id map; ids 0, 1, 2 are [PAD], [UNK], [BOS]."""

    pieces: tuple[str, ...]
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        """Check the reserved prefix and build the reverse index."""
        if self.pieces[: len(RESERVED)] != RESERVED:
            msg = f"Vocabulary must start with {', '.join(RESERVED)}"
            raise VocabError(msg)
        index: dict[str, int] = {}
        for i, piece in enumerate(self.pieces):
            if piece in index:
                msg = f"Duplicate wordpiece {piece!r} at ids {index[piece]} and {i}"
                raise VocabError(msg)
            index[piece] = i
        object.__setattr__(self, "_index", index)

    def __len__(self) -> int:
        """Vocabulary size."""
        return len(self.pieces)

    def __contains__(self, piece: object) -> bool:
        """Whether `piece` has an id."""
        return piece in self._index

    def lookup(self, piece: str) -> int:
        """Id of `piece`, or the [UNK] id."""
        return self._index.get(piece, self._index[UNK])

    def to_string(self, piece_id: int) -> str:
        """Wordpiece with id `piece_id`."""
        return self.pieces[piece_id]

    @classmethod
    def build(cls, words: Iterable[str]) -> Vocab:
        """Whole words plus every character, bare and with the continuation prefix."""
        whole = set(words)
        characters = {ch for word in whole for ch in word}
        pieces = whole | characters | {CONTINUATION + ch for ch in characters}
        return cls(RESERVED + tuple(sorted(pieces - set(RESERVED))))

    @classmethod
    def load(cls, path: Path) -> Vocab:
        """One wordpiece per line; line number is the id."""
        return cls(tuple(path.read_text(encoding="utf-8").splitlines()))

    def save(self, path: Path) -> None:
        """Write one wordpiece per line."""
        path.write_text("\n".join(self.pieces) + "\n", encoding="utf-8")


@dataclass(frozen=True, kw_only=True)
class Tokenization:
    """Wordpieces of a sentence and each token's [start, end) wordpiece range."""

    wordpieces: tuple[str, ...]
    alignment: tuple[tuple[int, int], ...]
    unk_count: int = 0


def split_word(word: str, vocab: Vocab) -> tuple[list[str], int]:
    """Greedy longest-match split of one token; returns pieces and [UNK] count.

    A character no piece covers becomes a single [UNK] and matching resumes after it.
    """
    pieces: list[str] = []
    unknown = 0
    start = 0
    while start < len(word):
        end = len(word)
        match = None
        while end > start:
            candidate = word[start:end] if start == 0 else CONTINUATION + word[start:end]
            if candidate in vocab:
                match = candidate
                break
            end -= 1
        if match is None:
            pieces.append(UNK)
            unknown += 1
            start += 1
        else:
            pieces.append(match)
            start = end
    if not pieces:
        pieces, unknown = [UNK], 1
    return pieces, unknown


def tokenize(tokens: Sequence[str], vocab: Vocab) -> Tokenization:
    """Segment every token and record which wordpieces belong to it."""
    wordpieces: list[str] = []
    alignment: list[tuple[int, int]] = []
    unknown = 0
    for token in tokens:
        pieces, token_unknown = split_word(token, vocab)
        alignment.append((len(wordpieces), len(wordpieces) + len(pieces)))
        wordpieces.extend(pieces)
        unknown += token_unknown
    if unknown:
        logger.warning(f"Substituted {unknown} [UNK] piece(s) in {' '.join(tokens)!r}")
    return Tokenization(
        wordpieces=tuple(wordpieces), alignment=tuple(alignment), unk_count=unknown
    )
