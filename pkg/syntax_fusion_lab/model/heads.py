"""Task heads: linear-chain CRF with Viterbi decoding, BIO spans, relation classifier."""

from __future__ import annotations

from collections.abc import Iterable, Sequence
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from syntax_fusion_lab.errors import DatasetError
from syntax_fusion_lab.model.params import CrfParams, ReHeadParams
from syntax_fusion_lab.tensor import (
    FloatArray,
    Tensor,
    concat,
    logsumexp,
    max_rows,
    pick,
    reshape,
    take_rows,
)
from syntax_fusion_lab.treebank import Span

OUTSIDE = "O"
NO_RELATION = "no_relation"
# Score given to forbidden BIO transitions when the CRF is constrained. Large enough
# to never win, small enough to keep every intermediate value finite.
FORBIDDEN = -1e4

LabeledSpan = tuple[int, int, str]


@dataclass(frozen=True)
class TagSet:
    """Ordered BIO tags: "O" first, then B-X / I-X pairs sorted by label."""

    tags: tuple[str, ...]
    _index: dict[str, int] = field(init=False, repr=False, compare=False)

    def __post_init__(self) -> None:
        """Check "O" is present and every I-X has its B-X."""
        if OUTSIDE not in self.tags:
            msg = f"Tag set {self.tags} lacks {OUTSIDE!r}"
            raise DatasetError(msg)
        for tag in self.tags:
            if tag.startswith("I-") and f"B-{tag[2:]}" not in self.tags:
                msg = f"Tag {tag} has no matching B-{tag[2:]}"
                raise DatasetError(msg)
            if tag != OUTSIDE and not tag.startswith(("B-", "I-")):
                msg = f"Tag {tag!r} is not in BIO form"
                raise DatasetError(msg)
        object.__setattr__(self, "_index", {t: i for i, t in enumerate(self.tags)})

    def __len__(self) -> int:
        """T."""
        return len(self.tags)

    @classmethod
    def from_sequences(cls, sequences: Iterable[Sequence[str]]) -> TagSet:
        """Every label seen, with B- and I- forms for each, "O" first."""
        labels = {tag[2:] for tags in sequences for tag in tags if tag != OUTSIDE}
        ordered = [OUTSIDE]
        for label in sorted(labels):
            ordered += [f"B-{label}", f"I-{label}"]
        return cls(tuple(ordered))

    def encode(self, tags: Sequence[str]) -> list[int]:
        """Ids of `tags`; unknown tags raise `DatasetError`."""
        try:
            return [self._index[tag] for tag in tags]
        except KeyError as e:
            msg = f"Tag {e.args[0]!r} is not in the model's tag set"
            raise DatasetError(msg) from None

    def decode(self, ids: Sequence[int]) -> list[str]:
        """Tags of `ids`."""
        return [self.tags[i] for i in ids]


def bio_penalty(tagset: TagSet) -> tuple[FloatArray, FloatArray]:
    """Transition and start penalties forbidding I-X unless after B-X or I-X."""
    t = len(tagset)
    transitions = np.zeros((t, t))
    start = np.zeros(t)
    for j, tag in enumerate(tagset.tags):
        if not tag.startswith("I-"):
            continue
        start[j] = FORBIDDEN
        allowed = {f"B-{tag[2:]}", tag}
        for i, previous in enumerate(tagset.tags):
            if previous not in allowed:
                transitions[i, j] = FORBIDDEN
    return transitions, start


@dataclass(frozen=True, kw_only=True)
class CrfScores:
    """Emission, transition, start and end scores of one sentence."""

    emissions: Tensor
    transitions: Tensor
    start: Tensor
    end: Tensor

    @classmethod
    def build(
        cls,
        states: Tensor,
        params: CrfParams,
        penalty: tuple[FloatArray, FloatArray] | None = None,
    ) -> CrfScores:
        """Project token states to emissions; fold in BIO penalties when given."""
        t = params.num_tags
        transitions = params.transitions
        start = reshape(params.start, (1, t))
        if penalty is not None:
            transitions = transitions + Tensor(penalty[0])
            start = start + Tensor(penalty[1][None, :])
        return cls(
            emissions=states @ params.w_e,
            transitions=transitions,
            start=start,
            end=reshape(params.end, (1, t)),
        )


def crf_log_likelihood(
    states: Tensor,
    gold: Sequence[int],
    params: CrfParams,
    penalty: tuple[FloatArray, FloatArray] | None = None,
) -> Tensor:
    """log p(gold | states) = score(gold) - log Z; never positive.

    The gold path is accumulated in the same order as the forward recursion, so a
    single-tag model scores exactly 0.
    """
    n = states.shape[0]
    t = params.num_tags
    if len(gold) != n:
        msg = f"{len(gold)} gold tags for {n} tokens"
        raise ValueError(msg)
    if any(not 0 <= y < t for y in gold):
        msg = f"Gold tag id outside [0, {t}) in {list(gold)}"
        raise ValueError(msg)
    s = CrfScores.build(states, params, penalty)

    score = pick(s.start, [0], [gold[0]]) + pick(s.emissions, [0], [gold[0]])
    alpha = s.start + take_rows(s.emissions, [0])
    for i in range(1, n):
        score = score + pick(s.transitions, [gold[i - 1]], [gold[i]])
        score = score + pick(s.emissions, [i], [gold[i]])
        alpha = logsumexp(alpha.T + s.transitions, axis=0, keepdims=True)
        alpha = alpha + take_rows(s.emissions, [i])
    score = score + pick(s.end, [0], [gold[-1]])
    log_z = logsumexp(alpha + s.end)
    return reshape(score, ()) - log_z


def sequence_score(
    emissions: FloatArray,
    transitions: FloatArray,
    start: FloatArray,
    end: FloatArray,
    tags: Sequence[int],
) -> float:
    """Unnormalized CRF score of one tag sequence, on plain arrays."""
    total = start[tags[0]] + emissions[0, tags[0]]
    for i in range(1, len(tags)):
        total += transitions[tags[i - 1], tags[i]] + emissions[i, tags[i]]
    return float(total + end[tags[-1]])


def viterbi_decode(
    states: Tensor,
    params: CrfParams,
    penalty: tuple[FloatArray, FloatArray] | None = None,
) -> tuple[list[int], float]:
    """Highest-scoring tag sequence and its score; ties go to the lowest tag id."""
    s = CrfScores.build(states, params, penalty)
    emissions = s.emissions.data
    transitions = s.transitions.data
    n = emissions.shape[0]

    delta = s.start.data[0] + emissions[0]
    backpointers: list[NDArray[np.intp]] = []
    for i in range(1, n):
        candidates = delta[:, None] + transitions
        best_previous = candidates.argmax(axis=0)
        backpointers.append(best_previous)
        delta = candidates[best_previous, np.arange(len(delta))] + emissions[i]
    final = delta + s.end.data[0]
    last = int(final.argmax())
    path = [last]
    for pointers in reversed(backpointers):
        path.append(int(pointers[path[-1]]))
    path.reverse()
    return path, float(final[last])


def extract_spans(tags: Sequence[str]) -> set[LabeledSpan]:
    """Maximal B-X (I-X)* runs as [start, end) spans.

    An I-X that does not continue a run of the same label opens a new span.
    """
    spans: set[LabeledSpan] = set()
    start: int | None = None
    label = ""
    for i, tag in enumerate(tags):
        continues = tag.startswith("I-") and start is not None and tag[2:] == label
        if continues:
            continue
        if start is not None:
            spans.add((start, i, label))
            start = None
        if tag.startswith(("B-", "I-")):
            start, label = i, tag[2:]
    if start is not None:
        spans.add((start, len(tags), label))
    return spans


def render_tags(spans: Iterable[LabeledSpan], n: int) -> list[str]:
    """BIO tags of non-overlapping spans over `n` tokens."""
    tags = [OUTSIDE] * n
    for start, end, label in spans:
        tags[start] = f"B-{label}"
        for i in range(start + 1, end):
            tags[i] = f"I-{label}"
    return tags


def re_classify(
    states: Tensor,
    subj: Span,
    obj: Span,
    prune_mask: NDArray[np.bool_],
    params: ReHeadParams,
) -> Tensor:
    """Relation scores (1×R) from max-pooled [sentence; subject; object] vectors."""
    kept = np.flatnonzero(prune_mask)
    if kept.size == 0:
        msg = "re_classify: prune mask keeps no token"
        raise ValueError(msg)
    pooled = concat(
        [
            max_rows(states, kept.tolist()),
            max_rows(states, list(range(*subj))),
            max_rows(states, list(range(*obj))),
        ],
        axis=1,
    )
    return pooled @ params.w + params.b


def classification_loss(scores: Tensor, gold: int) -> Tensor:
    """Cross-entropy of a 1×R score row against class `gold`."""
    return logsumexp(scores) - reshape(pick(scores, [0], [gold]), ())
