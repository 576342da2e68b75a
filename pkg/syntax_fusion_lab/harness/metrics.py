"""Micro-averaged span and relation scores, per-sentence F1 and line fits."""

from __future__ import annotations

import math
from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from scipy import stats

from syntax_fusion_lab.model.heads import NO_RELATION, LabeledSpan


def f1_score(precision: float, recall: float) -> float:
    """2PR / (P + R), or 0 when both are 0."""
    if precision + recall == 0:
        return 0.0
    return 2 * precision * recall / (precision + recall)


@dataclass(frozen=True, kw_only=True)
class SentenceScore:
    """Counts and F1 of one sentence. `empty` marks no gold and no predicted items."""

    correct: int
    predicted: int
    gold: int

    @property
    def empty(self) -> bool:
        """Nothing predicted and nothing to find."""
        return self.predicted == 0 and self.gold == 0

    @property
    def f1(self) -> float:
        """Sentence F1; 1.0 for empty sentences."""
        if self.empty:
            return 1.0
        precision = self.correct / self.predicted if self.predicted else 0.0
        recall = self.correct / self.gold if self.gold else 0.0
        return f1_score(precision, recall)


@dataclass(frozen=True, kw_only=True)
class MetricsReport:
    """Corpus micro P/R/F1 plus per-sentence scores.

    `empty_support` is set when the corpus has no gold and no predicted items; P, R
    and F1 are then reported as 1.
    """

    precision: float
    recall: float
    f1: float
    correct: int
    predicted: int
    gold: int
    sentences: tuple[SentenceScore, ...]
    token_accuracy: float | None = None
    empty_support: bool = False

    @property
    def per_sentence_f1(self) -> list[float]:
        """F1 of each sentence in dataset order."""
        return [s.f1 for s in self.sentences]

    def summary_line(self) -> str:
        """P=x.xxxx R=x.xxxx F1=x.xxxx."""
        return f"P={self.precision:.4f} R={self.recall:.4f} F1={self.f1:.4f}"


def micro_report(
    sentences: Sequence[SentenceScore], token_accuracy: float | None = None
) -> MetricsReport:
    """Aggregate per-sentence counts into corpus micro scores."""
    correct = sum(s.correct for s in sentences)
    predicted = sum(s.predicted for s in sentences)
    gold = sum(s.gold for s in sentences)
    if predicted == 0 and gold == 0:
        return MetricsReport(
            precision=1.0,
            recall=1.0,
            f1=1.0,
            correct=0,
            predicted=0,
            gold=0,
            sentences=tuple(sentences),
            token_accuracy=token_accuracy,
            empty_support=True,
        )
    precision = correct / predicted if predicted else 0.0
    recall = correct / gold if gold else 0.0
    return MetricsReport(
        precision=precision,
        recall=recall,
        f1=f1_score(precision, recall),
        correct=correct,
        predicted=predicted,
        gold=gold,
        sentences=tuple(sentences),
        token_accuracy=token_accuracy,
    )


def score_spans(predicted: set[LabeledSpan], gold: set[LabeledSpan]) -> SentenceScore:
    """Exact (start, end, label) matches."""
    return SentenceScore(
        correct=len(predicted & gold), predicted=len(predicted), gold=len(gold)
    )


def score_relation(predicted: str, gold: str) -> SentenceScore:
    """One relation instance; `no_relation` counts as neither predicted nor gold."""
    is_predicted = predicted != NO_RELATION
    is_gold = gold != NO_RELATION
    return SentenceScore(
        correct=int(is_predicted and predicted == gold),
        predicted=int(is_predicted),
        gold=int(is_gold),
    )


def span_report(
    predicted: Sequence[set[LabeledSpan]],
    gold: Sequence[set[LabeledSpan]],
    predicted_tags: Sequence[Sequence[str]] | None = None,
    gold_tags: Sequence[Sequence[str]] | None = None,
) -> MetricsReport:
    """Micro span scores; token accuracy too when the tag sequences are given."""
    accuracy = None
    if predicted_tags is not None and gold_tags is not None:
        pairs = [
            (p, g)
            for ps, gs in zip(predicted_tags, gold_tags, strict=True)
            for p, g in zip(ps, gs, strict=True)
        ]
        accuracy = sum(p == g for p, g in pairs) / len(pairs) if pairs else 1.0
    return micro_report(
        [score_spans(p, g) for p, g in zip(predicted, gold, strict=True)], accuracy
    )


def relation_report(predicted: Sequence[str], gold: Sequence[str]) -> MetricsReport:
    """Micro relation scores with `no_relation` excluded."""
    return micro_report(
        [score_relation(p, g) for p, g in zip(predicted, gold, strict=True)]
    )


@dataclass(frozen=True, kw_only=True)
class LineFit:
    """Least-squares line through (x, y) pairs.

    `flag` is "ok", "degenerate" (all x equal, slope undefined) or "too_few" (< 2
    points). Undefined values are NaN.
    """

    slope: float
    intercept: float
    n: int
    flag: str
    r: float = math.nan
    p_value: float = math.nan

    @property
    def defined(self) -> bool:
        """Whether slope and intercept are numbers."""
        return self.flag == "ok"


def fit_line(x: Sequence[float], y: Sequence[float]) -> LineFit:
    """Ordinary least squares of y on x, with Pearson r and its two-sided p-value."""
    xs = np.asarray(x, dtype=np.float64)
    ys = np.asarray(y, dtype=np.float64)
    n = int(xs.size)
    if n < 2:
        return LineFit(slope=math.nan, intercept=math.nan, n=n, flag="too_few")
    if np.all(xs == xs[0]):
        return LineFit(slope=math.nan, intercept=math.nan, n=n, flag="degenerate")
    result = stats.linregress(xs, ys)
    r = float(result.rvalue)  # pyright: ignore[reportAttributeAccessIssue]
    p_value = float(result.pvalue)  # pyright: ignore[reportAttributeAccessIssue]
    return LineFit(
        slope=float(result.slope),  # pyright: ignore[reportAttributeAccessIssue]
        intercept=float(result.intercept),  # pyright: ignore[reportAttributeAccessIssue]
        n=n,
        flag="ok",
        r=r,
        p_value=p_value,
    )
