"""Tests for span and relation scores and line fits."""

import math

import pytest

from syntax_fusion_lab.harness import fit_line, relation_report, span_report
from syntax_fusion_lab.harness.metrics import SentenceScore


def test_span_micro_scores() -> None:
    predicted = [{(0, 1, "A"), (2, 3, "B")}]
    gold = [{(0, 1, "A"), (3, 4, "B"), (5, 6, "A"), (7, 9, "B")}]
    report = span_report(predicted, gold)
    assert (report.correct, report.predicted, report.gold) == (1, 2, 4)
    assert report.precision == 0.5
    assert report.recall == 0.25
    assert report.f1 == pytest.approx(1 / 3)
    assert report.summary_line() == "P=0.5000 R=0.2500 F1=0.3333"


def test_no_predictions() -> None:
    report = span_report([set()], [{(0, 2, "A")}])
    assert (report.precision, report.recall, report.f1) == (0.0, 0.0, 0.0)
    assert not report.empty_support


def test_token_accuracy() -> None:
    report = span_report(
        [{(0, 1, "A")}], [{(0, 1, "A")}], [["B-A", "O", "O"]], [["B-A", "O", "B-A"]]
    )
    assert report.token_accuracy == pytest.approx(2 / 3)


def test_relation_scores_skip_no_relation() -> None:
    report = relation_report(
        ["likes", "no_relation", "owns", "likes"],
        ["likes", "owns", "no_relation", "owns"],
    )
    assert (report.correct, report.predicted, report.gold) == (1, 3, 3)


def test_relation_empty_support() -> None:
    report = relation_report(["no_relation"], ["no_relation"])
    assert report.empty_support
    assert report.f1 == 1.0


def test_sentence_f1() -> None:
    assert SentenceScore(correct=0, predicted=0, gold=0).f1 == 1.0
    assert SentenceScore(correct=1, predicted=1, gold=2).f1 == pytest.approx(2 / 3)
    assert SentenceScore(correct=0, predicted=1, gold=0).f1 == 0.0


def test_fit_line_exact() -> None:
    fit = fit_line([80.0, 90.0, 100.0], [-2.0, -1.0, 0.0])
    assert fit.defined
    assert fit.slope == pytest.approx(0.1)
    assert fit.intercept == pytest.approx(-10.0)
    assert fit.r == pytest.approx(1.0)


def test_fit_line_degenerate() -> None:
    fit = fit_line([1.0, 1.0, 1.0], [0.0, 1.0, 2.0])
    assert fit.flag == "degenerate"
    assert math.isnan(fit.slope)
    assert fit_line([1.0], [2.0]).flag == "too_few"
