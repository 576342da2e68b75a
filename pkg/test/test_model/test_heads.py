"""Tests for the CRF, Viterbi decoding, BIO spans and the relation head."""

import itertools
import math

import numpy as np
import pytest
from scipy.special import logsumexp

from syntax_fusion_lab.model import (
    TagSet,
    bio_penalty,
    classification_loss,
    crf_log_likelihood,
    extract_spans,
    re_classify,
    viterbi_decode,
)
from syntax_fusion_lab.model.heads import render_tags, sequence_score
from syntax_fusion_lab.model.params import CrfParams, ReHeadParams
from syntax_fusion_lab.tensor import Tensor


def _crf(rng: np.random.Generator, d: int, t: int, scale: float = 1.0) -> CrfParams:
    return CrfParams(
        w_e=Tensor(rng.normal(0.0, scale, size=(d, t))),
        transitions=Tensor(rng.normal(0.0, scale, size=(t, t))),
        start=Tensor(rng.normal(0.0, scale, size=t)),
        end=Tensor(rng.normal(0.0, scale, size=t)),
    )


def _all_scores(states: Tensor, crf: CrfParams) -> dict[tuple[int, ...], float]:
    emissions = (states @ crf.w_e).data
    n, t = emissions.shape
    return {
        path: sequence_score(
            emissions, crf.transitions.data, crf.start.data, crf.end.data, path
        )
        for path in itertools.product(range(t), repeat=n)
    }


def test_single_tag_likelihood_is_zero() -> None:
    rng = np.random.default_rng(0)
    states = Tensor(rng.normal(size=(5, 4)))
    assert crf_log_likelihood(states, [0] * 5, _crf(rng, 4, 1)).item() == 0.0


def test_uniform_single_token() -> None:
    crf = CrfParams(
        w_e=Tensor(np.zeros((2, 3))),
        transitions=Tensor(np.zeros((3, 3))),
        start=Tensor(np.zeros(3)),
        end=Tensor(np.zeros(3)),
    )
    value = crf_log_likelihood(Tensor(np.ones((1, 2))), [1], crf).item()
    assert value == pytest.approx(-math.log(3.0))


def test_likelihood_matches_enumeration() -> None:
    rng = np.random.default_rng(1)
    for _ in range(20):
        n, t = int(rng.integers(1, 5)), int(rng.integers(2, 4))
        states = Tensor(rng.normal(size=(n, 3)))
        crf = _crf(rng, 3, t)
        scores = _all_scores(states, crf)
        gold = [int(y) for y in rng.integers(t, size=n)]
        expected = scores[tuple(gold)] - logsumexp(list(scores.values()))
        assert crf_log_likelihood(states, gold, crf).item() == pytest.approx(expected, abs=1e-9)


def test_likelihood_is_never_positive() -> None:
    rng = np.random.default_rng(2)
    for _ in range(20):
        crf = _crf(rng, 3, 4, scale=5.0)
        gold = [int(y) for y in rng.integers(4, size=6)]
        assert crf_log_likelihood(Tensor(rng.normal(size=(6, 3))), gold, crf).item() <= 1e-12


def test_viterbi_matches_brute_force() -> None:
    rng = np.random.default_rng(3)
    for _ in range(30):
        n, t = int(rng.integers(1, 7)), int(rng.integers(1, 6))
        states = Tensor(rng.normal(size=(n, 3)))
        crf = _crf(rng, 3, t)
        scores = _all_scores(states, crf)
        best = max(scores, key=lambda p: scores[p])
        path, score = viterbi_decode(states, crf)
        assert tuple(path) == best
        assert score == pytest.approx(scores[best])


def test_viterbi_single_tag() -> None:
    rng = np.random.default_rng(4)
    path, _ = viterbi_decode(Tensor(rng.normal(size=(4, 3))), _crf(rng, 3, 1))
    assert path == [0, 0, 0, 0]


def test_viterbi_without_transitions_is_argmax() -> None:
    rng = np.random.default_rng(5)
    crf = _crf(rng, 3, 4)
    for t in (crf.transitions, crf.start, crf.end):
        t.data[...] = 0.0
    states = Tensor(rng.normal(size=(6, 3)))
    path, _ = viterbi_decode(states, crf)
    assert path == (states @ crf.w_e).data.argmax(axis=1).tolist()


def test_constrained_decoding_is_valid_bio() -> None:
    tagset = TagSet(("O", "B-A", "I-A", "B-B", "I-B"))
    penalty = bio_penalty(tagset)
    rng = np.random.default_rng(6)
    for _ in range(30):
        crf = _crf(rng, 3, len(tagset), scale=3.0)
        path, _ = viterbi_decode(Tensor(rng.normal(size=(7, 3))), crf, penalty)
        tags = tagset.decode(path)
        assert render_tags(extract_spans(tags), len(tags)) == tags


def test_tagset_from_sequences() -> None:
    tagset = TagSet.from_sequences([["B-LOC", "O"], ["I-PER"]])
    assert tagset.tags == ("O", "B-LOC", "I-LOC", "B-PER", "I-PER")
    assert tagset.decode(tagset.encode(["I-PER", "O"])) == ["I-PER", "O"]


@pytest.mark.parametrize(
    ("tags", "spans"),
    [
        (["B-A", "I-A", "O"], {(0, 2, "A")}),
        (["I-A", "O", "B-A"], {(0, 1, "A"), (2, 3, "A")}),
        (["O", "O"], set()),
        (["B-A", "I-B", "I-B"], {(0, 1, "A"), (1, 3, "B")}),
    ],
)
def test_extract_spans(tags: list[str], spans: set[tuple[int, int, str]]) -> None:
    assert extract_spans(tags) == spans


def _re_head(rng: np.random.Generator, d: int, r: int) -> ReHeadParams:
    return ReHeadParams(w=Tensor(rng.normal(size=(3 * d, r))), b=Tensor(rng.normal(size=r)))


def test_relation_single_token() -> None:
    rng = np.random.default_rng(7)
    states = Tensor(rng.normal(size=(1, 4)))
    head = _re_head(rng, 4, 3)
    scores = re_classify(states, (0, 1), (0, 1), np.array([True]), head)
    pooled = np.concatenate([states.data[0]] * 3)
    assert np.allclose(scores.data[0], pooled @ head.w.data + head.b.data)


def test_relation_constant_states_ignore_mask() -> None:
    rng = np.random.default_rng(8)
    states = Tensor(np.tile(rng.normal(size=4), (5, 1)))
    head = _re_head(rng, 4, 3)
    a = re_classify(states, (0, 1), (3, 5), np.array([True] * 5), head)
    b = re_classify(states, (0, 1), (3, 5), np.array([False, False, True, False, False]), head)
    assert np.array_equal(a.data, b.data)


def test_classification_loss() -> None:
    scores = Tensor([[1.0, 2.0, 3.0]])
    expected = logsumexp([1.0, 2.0, 3.0]) - 2.0
    assert classification_loss(scores, 1).item() == pytest.approx(expected)
