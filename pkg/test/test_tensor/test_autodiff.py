"""Tests for the differentiation tape and the finite-difference checker."""

import numpy as np
import pytest

from syntax_fusion_lab.errors import NondeterminismError, TapeError
from syntax_fusion_lab.tensor import (
    Tape,
    Tensor,
    backward,
    functional,
    gelu,
    grad_check,
    layer_norm,
    masked_softmax,
    sum_all,
)


def test_sum_gives_all_ones() -> None:
    x = Tensor(np.random.default_rng(0).normal(size=(3, 4)), requires_grad=True)
    with Tape() as tape:
        loss = sum_all(x)
    tape.backward(loss)
    assert x.grad is not None
    assert np.array_equal(x.grad, np.ones((3, 4)))


def test_half_square_gives_input() -> None:
    x = Tensor(np.random.default_rng(1).normal(size=(5,)), requires_grad=True)
    with Tape() as tape:
        loss = sum_all(x * x) * 0.5
    backward(loss)
    assert x.grad is not None
    assert np.allclose(x.grad, x.data)


def test_reused_input_accumulates() -> None:
    x = Tensor([2.0], requires_grad=True)
    with Tape() as tape:
        loss = sum_all(x * x + x * 3.0)
    tape.backward(loss)
    assert x.grad is not None
    assert x.grad.tolist() == [7.0]


def test_no_tape_records_nothing() -> None:
    x = Tensor([1.0], requires_grad=True)
    y = x * 2.0
    assert y.tape is None
    with pytest.raises(TapeError, match="before forward"):
        backward(sum_all(y))


def test_backward_twice_is_an_error() -> None:
    x = Tensor([1.0, 2.0], requires_grad=True)
    with Tape() as tape:
        loss = sum_all(x)
    tape.backward(loss)
    with pytest.raises(TapeError):
        tape.backward(loss)
    tape.reset()
    with tape:
        loss = sum_all(x)
    tape.backward(loss)
    assert x.grad is not None
    assert x.grad.tolist() == [2.0, 2.0]


def test_backward_needs_scalar() -> None:
    x = Tensor([1.0, 2.0], requires_grad=True)
    with Tape() as tape:
        y = x * 2.0
    with pytest.raises(TapeError, match="scalar"):
        tape.backward(y)


def test_grad_check_matmul_chain() -> None:
    rng = np.random.default_rng(2)
    a = Tensor(rng.normal(size=(3, 4)), name="a")
    b = Tensor(rng.normal(size=(4, 2)), name="b")
    c = Tensor(rng.normal(size=(2, 5)), name="c")
    report = grad_check(lambda: a @ b @ c, [a, b, c], name="matmul")
    assert report.passed, report


def test_grad_check_masked_softmax() -> None:
    rng = np.random.default_rng(3)
    scores = Tensor(rng.normal(size=(4, 4)), name="scores")
    mask = np.tril(np.ones((4, 4), dtype=bool))
    report = grad_check(lambda: masked_softmax(scores, mask), [scores], name="softmax")
    assert report.passed, report


def test_grad_check_layer_norm() -> None:
    rng = np.random.default_rng(4)
    x = Tensor(rng.normal(size=(3, 8)), name="x")
    gain = Tensor(1.0 + 0.1 * rng.normal(size=8), name="gain")
    bias = Tensor(rng.normal(size=8), name="bias")
    report = grad_check(
        lambda: layer_norm(x, gain, bias), [x, gain, bias], tol=1e-5, name="ln"
    )
    assert report.passed, report


def test_grad_check_flags_wrong_rule(monkeypatch: pytest.MonkeyPatch) -> None:
    """A sign error in a backward rule must be reported, not hidden."""
    original = functional._gelu_grad  # noqa: SLF001  # pyright: ignore[reportPrivateUsage]
    monkeypatch.setattr(functional, "_gelu_grad", lambda x: -original(x))
    x = Tensor(np.random.default_rng(5).normal(size=(2, 3)), name="x")
    report = grad_check(lambda: gelu(x), [x], name="gelu")
    assert not report.passed
    assert report.inputs[0].name == "x"


def test_grad_check_detects_nondeterminism() -> None:
    rng = np.random.default_rng(6)
    x = Tensor([1.0], name="x")
    with pytest.raises(NondeterminismError):
        grad_check(lambda: x * float(rng.random()), [x])
