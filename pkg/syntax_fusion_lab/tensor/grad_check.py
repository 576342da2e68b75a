"""Compare analytic gradients against central finite differences."""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from loguru import logger

from syntax_fusion_lab.errors import NondeterminismError
from syntax_fusion_lab.tensor.core import Tape, Tensor, mul
from syntax_fusion_lab.tensor.functional import sum_all

# Relative errors are measured against max(|analytic|, |numeric|, floor), so that
# gradients which are zero on both sides do not divide by zero.
RELATIVE_ERROR_FLOOR = 1e-6


@dataclass(frozen=True, kw_only=True)
class InputCheck:
    """Outcome for one checked input tensor."""

    name: str
    max_rel_error: float
    worst_index: tuple[int, ...]
    passed: bool


@dataclass(frozen=True, kw_only=True)
class GradCheckReport:
    """Outcome for one function, one entry per input."""

    name: str
    tolerance: float
    inputs: tuple[InputCheck, ...]

    @property
    def passed(self) -> bool:
        """True when every entry of every input is within tolerance."""
        return all(check.passed for check in self.inputs)

    @property
    def max_rel_error(self) -> float:
        """Largest relative error over all inputs."""
        return max((check.max_rel_error for check in self.inputs), default=0.0)


def _scalarize(fn: Callable[[], Tensor], weights: np.ndarray | None) -> Tensor:
    out = fn()
    if weights is None:
        return out
    return sum_all(mul(out, Tensor(weights)))


def grad_check(
    fn: Callable[[], Tensor],
    inputs: Sequence[Tensor],
    *,
    h: float = 1e-5,
    tol: float = 1e-6,
    name: str = "",
    rng: np.random.Generator | None = None,
) -> GradCheckReport:
    """Check d fn / d inputs elementwise with (f(x+h) - f(x-h)) / 2h.

    `fn` closes over `inputs` and must be deterministic (dropout disabled). A
    non-scalar output is reduced by a fixed random projection so that every output
    entry contributes.

    Raises:
        NondeterminismError: Two forward passes over the same inputs disagree.

    """
    first = fn().data
    second = fn().data
    if not np.array_equal(first, second):
        msg = f"{name or 'function'}: two forward passes over the same inputs disagree"
        raise NondeterminismError(msg)

    weights = None
    if first.size != 1:
        weights = (rng or np.random.default_rng(0)).standard_normal(first.shape)

    for tensor in inputs:
        tensor.requires_grad = True
        tensor.zero_grad()
    with Tape() as tape:
        loss = _scalarize(fn, weights)
    tape.backward(loss)

    checks: list[InputCheck] = []
    for position, tensor in enumerate(inputs):
        analytic = tensor.grad if tensor.grad is not None else np.zeros(tensor.shape)
        numeric = np.zeros(tensor.shape)
        for index in np.ndindex(*tensor.shape):
            original = tensor.data[index]
            tensor.data[index] = original + h
            plus = _scalarize(fn, weights).item()
            tensor.data[index] = original - h
            minus = _scalarize(fn, weights).item()
            tensor.data[index] = original
            numeric[index] = (plus - minus) / (2.0 * h)

        denominator = np.maximum(
            np.maximum(np.abs(analytic), np.abs(numeric)), RELATIVE_ERROR_FLOOR
        )
        rel_error = np.abs(analytic - numeric) / denominator
        worst = np.unravel_index(int(rel_error.argmax()), rel_error.shape)
        max_error = float(rel_error.max())
        checks.append(
            InputCheck(
                name=tensor.name or f"input{position}",
                max_rel_error=max_error,
                worst_index=tuple(int(i) for i in worst),
                passed=max_error <= tol,
            )
        )

    report = GradCheckReport(name=name, tolerance=tol, inputs=tuple(checks))
    logger.debug(
        f"grad_check {name}: max rel. error {report.max_rel_error:.2e} (tol {tol:.0e})"
    )
    return report
