"""Adam with bias correction and a linearly decaying learning rate."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from syntax_fusion_lab.errors import ConfigError, DivergenceError
from syntax_fusion_lab.model.params import ParamStore
from syntax_fusion_lab.tensor import FloatArray

BETA1 = 0.9
BETA2 = 0.999
EPS = 1e-8


@dataclass(kw_only=True)
class OptimState:
    """Moment buffers and schedule position."""

    base_lr: float
    total_steps: int
    step: int = 0
    beta1: float = BETA1
    beta2: float = BETA2
    eps: float = EPS
    first: dict[str, FloatArray] = field(default_factory=dict[str, FloatArray])
    second: dict[str, FloatArray] = field(default_factory=dict[str, FloatArray])

    def __post_init__(self) -> None:
        """Validate the schedule."""
        if self.base_lr <= 0:
            msg = f"base_lr must be positive, got {self.base_lr}"
            raise ConfigError(msg)
        if self.total_steps < 1:
            msg = f"total_steps must be at least 1, got {self.total_steps}"
            raise ConfigError(msg)

    @classmethod
    def for_params(cls, params: ParamStore, *, base_lr: float, total_steps: int) -> OptimState:
        """Zero moments shaped like `params`."""
        return cls(
            base_lr=base_lr,
            total_steps=total_steps,
            first={name: np.zeros(t.shape) for name, t in params.items()},
            second={name: np.zeros(t.shape) for name, t in params.items()},
        )

    def learning_rate(self) -> float:
        """base_lr * (1 - step / total_steps)."""
        return self.base_lr * (1.0 - self.step / self.total_steps)


def adam_step(params: ParamStore, state: OptimState) -> None:
    """Apply one Adam update from the `.grad` of every parameter, in place.

    Parameters without a gradient are treated as having a zero gradient.

    Raises:
        DivergenceError: A gradient contains NaN or Inf; names the parameter.
        ConfigError: The schedule is already exhausted.

    """
    if state.step >= state.total_steps:
        msg = f"Schedule exhausted: step {state.step} of {state.total_steps}"
        raise ConfigError(msg)
    for name, tensor in params.items():
        grad = tensor.grad if tensor.grad is not None else np.zeros(tensor.shape)
        if not np.all(np.isfinite(grad)):
            msg = f"Non-finite gradient for parameter {name} at step {state.step}"
            raise DivergenceError(msg)

    lr = state.learning_rate()
    t = state.step + 1
    correction1 = 1.0 - state.beta1**t
    correction2 = 1.0 - state.beta2**t
    for name, tensor in params.items():
        grad = tensor.grad if tensor.grad is not None else np.zeros(tensor.shape)
        m = state.first[name]
        v = state.second[name]
        m *= state.beta1
        m += (1.0 - state.beta1) * grad
        v *= state.beta2
        v += (1.0 - state.beta2) * grad**2
        tensor.data -= lr * (m / correction1) / (np.sqrt(v / correction2) + state.eps)
    state.step += 1
