"""Model configuration: encoder and graph-encoder sizes, fusion variant, task head."""

from __future__ import annotations

from dataclasses import dataclass
from enum import StrEnum
from typing import Any

import numpy as np

from syntax_fusion_lab.errors import ConfigError


class Variant(StrEnum):
    """How syntax enters the model."""

    BASELINE = "baseline"
    LATE = "late"
    JOINT = "joint"


class JointMode(StrEnum):
    """How Joint Fusion combines syntax keys/values with the encoder's own."""

    CONCAT = "concat"
    ADD = "add"


class Task(StrEnum):
    """Dataset payload the head is built for."""

    TAG = "tag"
    SRL = "srl"
    RE = "re"


def _check_counts(owner: str, **counts: int) -> None:
    for name, value in counts.items():
        if value < 1:
            msg = f"{owner}.{name} must be at least 1, got {value}"
            raise ConfigError(msg)


def _check_dropout(owner: str, p: float) -> None:
    if not 0.0 <= p < 1.0:
        msg = f"{owner}.dropout_p must lie in [0, 1), got {p}"
        raise ConfigError(msg)


@dataclass(frozen=True, kw_only=True)
class EncoderConfig:
    """Sequence encoder sizes. `layers` may be 0, in which case encoding is embedding."""

    vocab_size: int
    layers: int = 4
    heads: int = 4
    d_model: int = 64
    d_ff: int = 256
    max_len: int = 64
    dropout_p: float = 0.1
    segment_types: int = 2

    def __post_init__(self) -> None:
        """Validate sizes."""
        if self.layers < 0:
            msg = f"encoder.layers must be non-negative, got {self.layers}"
            raise ConfigError(msg)
        _check_counts(
            "encoder",
            vocab_size=self.vocab_size,
            heads=self.heads,
            d_model=self.d_model,
            d_ff=self.d_ff,
            max_len=self.max_len,
            segment_types=self.segment_types,
        )
        if self.d_model % self.heads:
            msg = f"encoder.d_model={self.d_model} is not divisible by heads={self.heads}"
            raise ConfigError(msg)
        _check_dropout("encoder", self.dropout_p)

    @property
    def head_width(self) -> int:
        """Per-head width d_model / heads."""
        return self.d_model // self.heads


@dataclass(frozen=True, kw_only=True)
class GnnConfig:
    """Graph-attention encoder sizes. `layers` may be 0 (identity)."""

    layers: int = 4
    heads: int = 4
    d_model: int = 64
    d_ff: int = 256
    dropout_p: float = 0.1

    def __post_init__(self) -> None:
        """Validate sizes."""
        if self.layers < 0:
            msg = f"gnn.layers must be non-negative, got {self.layers}"
            raise ConfigError(msg)
        _check_counts("gnn", heads=self.heads, d_model=self.d_model, d_ff=self.d_ff)
        if self.d_model % self.heads:
            msg = f"gnn.d_model={self.d_model} is not divisible by heads={self.heads}"
            raise ConfigError(msg)
        _check_dropout("gnn", self.dropout_p)

    @property
    def head_width(self) -> int:
        """Per-head width d_model / heads."""
        return self.d_model // self.heads


@dataclass(frozen=True, kw_only=True)
class ModelConfig:
    """Everything needed to rebuild a model's parameter shapes."""

    task: Task
    labels: tuple[str, ...]
    encoder: EncoderConfig
    gnn: GnnConfig
    variant: Variant = Variant.LATE
    joint_mode: JointMode = JointMode.CONCAT
    crf_constrained: bool = False
    gate_bias_init: float = 2.0
    init_std: float = 0.02

    def __post_init__(self) -> None:
        """Check that encoder and graph encoder share a width and labels are usable."""
        if self.encoder.d_model != self.gnn.d_model:
            msg = (
                f"encoder.d_model={self.encoder.d_model} and "
                f"gnn.d_model={self.gnn.d_model} must match"
            )
            raise ConfigError(msg)
        if not self.labels:
            msg = "Model needs at least one label"
            raise ConfigError(msg)
        if len(set(self.labels)) != len(self.labels):
            msg = f"Duplicate labels in {self.labels}"
            raise ConfigError(msg)
        if self.init_std <= 0:
            msg = f"init_std must be positive, got {self.init_std}"
            raise ConfigError(msg)

    @property
    def d_model(self) -> int:
        """Shared hidden width."""
        return self.encoder.d_model

    @property
    def uses_tree(self) -> bool:
        """Whether forward passes read the dependency tree."""
        return self.variant is not Variant.BASELINE

    def to_json(self) -> dict[str, Any]:
        """Plain-JSON form, stable under `from_json`."""
        return {
            "task": self.task.value,
            "labels": list(self.labels),
            "variant": self.variant.value,
            "joint_mode": self.joint_mode.value,
            "crf_constrained": self.crf_constrained,
            "gate_bias_init": self.gate_bias_init,
            "init_std": self.init_std,
            "encoder": {
                "vocab_size": self.encoder.vocab_size,
                "layers": self.encoder.layers,
                "heads": self.encoder.heads,
                "d_model": self.encoder.d_model,
                "d_ff": self.encoder.d_ff,
                "max_len": self.encoder.max_len,
                "dropout_p": self.encoder.dropout_p,
                "segment_types": self.encoder.segment_types,
            },
            "gnn": {
                "layers": self.gnn.layers,
                "heads": self.gnn.heads,
                "d_model": self.gnn.d_model,
                "d_ff": self.gnn.d_ff,
                "dropout_p": self.gnn.dropout_p,
            },
        }

    @classmethod
    def from_json(cls, obj: dict[str, Any]) -> ModelConfig:
        """Inverse of `to_json`; unknown or missing keys raise `ConfigError`."""
        try:
            return cls(
                task=Task(obj["task"]),
                labels=tuple(obj["labels"]),
                variant=Variant(obj["variant"]),
                joint_mode=JointMode(obj["joint_mode"]),
                crf_constrained=bool(obj["crf_constrained"]),
                gate_bias_init=float(obj["gate_bias_init"]),
                init_std=float(obj["init_std"]),
                encoder=EncoderConfig(**obj["encoder"]),
                gnn=GnnConfig(**obj["gnn"]),
            )
        except (KeyError, TypeError, ValueError) as e:
            if isinstance(e, ConfigError):
                raise
            msg = f"Invalid model configuration: {e}"
            raise ConfigError(msg) from None


@dataclass(frozen=True, kw_only=True)
class RunMode:
    """Training or evaluation, plus the stream dropout masks are drawn from."""

    training: bool = False
    rng: np.random.Generator | None = None

    @classmethod
    def train(cls, rng: np.random.Generator) -> RunMode:
        """Dropout on, masks drawn from `rng`."""
        return cls(training=True, rng=rng)


EVAL = RunMode()
