"""Named parameter store and the typed views layers read from it.

Parameters are plain leaf `Tensor`s keyed by dotted names such as
`encoder.layer0.attn.w_q`. Layers never own tensors; they receive a view built
from the store, so the optimizer and the checkpoint code see one flat namespace.
"""

from __future__ import annotations

from collections.abc import Iterator, Mapping
from dataclasses import dataclass

import numpy as np

from syntax_fusion_lab.errors import CompatibilityError
from syntax_fusion_lab.model.config import ModelConfig, Task, Variant
from syntax_fusion_lab.tensor import FloatArray, Tensor


class ParamStore:
    """Ordered mapping from parameter name to leaf tensor."""

    def __init__(self, tensors: Mapping[str, Tensor]) -> None:
        """Adopt `tensors`; each is marked as requiring gradients and named."""
        self._tensors = dict(sorted(tensors.items()))
        for name, tensor in self._tensors.items():
            tensor.name = name
            tensor.requires_grad = True

    def __getitem__(self, name: str) -> Tensor:
        """Tensor called `name`."""
        try:
            return self._tensors[name]
        except KeyError:
            msg = f"No parameter named {name!r}"
            raise CompatibilityError(msg) from None

    def __contains__(self, name: object) -> bool:
        """Whether a parameter called `name` exists."""
        return name in self._tensors

    def __iter__(self) -> Iterator[str]:
        """Names in sorted order."""
        return iter(self._tensors)

    def __len__(self) -> int:
        """Number of named tensors."""
        return len(self._tensors)

    def items(self) -> Iterator[tuple[str, Tensor]]:
        """(name, tensor) pairs in sorted order."""
        return iter(self._tensors.items())

    def num_values(self) -> int:
        """Total scalar count."""
        return sum(t.size for t in self._tensors.values())

    def zero_grad(self) -> None:
        """Clear accumulated gradients."""
        for tensor in self._tensors.values():
            tensor.zero_grad()

    def snapshot(self) -> dict[str, FloatArray]:
        """Copy of every value."""
        return {name: t.data.copy() for name, t in self._tensors.items()}

    def restore(self, snapshot: Mapping[str, FloatArray]) -> None:
        """Overwrite values in place from `snapshot`."""
        for name, tensor in self._tensors.items():
            tensor.data[...] = snapshot[name]

    def assert_finite(self) -> None:
        """Raise `ValueError` naming the first parameter with a NaN or Inf."""
        for name, tensor in self._tensors.items():
            if not np.all(np.isfinite(tensor.data)):
                msg = f"Parameter {name} has non-finite values"
                raise ValueError(msg)


@dataclass(frozen=True, kw_only=True)
class LayerNormParams:
    """Gain and bias of one layer norm."""

    gain: Tensor
    bias: Tensor

    @classmethod
    def view(cls, store: ParamStore, prefix: str) -> LayerNormParams:
        """Read `<prefix>.gain` and `<prefix>.bias`."""
        return cls(gain=store[f"{prefix}.gain"], bias=store[f"{prefix}.bias"])


@dataclass(frozen=True, kw_only=True)
class AttentionParams:
    """Query, key, value and output projections, all d×d."""

    w_q: Tensor
    w_k: Tensor
    w_v: Tensor
    w_o: Tensor

    @classmethod
    def view(cls, store: ParamStore, prefix: str) -> AttentionParams:
        """Read `<prefix>.w_q` and friends."""
        return cls(
            w_q=store[f"{prefix}.w_q"],
            w_k=store[f"{prefix}.w_k"],
            w_v=store[f"{prefix}.w_v"],
            w_o=store[f"{prefix}.w_o"],
        )


@dataclass(frozen=True, kw_only=True)
class FfnParams:
    """Position-wise feed-forward weights."""

    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor

    @classmethod
    def view(cls, store: ParamStore, prefix: str) -> FfnParams:
        """Read `<prefix>.w1` and friends."""
        return cls(
            w1=store[f"{prefix}.w1"],
            b1=store[f"{prefix}.b1"],
            w2=store[f"{prefix}.w2"],
            b2=store[f"{prefix}.b2"],
        )


@dataclass(frozen=True, kw_only=True)
class BlockParams:
    """One transformer-style block: attention, two layer norms, feed-forward."""

    attn: AttentionParams
    ln1: LayerNormParams
    ffn: FfnParams
    ln2: LayerNormParams

    @classmethod
    def view(cls, store: ParamStore, prefix: str) -> BlockParams:
        """Read the block stored under `prefix`."""
        return cls(
            attn=AttentionParams.view(store, f"{prefix}.attn"),
            ln1=LayerNormParams.view(store, f"{prefix}.ln1"),
            ffn=FfnParams.view(store, f"{prefix}.ffn"),
            ln2=LayerNormParams.view(store, f"{prefix}.ln2"),
        )


@dataclass(frozen=True, kw_only=True)
class EncoderParams:
    """Embedding tables plus one block per encoder layer."""

    wordpiece_emb: Tensor
    pos_emb: Tensor
    seg_emb: Tensor
    indicator_emb: Tensor
    layers: tuple[BlockParams, ...]

    @classmethod
    def view(cls, store: ParamStore, layers: int) -> EncoderParams:
        """Read `encoder.*`."""
        return cls(
            wordpiece_emb=store["encoder.wordpiece_emb"],
            pos_emb=store["encoder.pos_emb"],
            seg_emb=store["encoder.seg_emb"],
            indicator_emb=store["encoder.indicator_emb"],
            layers=tuple(
                BlockParams.view(store, f"encoder.layer{i}") for i in range(layers)
            ),
        )


@dataclass(frozen=True, kw_only=True)
class GateParams:
    """Highway gate g = sigmoid(v W_g + b_g)."""

    w_g: Tensor
    b_g: Tensor

    @classmethod
    def view(cls, store: ParamStore) -> GateParams:
        """Read `gate.*`."""
        return cls(w_g=store["gate.w_g"], b_g=store["gate.b_g"])


@dataclass(frozen=True, kw_only=True)
class JointFusionParams:
    """Per encoder layer, projections of the shared graph states into keys and values."""

    p_k: tuple[Tensor, ...]
    p_v: tuple[Tensor, ...]

    @classmethod
    def view(cls, store: ParamStore, layers: int) -> JointFusionParams:
        """Read `joint.layer<i>.p_k` and `joint.layer<i>.p_v`."""
        return cls(
            p_k=tuple(store[f"joint.layer{i}.p_k"] for i in range(layers)),
            p_v=tuple(store[f"joint.layer{i}.p_v"] for i in range(layers)),
        )


@dataclass(frozen=True, kw_only=True)
class CrfParams:
    """Emission projection d×T, transitions T×T, start and end scores."""

    w_e: Tensor
    transitions: Tensor
    start: Tensor
    end: Tensor

    @classmethod
    def view(cls, store: ParamStore) -> CrfParams:
        """Read `head.crf.*`."""
        return cls(
            w_e=store["head.crf.w_e"],
            transitions=store["head.crf.transitions"],
            start=store["head.crf.start"],
            end=store["head.crf.end"],
        )

    @property
    def num_tags(self) -> int:
        """T."""
        return self.transitions.shape[0]


@dataclass(frozen=True, kw_only=True)
class ReHeadParams:
    """Relation classifier over [sentence; subject; object], (3d)×R plus bias."""

    w: Tensor
    b: Tensor

    @classmethod
    def view(cls, store: ParamStore) -> ReHeadParams:
        """Read `head.re.*`."""
        return cls(w=store["head.re.w"], b=store["head.re.b"])


def _block_shapes(prefix: str, d: int, d_ff: int) -> dict[str, tuple[int, ...]]:
    shapes: dict[str, tuple[int, ...]] = {
        f"{prefix}.attn.{w}": (d, d) for w in ("w_q", "w_k", "w_v", "w_o")
    }
    shapes |= {
        f"{prefix}.ffn.w1": (d, d_ff),
        f"{prefix}.ffn.b1": (d_ff,),
        f"{prefix}.ffn.w2": (d_ff, d),
        f"{prefix}.ffn.b2": (d,),
    }
    for ln in ("ln1", "ln2"):
        shapes[f"{prefix}.{ln}.gain"] = (d,)
        shapes[f"{prefix}.{ln}.bias"] = (d,)
    return shapes


def parameter_shapes(config: ModelConfig) -> dict[str, tuple[int, ...]]:
    """Name and shape of every parameter `config` calls for."""
    enc, gnn = config.encoder, config.gnn
    d = config.d_model
    shapes: dict[str, tuple[int, ...]] = {
        "encoder.wordpiece_emb": (enc.vocab_size, d),
        "encoder.pos_emb": (enc.max_len, d),
        "encoder.seg_emb": (enc.segment_types, d),
        "encoder.indicator_emb": (2, d),
    }
    for i in range(enc.layers):
        shapes |= _block_shapes(f"encoder.layer{i}", d, enc.d_ff)
    if config.variant is not Variant.BASELINE:
        for i in range(gnn.layers):
            shapes |= _block_shapes(f"gnn.layer{i}", d, gnn.d_ff)
    if config.variant is Variant.LATE:
        shapes |= {"gate.w_g": (d, d), "gate.b_g": (d,)}
    if config.variant is Variant.JOINT:
        for i in range(enc.layers):
            shapes |= {f"joint.layer{i}.p_k": (d, d), f"joint.layer{i}.p_v": (d, d)}
    labels = len(config.labels)
    if config.task is Task.RE:
        shapes |= {"head.re.w": (3 * d, labels), "head.re.b": (labels,)}
    else:
        shapes |= {
            "head.crf.w_e": (d, labels),
            "head.crf.transitions": (labels, labels),
            "head.crf.start": (labels,),
            "head.crf.end": (labels,),
        }
    return shapes


def init_params(config: ModelConfig, rng: np.random.Generator) -> ParamStore:
    """Fresh parameters: normal(0, init_std) matrices, unit layer-norm gains, zero biases.

    The gate bias starts at `config.gate_bias_init`. Values are drawn in sorted name
    order.
    """
    tensors: dict[str, Tensor] = {}
    for name, shape in sorted(parameter_shapes(config).items()):
        if name.endswith(".gain"):
            value = np.ones(shape)
        elif name == "gate.b_g":
            value = np.full(shape, config.gate_bias_init)
        elif len(shape) == 1:
            value = np.zeros(shape)
        else:
            value = rng.normal(0.0, config.init_std, size=shape)
        tensors[name] = Tensor(value)
    return ParamStore(tensors)
