"""Binary checkpoint format.

Layout, all integers unsigned 32-bit little-endian:

    magic      8 bytes  b"SFLCKPT\\x00"
    version    u32      FORMAT_VERSION
    config     u32 length, then that many bytes of JSON (sorted keys)
    count      u32      number of tensors
    tensors    sorted by name; each is
                 u32 name length, UTF-8 name,
                 u32 rank, rank × u32 dims,
                 prod(dims) little-endian float32 values

Values are stored as float32, so a save → load → save cycle is byte-identical.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Any

import numpy as np
import orjson
from beartype import beartype
from loguru import logger

from syntax_fusion_lab.errors import (
    CheckpointError,
    CheckpointShapeError,
    CheckpointTruncatedError,
    CheckpointVersionError,
    ConfigError,
    VocabError,
)
from syntax_fusion_lab.model import FusionModel, ModelConfig, ParamStore, parameter_shapes
from syntax_fusion_lab.tensor import Tensor
from syntax_fusion_lab.treebank import Vocab

MAGIC = b"SFLCKPT\x00"
FORMAT_VERSION = 1
_U32 = struct.Struct("<I")
_F32 = np.dtype("<f4")


def encode_checkpoint(model: FusionModel) -> bytes:
    """Serialize `model` into checkpoint bytes."""
    header = {
        "model": model.config.to_json(),
        "provenance": dict(model.provenance),
        "vocab": list(model.vocab.pieces),
    }
    config_bytes = orjson.dumps(header, option=orjson.OPT_SORT_KEYS)
    chunks = [MAGIC, _U32.pack(FORMAT_VERSION), _U32.pack(len(config_bytes)), config_bytes]
    chunks.append(_U32.pack(len(model.params)))
    for name, tensor in model.params.items():
        encoded = name.encode()
        chunks += [_U32.pack(len(encoded)), encoded, _U32.pack(tensor.data.ndim)]
        chunks += [_U32.pack(dim) for dim in tensor.shape]
        chunks.append(tensor.data.astype(_F32).tobytes())
    return b"".join(chunks)


@dataclass
class _Reader:
    data: bytes
    offset: int = 0

    def take(self, size: int, what: str) -> bytes:
        if self.offset + size > len(self.data):
            msg = f"Checkpoint truncated while reading {what} at byte {self.offset}"
            raise CheckpointTruncatedError(msg)
        chunk = self.data[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def u32(self, what: str) -> int:
        return int(_U32.unpack(self.take(_U32.size, what))[0])


def decode_checkpoint(data: bytes) -> FusionModel:
    """Rebuild a model from checkpoint bytes.

    Raises:
        CheckpointVersionError: Wrong magic bytes or unsupported version.
        CheckpointTruncatedError: The data ends early.
        CheckpointShapeError: A tensor is missing or has a shape the config disagrees with.
        CheckpointError: The config block is unreadable or bytes trail the last tensor.

    """
    reader = _Reader(data)
    magic = reader.take(len(MAGIC), "magic")
    if magic != MAGIC:
        msg = f"Not a checkpoint: magic bytes {magic!r}"
        raise CheckpointVersionError(msg)
    version = reader.u32("version")
    if version != FORMAT_VERSION:
        msg = f"Checkpoint format version {version}, this build reads {FORMAT_VERSION}"
        raise CheckpointVersionError(msg)
    config_bytes = reader.take(reader.u32("config length"), "config")
    try:
        header: dict[str, Any] = orjson.loads(config_bytes)
        config = ModelConfig.from_json(header["model"])
        vocab = Vocab(tuple(header["vocab"]))
        provenance = {str(k): str(v) for k, v in header.get("provenance", {}).items()}
    except (
        orjson.JSONDecodeError,
        KeyError,
        TypeError,
        AttributeError,
        ValueError,
        ConfigError,
        VocabError,
    ) as e:
        msg = f"Unreadable checkpoint config block: {e}"
        raise CheckpointError(msg) from None

    expected = parameter_shapes(config)
    tensors: dict[str, Tensor] = {}
    for _ in range(reader.u32("tensor count")):
        raw_name = reader.take(reader.u32("name length"), "name")
        try:
            name = raw_name.decode()
        except UnicodeDecodeError:
            msg = f"Tensor name {raw_name!r} is not UTF-8"
            raise CheckpointError(msg) from None
        dims = tuple(reader.u32(f"{name} dims") for _ in range(reader.u32(f"{name} rank")))
        if expected.get(name) != dims:
            msg = f"Tensor {name} has shape {dims}, config expects {expected.get(name)}"
            raise CheckpointShapeError(msg)
        size = int(np.prod(dims, dtype=np.int64)) * _F32.itemsize
        values = np.frombuffer(reader.take(size, name), dtype=_F32).astype(np.float64)
        tensors[name] = Tensor(values.reshape(dims))
    if reader.offset != len(data):
        msg = f"{len(data) - reader.offset} unexpected bytes after the last tensor"
        raise CheckpointError(msg)
    missing = sorted(set(expected) - set(tensors))
    if missing:
        msg = f"Checkpoint lacks tensors {missing}"
        raise CheckpointShapeError(msg)
    return FusionModel(
        config=config, params=ParamStore(tensors), vocab=vocab, provenance=provenance
    )


@beartype
def save_checkpoint(model: FusionModel, path: Path) -> None:
    """Write `model` to `path`."""
    data = encode_checkpoint(model)
    path.write_bytes(data)
    logger.success(f"Saved checkpoint {path} ({len(data)} bytes, {model.params.num_values()} values)")


@beartype
def load_checkpoint(path: Path) -> FusionModel:
    """Read a model from `path`."""
    model = decode_checkpoint(path.read_bytes())
    logger.info(f"Loaded {model.config.variant.value} {model.config.task.value} model from {path}")
    return model
