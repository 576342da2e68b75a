"""Named random streams split from one master seed."""

from __future__ import annotations

import zlib
from typing import Literal

import numpy as np

StreamLabel = Literal[
    "init", "dropout", "shuffle", "split", "corruption", "synthetic", "gradcheck"
]


def stream(seed: int, label: StreamLabel, *extra: int) -> np.random.Generator:
    """Generator for `label` under `seed`; `extra` splits it further (e.g. per epoch).

    Streams with different labels or extras are statistically independent and do not
    shift each other when one of them is consumed more or less.
    """
    key = (zlib.crc32(label.encode()), *extra)
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=key))
