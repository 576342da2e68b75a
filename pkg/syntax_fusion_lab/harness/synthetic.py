"""Synthetic head-copy tagging task.

Every token type has a fixed class. A token's tag is the class of its head; the root
is tagged with its own class. Trees are sampled independently of the tokens, so a
model that cannot see the tree can do little better than guess among the classes
present in the sentence.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from tqdm import tqdm

from syntax_fusion_lab.errors import ConfigError
from syntax_fusion_lab.treebank import DatasetRecord, DepTree, TagSeq, Vocab


@dataclass(frozen=True, kw_only=True)
class SyntheticSpec:
    """Vocabulary size V, class count C and the sentence length range."""

    vocab_size: int = 40
    classes: int = 8
    min_len: int = 5
    max_len: int = 12

    def __post_init__(self) -> None:
        """Require V >= C >= 2 and 1 <= min_len <= max_len."""
        if not self.vocab_size >= self.classes >= 2:
            msg = f"Need vocab_size >= classes >= 2, got V={self.vocab_size} C={self.classes}"
            raise ConfigError(msg)
        if not 1 <= self.min_len <= self.max_len:
            msg = f"Invalid length range [{self.min_len}, {self.max_len}]"
            raise ConfigError(msg)

    def token_types(self) -> list[str]:
        """w00, w01, ... one per vocabulary entry."""
        width = len(str(self.vocab_size - 1))
        return [f"w{i:0{width}d}" for i in range(self.vocab_size)]

    def class_of(self, token_type: int) -> int:
        """Class of a token type (round-robin, so every class is used)."""
        return token_type % self.classes

    def vocab(self) -> Vocab:
        """Vocabulary in which every token type is a single wordpiece."""
        return Vocab.build(self.token_types())


def sample_heads(n: int, rng: np.random.Generator) -> tuple[int, ...]:
    """Uniform-attachment tree over `n` positions visited in random order.

    The first position visited is the root; every later one attaches to a uniformly
    chosen position visited before it. Heads are 1-based, 0 for the root.
    """
    order = rng.permutation(n)
    heads = [0] * n
    for k in range(1, n):
        heads[order[k]] = int(order[rng.integers(k)]) + 1
    return tuple(heads)


def make_synthetic(
    spec: SyntheticSpec, count: int, rng: np.random.Generator
) -> list[DatasetRecord]:
    """`count` head-copy sentences."""
    names = spec.token_types()
    records: list[DatasetRecord] = []
    for _ in tqdm(range(count), desc="synthesizing", leave=False):
        n = int(rng.integers(spec.min_len, spec.max_len + 1))
        types = rng.integers(spec.vocab_size, size=n)
        heads = sample_heads(n, rng)
        tags = tuple(
            f"B-c{spec.class_of(int(types[i] if h == 0 else types[h - 1]))}"
            for i, h in enumerate(heads)
        )
        records.append(
            DatasetRecord(
                tokens=tuple(names[t] for t in types),
                tree=DepTree(heads=heads, deprels=tuple("dep" if h else "root" for h in heads)),
                payload=TagSeq(tags=tags),
            )
        )
    return records


def tree_blind_bayes_accuracy(
    spec: SyntheticSpec, rng: np.random.Generator, samples: int = 2000
) -> float:
    """Monte-Carlo estimate of the best token accuracy achievable without the tree.

    Positions are exchangeable under the tree sampler, so given only the tokens a
    token is the root with probability 1/n and otherwise has a uniformly random other
    token as head. Either way the class posterior is proportional to the class counts
    of the whole sentence, so the best guess is the majority class for every token.
    """
    correct = 0
    total = 0
    for _ in range(samples):
        n = int(rng.integers(spec.min_len, spec.max_len + 1))
        types = rng.integers(spec.vocab_size, size=n)
        counts = np.bincount(types % spec.classes, minlength=spec.classes)
        correct += int(counts.max())
        total += n
    return correct / total
