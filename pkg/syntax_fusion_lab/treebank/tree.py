"""Dependency trees, attachment scoring, controlled corruption and LCA pruning.

Heads are 1-based with 0 marking the root token's head, exactly as in CoNLL-U.
Token positions handed to and returned from functions here are 0-based.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
from beartype import beartype
from loguru import logger
from numpy.typing import NDArray

from syntax_fusion_lab.errors import TreeError

# Relation label given to every rewired edge.
CORRUPTED_DEPREL = "corrupted"

Span = tuple[int, int]


def check_heads(heads: tuple[int, ...]) -> None:
    """Raise `TreeError` unless `heads` describes a single-rooted acyclic tree."""
    n = len(heads)
    if n == 0:
        msg = "Tree has no tokens"
        raise TreeError(msg)
    roots = [i for i, head in enumerate(heads) if head == 0]
    if len(roots) != 1:
        msg = f"Tree must have exactly one root, found {len(roots)}"
        raise TreeError(msg)
    for i, head in enumerate(heads):
        if not 0 <= head <= n:
            msg = f"Head {head} of token {i + 1} is outside 0..{n}"
            raise TreeError(msg)
        if head == i + 1:
            msg = f"Token {i + 1} is attached to itself"
            raise TreeError(msg)
    for i in range(n):
        node, steps = i, 0
        while heads[node] != 0:
            node = heads[node] - 1
            steps += 1
            if steps > n:
                msg = f"Cycle detected through token {i + 1}"
                raise TreeError(msg)


@dataclass(frozen=True, kw_only=True)
class DepTree:
    """Token-level dependency tree."""

    heads: tuple[int, ...]
    deprels: tuple[str, ...]

    def __post_init__(self) -> None:
        """Validate single root, acyclicity and label count."""
        check_heads(self.heads)
        if len(self.deprels) != len(self.heads):
            msg = f"{len(self.heads)} heads but {len(self.deprels)} relation labels"
            raise TreeError(msg)

    @property
    def n(self) -> int:
        """Token count."""
        return len(self.heads)

    @cached_property
    def root(self) -> int:
        """0-based position of the root token."""
        return self.heads.index(0)

    def parent(self, i: int) -> int | None:
        """0-based head of token `i`, or None for the root."""
        head = self.heads[i]
        return None if head == 0 else head - 1

    def edges(self) -> list[tuple[str, int, int]]:
        """(relation, head, dependent) triples with 0-based positions, root excluded."""
        return [
            (self.deprels[i], head - 1, i) for i, head in enumerate(self.heads) if head
        ]

    def root_path(self, i: int) -> list[int]:
        """Token `i` followed by its ancestors up to the root."""
        path = [i]
        while (head := self.parent(path[-1])) is not None:
            path.append(head)
        return path

    def descendants(self, i: int) -> set[int]:
        """Tokens in the subtree rooted at `i`, including `i`."""
        return {j for j in range(self.n) if i in self.root_path(j)}


@beartype
def uas(predicted: DepTree, gold: DepTree) -> float:
    """Fraction of tokens whose predicted head equals the gold head."""
    if predicted.n != gold.n:
        msg = f"Cannot score trees of different lengths ({predicted.n} vs {gold.n})"
        raise ValueError(msg)
    matches = sum(p == g for p, g in zip(predicted.heads, gold.heads, strict=True))
    return matches / gold.n


@dataclass(frozen=True, kw_only=True)
class CorruptionResult:
    """A corrupted tree plus how many heads were actually rewired."""

    tree: DepTree
    rewired: int
    warning: bool = False


def _descendants(heads: list[int], i: int) -> set[int]:
    found = {i}
    changed = True
    while changed:
        changed = False
        for j, head in enumerate(heads):
            if head and (head - 1) in found and j not in found:
                found.add(j)
                changed = True
    return found


def corrupt_tree(tree: DepTree, rate: float, rng: np.random.Generator) -> CorruptionResult:
    """Re-attach floor(rate * (n - 1)) non-root tokens to new legal heads.

    Tokens are visited in a random order. Each gets a head drawn uniformly from the
    tokens that are neither itself, its current head, nor one of its descendants, so
    the result stays a valid tree and every rewired token disagrees with the input.
    A token with no legal target at its turn is retried after the others; if it still
    has none it keeps its head, and `rewired` reports the shortfall.
    """
    if not 0.0 <= rate <= 1.0:
        msg = f"Corruption rate must lie in [0, 1], got {rate}"
        raise ValueError(msg)
    if tree.n < 3 and rate > 0:
        logger.warning(f"Tree with {tree.n} tokens cannot be corrupted; left unchanged")
        return CorruptionResult(tree=tree, rewired=0, warning=True)
    target = math.floor(rate * (tree.n - 1))
    if target == 0:
        return CorruptionResult(tree=tree, rewired=0)

    heads = list(tree.heads)
    deprels = list(tree.deprels)
    non_root = [i for i in range(tree.n) if heads[i] != 0]
    pending = [non_root[k] for k in rng.permutation(len(non_root))]
    rewired = 0
    while pending and rewired < target:
        skipped: list[int] = []
        for i in pending:
            if rewired == target:
                break
            blocked = _descendants(heads, i) | {heads[i] - 1}
            candidates = [j for j in range(tree.n) if j not in blocked]
            if not candidates:
                skipped.append(i)
                continue
            heads[i] = candidates[int(rng.integers(len(candidates)))] + 1
            deprels[i] = CORRUPTED_DEPREL
            rewired += 1
        if len(skipped) == len(pending):
            break
        pending = skipped

    if rewired < target:
        logger.debug(f"Rewired {rewired} of {target} requested heads")
    return CorruptionResult(
        tree=DepTree(heads=tuple(heads), deprels=tuple(deprels)), rewired=rewired
    )


def _check_span(span: Span, n: int) -> None:
    start, end = span
    if not 0 <= start < end <= n:
        msg = f"Span {span} is empty or outside [0, {n})"
        raise ValueError(msg)


def lca_prune(tree: DepTree, span_a: Span, span_b: Span) -> NDArray[np.bool_]:
    """Mask of tokens in the subtree rooted at the lowest common ancestor of both spans."""
    _check_span(span_a, tree.n)
    _check_span(span_b, tree.n)
    members = [*range(*span_a), *range(*span_b)]
    common = set(tree.root_path(members[0]))
    for token in members[1:]:
        common &= set(tree.root_path(token))
    # The first common node on any member's path to the root is the deepest one.
    lca = next(node for node in tree.root_path(members[0]) if node in common)
    return np.array([lca in tree.root_path(j) for j in range(tree.n)], dtype=bool)
