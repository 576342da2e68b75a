"""Wordpiece-level dependency graph consumed by graph attention.

Token edges connect the first wordpieces of head and dependent. Inside a token split
into several pieces, the first piece is linked to each of the others. Every edge is
made symmetric and each node gets a self-loop, so no neighborhood is ever empty.
"""

from __future__ import annotations

from collections.abc import Iterable, Mapping, Sequence
from dataclasses import dataclass
from enum import StrEnum

import numpy as np
from numpy.typing import NDArray

from syntax_fusion_lab.treebank.tree import DepTree


class EdgeOrigin(StrEnum):
    """Why an edge exists."""

    TREE = "tree"
    SUBWORD = "subword"
    SELF = "self"


@dataclass(frozen=True, kw_only=True)
class WordpieceGraph:
    """Symmetric adjacency lists with self-loops over `m` wordpieces."""

    m: int
    adjacency: tuple[tuple[int, ...], ...]
    origins: Mapping[tuple[int, int], EdgeOrigin]

    @classmethod
    def from_edges(
        cls, m: int, edges: Iterable[tuple[int, int, EdgeOrigin]]
    ) -> WordpieceGraph:
        """Symmetrize `edges` and add a self-loop on every node."""
        neighbors: list[set[int]] = [{i} for i in range(m)]
        origins: dict[tuple[int, int], EdgeOrigin] = {
            (i, i): EdgeOrigin.SELF for i in range(m)
        }
        for i, j, origin in edges:
            neighbors[i].add(j)
            neighbors[j].add(i)
            origins.setdefault((i, j), origin)
            origins.setdefault((j, i), origin)
        return cls(
            m=m,
            adjacency=tuple(tuple(sorted(n)) for n in neighbors),
            origins=origins,
        )

    def degree(self, i: int) -> int:
        """Size of the neighborhood of `i`, self included."""
        return len(self.adjacency[i])

    def adjacency_mask(self) -> NDArray[np.bool_]:
        """Boolean m×m matrix, True where j is a neighbor of i."""
        mask = np.zeros((self.m, self.m), dtype=bool)
        for i, neighbors in enumerate(self.adjacency):
            mask[i, list(neighbors)] = True
        return mask

    def undirected_edge_count(self) -> int:
        """Edges counted once per unordered pair, self-loops excluded."""
        return sum(1 for i, row in enumerate(self.adjacency) for j in row if j > i)


def build_wordpiece_graph(
    tree: DepTree,
    alignment: Sequence[tuple[int, int]],
    keep: NDArray[np.bool_] | None = None,
) -> WordpieceGraph:
    """Extend a token tree to wordpieces.

    With `keep`, only tree edges whose two tokens are both kept survive; subword
    edges and self-loops are always present. This is how relation instances restrict
    the graph to the pruned subtree.
    """
    if len(alignment) != tree.n:
        msg = f"Alignment covers {len(alignment)} tokens, tree has {tree.n}"
        raise ValueError(msg)
    m = alignment[-1][1]
    edges: list[tuple[int, int, EdgeOrigin]] = []
    for _, head, dependent in tree.edges():
        if keep is None or (keep[head] and keep[dependent]):
            edges.append((alignment[head][0], alignment[dependent][0], EdgeOrigin.TREE))
    for start, end in alignment:
        edges.extend((start, piece, EdgeOrigin.SUBWORD) for piece in range(start + 1, end))
    return WordpieceGraph.from_edges(m, edges)
