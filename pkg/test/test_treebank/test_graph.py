"""Tests for the wordpiece-level dependency graph."""

import numpy as np

from syntax_fusion_lab.treebank import DepTree, EdgeOrigin, build_wordpiece_graph
from test.factories import chain_tree


def test_two_tokens() -> None:
    tree = DepTree(heads=(2, 0), deprels=("det", "root"))
    graph = build_wordpiece_graph(tree, [(0, 1), (1, 2)])
    assert graph.adjacency == ((0, 1), (0, 1))
    assert graph.origins[0, 1] is EdgeOrigin.TREE
    assert graph.origins[0, 0] is EdgeOrigin.SELF


def test_subword_edge() -> None:
    tree = DepTree(heads=(0,), deprels=("root",))
    graph = build_wordpiece_graph(tree, [(0, 2)])
    assert graph.origins[0, 1] is EdgeOrigin.SUBWORD
    assert graph.adjacency == ((0, 1), (0, 1))


def test_split_middle_token_degree() -> None:
    """Chain of 3 tokens whose middle token has 3 pieces."""
    tree = DepTree(heads=(2, 0, 2), deprels=("a", "root", "b"))
    graph = build_wordpiece_graph(tree, [(0, 1), (1, 4), (4, 5)])
    assert graph.degree(1) == 5
    assert set(graph.adjacency[1]) == {0, 1, 2, 3, 4}
    assert graph.adjacency[2] == (1, 2)


def test_edge_count() -> None:
    rng = np.random.default_rng(0)
    for n in range(1, 10):
        pieces = rng.integers(1, 4, size=n)
        bounds = np.concatenate([[0], np.cumsum(pieces)])
        alignment = [(int(bounds[i]), int(bounds[i + 1])) for i in range(n)]
        graph = build_wordpiece_graph(chain_tree(n), alignment)
        assert graph.undirected_edge_count() == (n - 1) + int((pieces - 1).sum())
        mask = graph.adjacency_mask()
        assert np.array_equal(mask, mask.T)
        assert mask.diagonal().all()


def test_keep_mask_drops_tree_edges_only() -> None:
    tree = chain_tree(4)
    keep = np.array([False, True, True, True])
    graph = build_wordpiece_graph(tree, [(0, 2), (2, 3), (3, 4), (4, 5)], keep)
    assert 2 not in graph.adjacency[0]
    assert 1 in graph.adjacency[0]
    assert 3 in graph.adjacency[2]
