"""Graph-attention encoder: transformer blocks whose attention is confined to graph edges.

Node i scores only its neighbors j (self included), normalizes over them, and
aggregates their value projections. Non-neighbors get weight exactly 0. After
`L` layers a node's state depends only on nodes within `L` hops.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from syntax_fusion_lab.errors import ShapeMismatchError
from syntax_fusion_lab.model.attention import attend
from syntax_fusion_lab.model.config import GnnConfig, RunMode
from syntax_fusion_lab.model.encoder import ffn_layer
from syntax_fusion_lab.model.params import AttentionParams, BlockParams, ParamStore
from syntax_fusion_lab.tensor import FloatArray, Tensor, dropout, layer_norm
from syntax_fusion_lab.treebank import WordpieceGraph


@dataclass(frozen=True, kw_only=True)
class GraphAttentionTrace:
    """Per layer and head, dense m×m scores (NaN off-graph) and weights (0 off-graph)."""

    adjacency: NDArray[np.bool_]
    scores: tuple[tuple[FloatArray, ...], ...] = ()
    weights: tuple[tuple[FloatArray, ...], ...] = ()

    def neighbor_weights(self, layer: int, head: int, i: int) -> dict[int, float]:
        """α_ij for every neighbor j of node i."""
        row = self.weights[layer][head][i]
        return {int(j): float(row[j]) for j in np.flatnonzero(self.adjacency[i])}

    def off_graph_mass(self) -> float:
        """Total weight placed outside the adjacency, over all layers and heads."""
        return float(
            sum(
                np.abs(w[~self.adjacency]).sum()
                for layer in self.weights
                for w in layer
            )
        )


def gnn_params(store: ParamStore, config: GnnConfig) -> tuple[BlockParams, ...]:
    """Read `gnn.layer<i>.*` blocks."""
    return tuple(BlockParams.view(store, f"gnn.layer{i}") for i in range(config.layers))


def graph_attention(
    v: Tensor,
    graph: WordpieceGraph,
    params: AttentionParams,
    config: GnnConfig,
    mode: RunMode,
) -> tuple[Tensor, GraphAttentionTrace]:
    """z_i = (concat_heads Σ_{j∈N(i)} α_ij v_j W_V) W_F, α a softmax over N(i).

    Residual and layer norm are left to the caller.
    """
    if v.shape[0] != graph.m:
        msg = f"graph has {graph.m} nodes but {v.shape[0]} states were given"
        raise ShapeMismatchError(msg)
    adjacency = graph.adjacency_mask()
    merged, scores, weights = attend(
        v @ params.w_q,
        v @ params.w_k,
        v @ params.w_v,
        adjacency,
        config.heads,
        dropout_p=config.dropout_p,
        mode=mode,
    )
    trace = GraphAttentionTrace(adjacency=adjacency, scores=(scores,), weights=(weights,))
    return merged @ params.w_o, trace


def gnn_layer(
    v: Tensor,
    graph: WordpieceGraph,
    block: BlockParams,
    config: GnnConfig,
    mode: RunMode,
) -> tuple[Tensor, GraphAttentionTrace]:
    """Graph attention + residual + LN, then feed-forward + residual + LN."""
    z, trace = graph_attention(v, graph, block.attn, config, mode)
    z = dropout(z, config.dropout_p, mode.rng, training=mode.training)
    x = layer_norm(v + z, block.ln1.gain, block.ln1.bias)
    return ffn_layer(x, block.ffn, block.ln2, config.dropout_p, mode), trace


def gnn_encode(
    states: Tensor,
    graph: WordpieceGraph,
    blocks: tuple[BlockParams, ...],
    config: GnnConfig,
    mode: RunMode,
) -> tuple[Tensor, GraphAttentionTrace]:
    """Run every graph block; zero blocks return `states` unchanged."""
    if states.shape[0] != graph.m:
        msg = f"graph has {graph.m} nodes but {states.shape[0]} states were given"
        raise ShapeMismatchError(msg)
    adjacency = graph.adjacency_mask()
    scores: list[tuple[FloatArray, ...]] = []
    weights: list[tuple[FloatArray, ...]] = []
    h = states
    for block in blocks:
        h, layer_trace = gnn_layer(h, graph, block, config, mode)
        scores.extend(layer_trace.scores)
        weights.extend(layer_trace.weights)
    return h, GraphAttentionTrace(
        adjacency=adjacency, scores=tuple(scores), weights=tuple(weights)
    )
