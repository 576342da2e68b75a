"""Sentences, dependency trees, wordpieces and the graphs built over them."""

from syntax_fusion_lab.treebank.conllu import ConlluSentence, read_conllu, write_conllu
from syntax_fusion_lab.treebank.graph import (
    EdgeOrigin,
    WordpieceGraph,
    build_wordpiece_graph,
)
from syntax_fusion_lab.treebank.sentence import (
    DatasetRecord,
    Payload,
    ReInstance,
    Sentence,
    SrlFrame,
    TagSeq,
    payload_task,
    read_records,
    record_from_json,
    record_to_json,
    write_records,
)
from syntax_fusion_lab.treebank.tree import (
    CORRUPTED_DEPREL,
    CorruptionResult,
    DepTree,
    Span,
    check_heads,
    corrupt_tree,
    lca_prune,
    uas,
)
from syntax_fusion_lab.treebank.wordpiece import (
    BOS,
    CONTINUATION,
    PAD,
    UNK,
    Tokenization,
    Vocab,
    split_word,
    tokenize,
)

__all__ = [
    "BOS",
    "CONTINUATION",
    "CORRUPTED_DEPREL",
    "PAD",
    "UNK",
    "ConlluSentence",
    "CorruptionResult",
    "DatasetRecord",
    "DepTree",
    "EdgeOrigin",
    "Payload",
    "ReInstance",
    "Sentence",
    "Span",
    "SrlFrame",
    "TagSeq",
    "Tokenization",
    "Vocab",
    "WordpieceGraph",
    "build_wordpiece_graph",
    "check_heads",
    "corrupt_tree",
    "lca_prune",
    "payload_task",
    "read_conllu",
    "read_records",
    "record_from_json",
    "record_to_json",
    "split_word",
    "tokenize",
    "uas",
    "write_conllu",
    "write_records",
]
