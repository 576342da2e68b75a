"""Finite-difference checks over every differentiable building block.

Each check builds a small random instance, closes a forward function over its
inputs and hands it to `grad_check`. Shapes are kept tiny so that the whole suite,
over several seeds, runs in well under a minute.
"""

from __future__ import annotations

from collections.abc import Callable, Sequence
from dataclasses import dataclass

import numpy as np
from loguru import logger

from syntax_fusion_lab.harness.rng import stream
from syntax_fusion_lab.model import (
    EVAL,
    EncoderConfig,
    FusionModel,
    GnnConfig,
    JointMode,
    ModelConfig,
    SyntaxKV,
    Task,
    Variant,
    crf_log_likelihood,
    gnn_layer,
    re_classify,
    self_attention_layer,
    sentence_loss,
)
from syntax_fusion_lab.model.encoder import ffn_layer
from syntax_fusion_lab.model.params import (
    AttentionParams,
    BlockParams,
    CrfParams,
    FfnParams,
    LayerNormParams,
    ReHeadParams,
)
from syntax_fusion_lab.tensor import (
    GradCheckReport,
    Tensor,
    gelu,
    grad_check,
    layer_norm,
    masked_softmax,
    sigmoid,
)
from syntax_fusion_lab.treebank import (
    DepTree,
    Sentence,
    TagSeq,
    Vocab,
    build_wordpiece_graph,
)

DEFAULT_TOLERANCE = 1e-4
M = 4
D = 8
HEADS = 2
D_FF = 16
TAGS = 3
RELATIONS = 3
FUSION_WORDS = ("ab", "ba")
FUSION_TAGS = ("O", "B-X", "I-X")


@dataclass(frozen=True, kw_only=True)
class Case:
    """A named forward function and the tensors it is differentiated against."""

    name: str
    fn: Callable[[], Tensor]
    inputs: Sequence[Tensor]


def _t(rng: np.random.Generator, *shape: int, name: str, scale: float = 1.0) -> Tensor:
    return Tensor(rng.normal(0.0, scale, size=shape), name=name)


def _block(rng: np.random.Generator, prefix: str) -> BlockParams:
    scale = 1.0 / np.sqrt(D)
    return BlockParams(
        attn=AttentionParams(
            w_q=_t(rng, D, D, name=f"{prefix}.w_q", scale=scale),
            w_k=_t(rng, D, D, name=f"{prefix}.w_k", scale=scale),
            w_v=_t(rng, D, D, name=f"{prefix}.w_v", scale=scale),
            w_o=_t(rng, D, D, name=f"{prefix}.w_o", scale=scale),
        ),
        ln1=LayerNormParams(
            gain=Tensor(1.0 + 0.1 * rng.standard_normal(D), name=f"{prefix}.ln1.gain"),
            bias=_t(rng, D, name=f"{prefix}.ln1.bias", scale=0.1),
        ),
        ffn=FfnParams(
            w1=_t(rng, D, D_FF, name=f"{prefix}.w1", scale=scale),
            b1=_t(rng, D_FF, name=f"{prefix}.b1", scale=0.1),
            w2=_t(rng, D_FF, D, name=f"{prefix}.w2", scale=1.0 / np.sqrt(D_FF)),
            b2=_t(rng, D, name=f"{prefix}.b2", scale=0.1),
        ),
        ln2=LayerNormParams(
            gain=Tensor(1.0 + 0.1 * rng.standard_normal(D), name=f"{prefix}.ln2.gain"),
            bias=_t(rng, D, name=f"{prefix}.ln2.bias", scale=0.1),
        ),
    )


def _block_tensors(block: BlockParams) -> list[Tensor]:
    a, f = block.attn, block.ffn
    return [
        a.w_q, a.w_k, a.w_v, a.w_o,
        block.ln1.gain, block.ln1.bias,
        f.w1, f.b1, f.w2, f.b2,
        block.ln2.gain, block.ln2.bias,
    ]  # fmt: skip


def _cases(rng: np.random.Generator) -> list[Case]:
    encoder_config = EncoderConfig(
        vocab_size=8, layers=1, heads=HEADS, d_model=D, d_ff=D_FF, max_len=M, dropout_p=0.0
    )
    gnn_config = GnnConfig(layers=1, heads=HEADS, d_model=D, d_ff=D_FF, dropout_p=0.0)
    pad = np.ones(M, dtype=bool)

    a = _t(rng, 3, 4, name="a")
    b = _t(rng, 4, 2, name="b")
    scores = _t(rng, M, M, name="scores")
    softmax_mask = rng.random((M, M)) < 0.6
    softmax_mask[np.arange(M), np.arange(M)] = True
    x_ln = _t(rng, 3, D, name="x")
    gain = Tensor(1.0 + 0.1 * rng.standard_normal(D), name="gain")
    bias = _t(rng, D, name="bias", scale=0.1)
    x_gelu = _t(rng, 3, 5, name="x")

    h = _t(rng, M, D, name="h")
    enc_block = _block(rng, "encoder")

    tree = DepTree(heads=(2, 0, 2, 3), deprels=("a", "root", "b", "c"))
    graph = build_wordpiece_graph(tree, [(i, i + 1) for i in range(M)])
    v = _t(rng, M, D, name="v")
    gnn_block = _block(rng, "gnn")

    gv = _t(rng, M, D, name="v")
    gz = _t(rng, M, D, name="z")
    w_g = _t(rng, D, D, name="w_g", scale=1.0 / np.sqrt(D))
    b_g = _t(rng, D, name="b_g", scale=0.5)

    s = _t(rng, M, D, name="s")
    p_k = _t(rng, D, D, name="p_k", scale=1.0 / np.sqrt(D))
    p_v = _t(rng, D, D, name="p_v", scale=1.0 / np.sqrt(D))
    joint_h = _t(rng, M, D, name="h")
    joint_block = _block(rng, "joint")

    crf_states = _t(rng, 5, D, name="states")
    crf = CrfParams(
        w_e=_t(rng, D, TAGS, name="w_e"),
        transitions=_t(rng, TAGS, TAGS, name="transitions"),
        start=_t(rng, TAGS, name="start"),
        end=_t(rng, TAGS, name="end"),
    )
    gold = [int(y) for y in rng.integers(TAGS, size=5)]

    re_states = _t(rng, 6, D, name="states")
    re_params = ReHeadParams(w=_t(rng, 3 * D, RELATIONS, name="w"), b=_t(rng, RELATIONS, name="b"))
    re_mask = np.array([False, True, True, True, True, False])

    def encoder_layer() -> Tensor:
        out, _ = self_attention_layer(h, pad, enc_block, encoder_config, EVAL)
        return ffn_layer(out, enc_block.ffn, enc_block.ln2, 0.0, EVAL)

    def joint_kv() -> Tensor:
        extra = SyntaxKV(keys=s @ p_k, values=s @ p_v)
        out, _ = self_attention_layer(
            joint_h,
            pad,
            joint_block,
            encoder_config,
            EVAL,
            extra_kv=extra,
            joint_mode=JointMode.CONCAT,
        )
        return out

    def gate() -> Tensor:
        g = sigmoid(gv @ w_g + b_g)
        return g * gv + (1.0 - g) * gz

    return [
        Case(name="matmul", fn=lambda: a @ b, inputs=[a, b]),
        Case(
            name="masked_softmax",
            fn=lambda: masked_softmax(scores, softmax_mask),
            inputs=[scores],
        ),
        Case(
            name="layer_norm",
            fn=lambda: layer_norm(x_ln, gain, bias),
            inputs=[x_ln, gain, bias],
        ),
        Case(name="gelu", fn=lambda: gelu(x_gelu), inputs=[x_gelu]),
        Case(
            name="encoder_layer",
            fn=encoder_layer,
            inputs=[h, *_block_tensors(enc_block)],
        ),
        Case(
            name="gnn_layer",
            fn=lambda: gnn_layer(v, graph, gnn_block, gnn_config, EVAL)[0],
            inputs=[v, *_block_tensors(gnn_block)],
        ),
        Case(name="highway_gate", fn=gate, inputs=[gv, gz, w_g, b_g]),
        Case(
            name="joint_kv_injection",
            fn=joint_kv,
            inputs=[s, p_k, p_v, joint_h, *_block_tensors(joint_block)[:4]],
        ),
        Case(
            name="crf_loss",
            fn=lambda: crf_log_likelihood(crf_states, gold, crf),
            inputs=[crf_states, crf.w_e, crf.transitions, crf.start, crf.end],
        ),
        Case(
            name="re_head",
            fn=lambda: re_classify(re_states, (1, 2), (3, 5), re_mask, re_params),
            inputs=[re_states, re_params.w, re_params.b],
        ),
    ]



def _fusion_case(
    rng: np.random.Generator, name: str, variant: Variant, joint_mode: JointMode
) -> Case:
    """Whole-model tagging loss, differentiated against every parameter."""
    vocab = Vocab.build(FUSION_WORDS)
    config = ModelConfig(
        task=Task.TAG,
        labels=FUSION_TAGS,
        variant=variant,
        joint_mode=joint_mode,
        init_std=0.3,
        encoder=EncoderConfig(
            vocab_size=len(vocab),
            layers=1,
            heads=HEADS,
            d_model=D,
            d_ff=D_FF,
            max_len=M,
            dropout_p=0.0,
        ),
        gnn=GnnConfig(layers=1, heads=HEADS, d_model=D, d_ff=D_FF, dropout_p=0.0),
    )
    model = FusionModel.fresh(config, vocab, rng)
    sentence = Sentence.from_parts(
        ("ab", "ba", "ab", "ab"),
        DepTree(heads=(2, 0, 2, 3), deprels=("a", "root", "b", "c")),
        TagSeq(tags=("B-X", "I-X", "O", "B-X")),
        vocab,
    )
    return Case(
        name=name,
        fn=lambda: sentence_loss(sentence, model, EVAL),
        inputs=[tensor for _, tensor in model.params.items()],
    )


def _model_cases(rng: np.random.Generator) -> list[Case]:
    return [
        _fusion_case(rng, "fusion_late", Variant.LATE, JointMode.CONCAT),
        _fusion_case(rng, "fusion_joint_concat", Variant.JOINT, JointMode.CONCAT),
        _fusion_case(rng, "fusion_joint_add", Variant.JOINT, JointMode.ADD),
    ]


CHECK_NAMES = (
    "matmul",
    "masked_softmax",
    "layer_norm",
    "gelu",
    "encoder_layer",
    "gnn_layer",
    "highway_gate",
    "joint_kv_injection",
    "crf_loss",
    "re_head",
    "fusion_late",
    "fusion_joint_concat",
    "fusion_joint_add",
)


@dataclass(frozen=True, kw_only=True)
class SuiteResult:
    """Worst report per check over all seeds."""

    reports: tuple[GradCheckReport, ...]

    @property
    def passed(self) -> bool:
        """Every check passed for every seed."""
        return all(r.passed for r in self.reports)

    @property
    def failed(self) -> list[str]:
        """Names of the checks that failed."""
        return [r.name for r in self.reports if not r.passed]

    def to_json(self) -> dict[str, object]:
        """Report body: one entry per check."""
        return {
            "passed": self.passed,
            "checks": [
                {
                    "name": r.name,
                    "passed": r.passed,
                    "max_rel_error": r.max_rel_error,
                    "tolerance": r.tolerance,
                    "worst_input": max(r.inputs, key=lambda c: c.max_rel_error).name,
                }
                for r in self.reports
            ],
        }


def run_suite(
    seed: int, seeds: int = 10, tol: float = DEFAULT_TOLERANCE
) -> SuiteResult:
    """Run every check over `seeds` random instances; keep each check's worst report."""
    worst: dict[str, GradCheckReport] = {}
    for k in range(seeds):
        rng = stream(seed, "gradcheck", k)
        for case in [*_cases(rng), *_model_cases(rng)]:
            report = grad_check(case.fn, case.inputs, tol=tol, name=case.name, rng=rng)
            current = worst.get(case.name)
            if current is None or report.max_rel_error > current.max_rel_error:
                worst[case.name] = report
    result = SuiteResult(reports=tuple(worst[name] for name in CHECK_NAMES))
    for report in result.reports:
        status = "ok" if report.passed else "FAILED"
        logger.info(f"{report.name:<20} max rel. error {report.max_rel_error:.2e} {status}")
    return result
