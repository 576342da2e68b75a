"""Minimal dense-tensor engine with reverse-mode automatic differentiation."""

from syntax_fusion_lab.tensor.core import (
    FloatArray,
    Tape,
    TapeEntry,
    Tensor,
    active_tape,
    add,
    as_tensor,
    backward,
    matmul,
    mul,
    sub,
    transpose,
)
from syntax_fusion_lab.tensor.functional import (
    LAYER_NORM_EPS,
    concat,
    dropout,
    gelu,
    layer_norm,
    logsumexp,
    masked_softmax,
    max_rows,
    pick,
    reshape,
    sigmoid,
    slice_cols,
    sum_all,
    take_rows,
)
from syntax_fusion_lab.tensor.grad_check import GradCheckReport, InputCheck, grad_check

__all__ = [
    "LAYER_NORM_EPS",
    "FloatArray",
    "GradCheckReport",
    "InputCheck",
    "Tape",
    "TapeEntry",
    "Tensor",
    "active_tape",
    "add",
    "as_tensor",
    "backward",
    "concat",
    "dropout",
    "gelu",
    "grad_check",
    "layer_norm",
    "logsumexp",
    "masked_softmax",
    "matmul",
    "max_rows",
    "mul",
    "pick",
    "reshape",
    "sigmoid",
    "slice_cols",
    "sub",
    "sum_all",
    "take_rows",
    "transpose",
]
