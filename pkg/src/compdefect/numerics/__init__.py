from .autograd import (
    MASK_VALUE,
    NonFiniteValue,
    NumericsError,
    ShapeMismatch,
    Tensor,
    add,
    backward,
    concat,
    cross_entropy,
    dropout,
    embedding,
    getitem,
    layer_norm,
    linear,
    log_softmax,
    masked_attention,
    matmul,
    mean,
    mul,
    nll_from_probs,
    no_grad,
    relu,
    relu_pattern,
    reshape,
    softmax,
    sub,
    tanh,
    transpose,
    tsum,
)
from .gradcheck import DropoutActive, GradCheckReport, grad_check
from .optim import AdamState, adam_step

__all__ = [
    "MASK_VALUE",
    "AdamState",
    "DropoutActive",
    "GradCheckReport",
    "NonFiniteValue",
    "NumericsError",
    "ShapeMismatch",
    "Tensor",
    "adam_step",
    "add",
    "backward",
    "concat",
    "cross_entropy",
    "dropout",
    "embedding",
    "getitem",
    "grad_check",
    "layer_norm",
    "linear",
    "log_softmax",
    "masked_attention",
    "matmul",
    "mean",
    "mul",
    "nll_from_probs",
    "no_grad",
    "relu",
    "relu_pattern",
    "reshape",
    "softmax",
    "sub",
    "tanh",
    "transpose",
    "tsum",
]
