from .gradcheck import grad_check, grad_errors
from .optim import AdamState, adam_step
from .rng import seeded_rng, shuffled
from .tensor import (
    Tensor,
    add,
    as_tensor,
    backward,
    clip,
    concat,
    default_dtype,
    div,
    dropout,
    embedding,
    exp,
    float64,
    gelu,
    getitem,
    layer_norm,
    log,
    matmul,
    mean,
    mul,
    neg,
    no_grad,
    reshape,
    sigmoid,
    softmax,
    sub,
    sum_,
    tanh,
    transpose,
)
from .weights import load_weights, save_weights

__all__ = [
    "AdamState",
    "Tensor",
    "adam_step",
    "add",
    "as_tensor",
    "backward",
    "clip",
    "concat",
    "default_dtype",
    "div",
    "dropout",
    "embedding",
    "exp",
    "float64",
    "gelu",
    "getitem",
    "grad_check",
    "grad_errors",
    "layer_norm",
    "load_weights",
    "log",
    "matmul",
    "mean",
    "mul",
    "neg",
    "no_grad",
    "reshape",
    "save_weights",
    "seeded_rng",
    "shuffled",
    "sigmoid",
    "softmax",
    "sub",
    "sum_",
    "tanh",
    "transpose",
]
