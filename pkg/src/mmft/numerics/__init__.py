"""Dense float64 tensor arithmetic with reverse-mode differentiation."""

from mmft.numerics.gradcheck import GradCheckReport, grad_check
from mmft.numerics.init import ones, xavier_uniform, zeros
from mmft.numerics.tensor import (
    Tensor,
    add,
    as_tensor,
    concat,
    div,
    elu,
    exp,
    index,
    is_grad_enabled,
    layer_norm,
    leaky_relu,
    log,
    log_softmax,
    matmul,
    mean,
    mul,
    no_grad,
    pad_left,
    power,
    relu,
    reshape,
    sigmoid,
    softmax,
    softmax_stable,
    sqrt,
    stack,
    sub,
    tanh,
    tmax,
    transpose,
    tsum,
    where,
)

__all__ = [
    "GradCheckReport", "Tensor", "add", "as_tensor", "concat", "div", "elu", "exp",
    "grad_check", "index", "is_grad_enabled", "layer_norm", "leaky_relu", "log",
    "log_softmax", "matmul", "mean", "mul", "no_grad", "ones", "pad_left", "power",
    "relu", "reshape", "sigmoid", "softmax", "softmax_stable", "sqrt", "stack", "sub",
    "tanh", "tmax", "transpose", "tsum", "where", "xavier_uniform", "zeros",
]
