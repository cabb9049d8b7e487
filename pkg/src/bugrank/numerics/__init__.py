"""Dense 2-D tensors with reverse-mode autodiff, Adam, losses, checkpoints."""

from .autodiff import (
    ShapeMismatch,
    SparseMatrix,
    Tensor,
    add,
    add_row,
    backward,
    concat_cols,
    constant,
    dropout,
    elu,
    leaky_relu,
    mae_loss,
    matmul,
    mse_loss,
    parameter,
    relu,
    selection_matrix,
    softmax_rows,
    sparse_matmul,
    transpose,
)
from .checkpoint import CheckpointFormatError, load_checkpoint, save_checkpoint
from .gradcheck import finite_difference_check
from .optim import AdamState, adam_step

__all__ = [
    "AdamState",
    "CheckpointFormatError",
    "ShapeMismatch",
    "SparseMatrix",
    "Tensor",
    "adam_step",
    "add",
    "add_row",
    "backward",
    "concat_cols",
    "constant",
    "dropout",
    "elu",
    "finite_difference_check",
    "leaky_relu",
    "load_checkpoint",
    "mae_loss",
    "matmul",
    "mse_loss",
    "parameter",
    "relu",
    "save_checkpoint",
    "selection_matrix",
    "softmax_rows",
    "sparse_matmul",
    "transpose",
]
