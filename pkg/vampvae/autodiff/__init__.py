from vampvae.autodiff.tensor import Graph, Node, Tensor, as_tensor, backward, is_grad_enabled, no_grad
from vampvae.autodiff import ops
from vampvae.autodiff.ops import OPS, concat, forward_op, log_sum_exp_array, register_op
from vampvae.autodiff.gradcheck import grad_check

__all__ = [
    "Graph", "Node", "OPS", "Tensor", "as_tensor", "backward", "concat", "forward_op",
    "grad_check", "is_grad_enabled", "log_sum_exp_array", "no_grad", "ops", "register_op",
]
