from typing import List, Optional, Sequence

import torch

from rethinknet.common.errors import DimensionError, StateError

# probabilities are clamped to [PROB_EPS, 1 - PROB_EPS] before the log
PROB_EPS = 1e-7


def weighted_bce(p: torch.Tensor, y: torch.Tensor,
        w: Optional[torch.Tensor] = None) -> torch.Tensor:
    """
    (1/N) sum_n sum_i -w[n,i] * (y log p + (1-y) log(1-p)).

    ``w=None`` is the unweighted loss. Weights are constants: callers pass
    detached tensors.
    """
    if p.shape != y.shape or (w is not None and w.shape != p.shape):
        raise DimensionError(
            f"p, y and w must share a shape, got {tuple(p.shape)}, {tuple(y.shape)}"
            + ('' if w is None else f", {tuple(w.shape)}"))
    if p.dim() != 2:
        raise DimensionError(f"expected (N, K) tensors, got {tuple(p.shape)}")
    p = p.clamp(PROB_EPS, 1 - PROB_EPS)
    log_likelihood = y * torch.log(p) + (1 - y) * torch.log(1 - p)
    if w is not None:
        log_likelihood = w * log_likelihood
    return -log_likelihood.sum() / p.shape[0]


def backward(loss: torch.Tensor, params: Sequence[torch.Tensor]) -> List[torch.Tensor]:
    """Reverse-mode gradients of ``loss`` w.r.t. ``params`` (zeros where unused)."""
    if not isinstance(loss, torch.Tensor) or loss.grad_fn is None:
        raise StateError("backward needs a loss produced by a recorded forward pass")
    params = list(params)
    grads = torch.autograd.grad(loss, params, allow_unused=True)
    return [torch.zeros_like(p) if g is None else g for p, g in zip(params, grads)]
