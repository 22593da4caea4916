from typing import Iterable, Tuple

import torch

from rethinknet.common.errors import DimensionError, ParameterError


def nadam_step(
        param: torch.Tensor,
        grad: torch.Tensor,
        exp_avg: torch.Tensor,
        exp_avg_sq: torch.Tensor,
        step: int,
        lr: float,
        beta1: float,
        beta2: float,
        eps: float,
        nesterov: bool = True):
    """
    In-place update of one parameter and its moments; ``step`` counts from 1.

    With nesterov the look-ahead direction is
        beta1 * m / (1 - beta1^(t+1)) + (1 - beta1) / (1 - beta1^t) * g,
    otherwise the bias-corrected first moment m / (1 - beta1^t) (Adam).
    """
    if not (param.shape == grad.shape == exp_avg.shape == exp_avg_sq.shape):
        raise DimensionError(
            f"parameter {tuple(param.shape)} and gradient {tuple(grad.shape)} shapes differ")
    exp_avg.mul_(beta1).add_(grad, alpha=1 - beta1)
    exp_avg_sq.mul_(beta2).addcmul_(grad, grad, value=1 - beta2)

    denom = (exp_avg_sq / (1 - beta2 ** step)).sqrt_().add_(eps)
    if nesterov:
        direction = exp_avg * (beta1 / (1 - beta1 ** (step + 1))) \
            + grad * ((1 - beta1) / (1 - beta1 ** step))
    else:
        direction = exp_avg / (1 - beta1 ** step)
    param.addcdiv_(direction, denom, value=-lr)


class Nadam(torch.optim.Optimizer):
    """Adam with Nesterov momentum and a constant momentum schedule."""

    def __init__(self,
            params: Iterable[torch.Tensor],
            lr: float = 0.002,
            betas: Tuple[float, float] = (0.9, 0.999),
            eps: float = 1e-8,
            nesterov: bool = True):
        if lr < 0:
            raise ParameterError(f"invalid learning rate {lr}")
        if not (0.0 <= betas[0] < 1.0 and 0.0 <= betas[1] < 1.0):
            raise ParameterError(f"invalid betas {betas}")
        if eps <= 0:
            raise ParameterError(f"invalid epsilon {eps}")
        defaults = dict(lr=lr, betas=tuple(betas), eps=eps, nesterov=nesterov)
        super().__init__(params, defaults)

    @torch.no_grad()
    def step(self, closure=None):
        loss = None
        if closure is not None:
            with torch.enable_grad():
                loss = closure()

        for group in self.param_groups:
            beta1, beta2 = group['betas']
            for p in group['params']:
                if p.grad is None:
                    continue
                state = self.state[p]
                if len(state) == 0:
                    state['step'] = 0
                    state['exp_avg'] = torch.zeros_like(p)
                    state['exp_avg_sq'] = torch.zeros_like(p)
                state['step'] += 1
                nadam_step(p, p.grad,
                    state['exp_avg'], state['exp_avg_sq'],
                    step=state['step'],
                    lr=group['lr'],
                    beta1=beta1,
                    beta2=beta2,
                    eps=group['eps'],
                    nesterov=group['nesterov'])
        return loss
