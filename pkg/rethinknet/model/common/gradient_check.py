from typing import Callable, Optional, Sequence
import logging

import torch

from rethinknet.model.common.losses import backward

logger = logging.getLogger(__name__)


def gradient_check(
        loss_fn: Callable[[], torch.Tensor],
        params: Sequence[torch.Tensor],
        step: float = 1e-5,
        floor: float = 1e-8,
        atol: float = 0.0,
        max_scalars: int = 10_000,
        generator: Optional[torch.Generator] = None) -> float:
    """
    Largest relative error |a - n| / max(|a|, |n|, floor) between autograd
    gradients a and central differences n over every scalar parameter, or a
    random subsample of ``max_scalars`` of them. Entries with
    |a - n| <= ``atol`` count as exact.

    ``loss_fn`` must be deterministic: it is re-evaluated at each perturbed
    point. Parameters are restored afterwards.
    """
    params = list(params)
    analytic = backward(loss_fn(), params)

    entries = [(i, j) for i, p in enumerate(params) for j in range(p.numel())]
    if len(entries) > max_scalars:
        picks = torch.randperm(len(entries), generator=generator)[:max_scalars]
        entries = [entries[k] for k in picks.tolist()]

    max_error = 0.0
    with torch.no_grad():
        for i, j in entries:
            flat = params[i].data.view(-1)
            original = flat[j].item()
            flat[j] = original + step
            plus = float(loss_fn())
            flat[j] = original - step
            minus = float(loss_fn())
            flat[j] = original

            numeric = (plus - minus) / (2 * step)
            a = float(analytic[i].view(-1)[j])
            diff = abs(a - numeric)
            if diff <= atol:
                continue
            error = diff / max(abs(a), abs(numeric), floor)
            if error > max_error:
                max_error = error
    logger.debug("gradient check over %d scalars: max relative error %.3e",
        len(entries), max_error)
    return max_error
