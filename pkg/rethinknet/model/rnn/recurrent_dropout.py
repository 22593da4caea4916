from typing import Optional, Sequence

import torch

from rethinknet.common.errors import ParameterError


def recurrent_dropout_mask(
        shape: Sequence[int],
        rate: float = 0.25,
        generator: Optional[torch.Generator] = None,
        dtype: torch.dtype = torch.float64) -> torch.Tensor:
    """
    DropConnect mask for a recurrent weight matrix: each entry is kept with
    probability 1 - rate and scaled by 1 / (1 - rate), so the masked matrix
    equals the original in expectation and evaluation uses it unscaled.
    """
    if not 0.0 <= rate < 1.0:
        raise ParameterError(f"dropout rate must lie in [0, 1), got {rate}")
    shape = tuple(shape)
    if rate == 0.0:
        return torch.ones(shape, dtype=dtype)
    keep = 1.0 - rate
    mask = torch.bernoulli(torch.full(shape, keep, dtype=dtype), generator=generator)
    return mask / keep
