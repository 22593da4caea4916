from typing import Dict, Union

import numpy as np
import torch
import torch.nn as nn

from rethinknet.common.errors import DimensionError, StateError

STAT_NAMES = ('scale', 'offset', 'input_min', 'input_max')


class MinMaxNormalizer(nn.Module):
    """
    Per-column min-max scaling onto [0, 1].

    Statistics come from the data passed to ``fit`` (the training split);
    values outside the fitted range are clipped and constant columns map to 0.
    The statistics are buffers whose shapes are only known after fitting, so
    loading a state dict replaces them instead of copying into them.
    """
    def __init__(self):
        super().__init__()
        self._fitted = False

    @property
    def is_fitted(self) -> bool:
        return self._fitted

    def _set_stats(self, stats: Dict[str, torch.Tensor]):
        for name in STAT_NAMES:
            self.register_buffer(name, stats[name].detach().clone().to(torch.float64))
        self._fitted = True

    @torch.no_grad()
    def fit(self, data: Union[torch.Tensor, np.ndarray], range_eps: float = 0.0):
        data = torch.as_tensor(data, dtype=torch.float64)
        if data.dim() != 2 or data.shape[0] < 1:
            raise DimensionError(f"expected an (N, d) matrix with N >= 1, got {tuple(data.shape)}")
        input_min = data.min(dim=0).values
        input_max = data.max(dim=0).values

        input_range = input_max - input_min
        constant = input_range <= range_eps
        scale = 1.0 / torch.where(constant, torch.ones_like(input_range), input_range)
        offset = -input_min * scale
        scale[constant] = 0.0
        offset[constant] = 0.0
        self._set_stats({
            'scale': scale, 'offset': offset,
            'input_min': input_min, 'input_max': input_max})
        return self

    @classmethod
    def create_fit(cls, data: Union[torch.Tensor, np.ndarray], **kwargs) -> 'MinMaxNormalizer':
        return cls().fit(data, **kwargs)

    def normalize(self, x: Union[torch.Tensor, np.ndarray]) -> torch.Tensor:
        if not self.is_fitted:
            raise StateError("normalizer has not been fitted")
        x = torch.as_tensor(x, dtype=torch.float64)
        if x.shape[-1] != self.scale.shape[0]:
            raise DimensionError(
                f"normalizer was fitted on d={self.scale.shape[0]}, got d={x.shape[-1]}")
        return (x * self.scale + self.offset).clamp(0.0, 1.0)

    def __call__(self, x: Union[torch.Tensor, np.ndarray]) -> torch.Tensor:
        return self.normalize(x)

    def _load_from_state_dict(self, state_dict, prefix, local_metadata, strict,
            missing_keys, unexpected_keys, error_msgs):
        stats = {name: state_dict[prefix + name]
            for name in STAT_NAMES if prefix + name in state_dict}
        if len(stats) == 0:
            return
        if len(stats) != len(STAT_NAMES):
            missing_keys.extend(prefix + name for name in STAT_NAMES if name not in stats)
            return
        self._set_stats(stats)
