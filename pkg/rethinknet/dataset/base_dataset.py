from typing import Dict

import torch
import torch.utils.data
from rethinknet.model.common.normalizer import MinMaxNormalizer


class BaseMultiLabelDataset(torch.utils.data.Dataset):
    def get_normalizer(self, **kwargs) -> MinMaxNormalizer:
        raise NotImplementedError()

    def subset(self, indices) -> 'BaseMultiLabelDataset':
        raise NotImplementedError()

    def __len__(self) -> int:
        return 0

    def __getitem__(self, idx: int) -> Dict[str, torch.Tensor]:
        """
        output:
            features: d
            labels: K
        """
        raise NotImplementedError()
