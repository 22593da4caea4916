from typing import Dict, Optional, Sequence, Tuple
from dataclasses import dataclass

import numpy as np
import torch

from rethinknet.common.errors import DimensionError, ParameterError, SizeError
from rethinknet.dataset.base_dataset import BaseMultiLabelDataset
from rethinknet.model.common.normalizer import MinMaxNormalizer


def _readonly(x: np.ndarray) -> np.ndarray:
    x = np.ascontiguousarray(x)
    x.setflags(write=False)
    return x


class MultiLabelDataset(BaseMultiLabelDataset):
    """
    N examples with a d-dimensional float64 feature matrix and a binary
    N x K label matrix. Arrays are read-only once constructed.
    """
    def __init__(self,
            features: np.ndarray,
            labels: np.ndarray,
            name: str = 'dataset',
            feature_names: Optional[Sequence[str]] = None,
            label_names: Optional[Sequence[str]] = None):
        super().__init__()
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels)
        if features.ndim != 2 or labels.ndim != 2:
            raise DimensionError(
                f"features and labels must be 2-D, got {features.shape} and {labels.shape}")
        n, d = features.shape
        if n < 1 or d < 1 or labels.shape[1] < 1:
            raise SizeError(f"need N, d, K >= 1, got N={n}, d={d}, K={labels.shape[1]}")
        if labels.shape[0] != n:
            raise DimensionError(f"{n} feature rows but {labels.shape[0]} label rows")
        if not np.isin(labels, (0, 1)).all():
            raise ParameterError("labels must be 0 or 1")
        if not np.isfinite(features).all():
            raise ParameterError("features must be finite")
        k = labels.shape[1]

        if feature_names is None:
            feature_names = [f'f{i}' for i in range(d)]
        if label_names is None:
            label_names = [f'l{i}' for i in range(k)]
        if len(feature_names) != d or len(label_names) != k:
            raise DimensionError("name lists must match the feature and label dimensions")

        self.features = _readonly(features)
        self.labels = _readonly(labels.astype(np.int8))
        self.name = name
        self.feature_names: Tuple[str, ...] = tuple(feature_names)
        self.label_names: Tuple[str, ...] = tuple(label_names)

    @property
    def n_examples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    @property
    def n_labels(self) -> int:
        return self.labels.shape[1]

    def __len__(self) -> int:
        return self.n_examples

    def __getitem__(self, idx: int) -> Dict[str, torch.Tensor]:
        return {
            'features': torch.from_numpy(self.features[idx].copy()),
            'labels': torch.from_numpy(self.labels[idx].astype(np.float64)),
        }

    def feature_tensor(self) -> torch.Tensor:
        return torch.from_numpy(self.features.copy())

    def label_tensor(self) -> torch.Tensor:
        return torch.from_numpy(self.labels.astype(np.float64))

    def subset(self, indices) -> 'MultiLabelDataset':
        indices = np.asarray(indices, dtype=np.int64)
        return MultiLabelDataset(
            self.features[indices], self.labels[indices],
            name=self.name,
            feature_names=self.feature_names,
            label_names=self.label_names)

    def with_features(self, features) -> 'MultiLabelDataset':
        if isinstance(features, torch.Tensor):
            features = features.detach().cpu().numpy()
        return MultiLabelDataset(
            features, self.labels,
            name=self.name,
            feature_names=self.feature_names,
            label_names=self.label_names)

    def get_normalizer(self, **kwargs) -> MinMaxNormalizer:
        return MinMaxNormalizer.create_fit(self.features, **kwargs)

    def stats(self) -> 'DatasetStats':
        return stats(self)

    def __repr__(self) -> str:
        return (f"MultiLabelDataset(name={self.name!r}, N={self.n_examples}, "
                f"d={self.n_features}, K={self.n_labels})")


@dataclass(frozen=True)
class DatasetStats:
    name: str
    n_examples: int
    n_features: int
    n_labels: int
    cardinality: float
    density: float

    def to_dict(self) -> Dict:
        return {
            'name': self.name,
            'n_examples': self.n_examples,
            'n_features': self.n_features,
            'n_labels': self.n_labels,
            'cardinality': self.cardinality,
            'density': self.density,
        }


def stats(ds: MultiLabelDataset) -> DatasetStats:
    cardinality = float(ds.labels.sum(axis=1).mean())
    return DatasetStats(
        name=ds.name,
        n_examples=ds.n_examples,
        n_features=ds.n_features,
        n_labels=ds.n_labels,
        cardinality=cardinality,
        density=cardinality / ds.n_labels)


def scale_features(ds: MultiLabelDataset,
        normalizer: Optional[MinMaxNormalizer] = None
        ) -> Tuple[MultiLabelDataset, MinMaxNormalizer]:
    """
    Min-max scale features to [0, 1]. Without a normalizer one is fitted on
    ``ds``; pass the training normalizer to transform held-out data.
    """
    if normalizer is None:
        normalizer = ds.get_normalizer()
    scaled = normalizer.normalize(ds.features)
    return ds.with_features(scaled), normalizer

