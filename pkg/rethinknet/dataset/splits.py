from typing import List, Tuple, Union
from dataclasses import dataclass
import math

import numpy as np

from rethinknet.common.errors import SizeError
from rethinknet.dataset.multilabel_dataset import MultiLabelDataset

TRAIN_FRACTION = 0.75


@dataclass(frozen=True)
class Split:
    train_indices: np.ndarray
    test_indices: np.ndarray
    seed: int

    def apply(self, ds: MultiLabelDataset) -> Tuple[MultiLabelDataset, MultiLabelDataset]:
        return ds.subset(self.train_indices), ds.subset(self.test_indices)


def n_train_examples(n: int, train_fraction: float = TRAIN_FRACTION) -> int:
    # half-up rounding
    return int(math.floor(train_fraction * n + 0.5))


def split(ds: Union[MultiLabelDataset, int], seed: int,
        train_fraction: float = TRAIN_FRACTION) -> Split:
    """Random train/test partition; the permutation depends only on ``seed``."""
    n = ds if isinstance(ds, int) else len(ds)
    if n < 4:
        raise SizeError(f"need at least 4 examples to split, got {n}")
    n_train = n_train_examples(n, train_fraction)
    rng = np.random.default_rng(seed=seed)
    perm = rng.permutation(n)
    return Split(
        train_indices=perm[:n_train],
        test_indices=perm[n_train:],
        seed=int(seed))


def kfold(n: int, folds: int, seed: int = 0) -> List[Tuple[np.ndarray, np.ndarray]]:
    """(train, validation) index pairs of a seeded k-fold partition."""
    if folds < 2:
        raise SizeError(f"need at least 2 folds, got {folds}")
    if n < folds:
        raise SizeError(f"cannot make {folds} folds from {n} examples")
    rng = np.random.default_rng(seed=seed)
    chunks = np.array_split(rng.permutation(n), folds)
    result = list()
    for i, val_idxs in enumerate(chunks):
        train_idxs = np.concatenate([c for j, c in enumerate(chunks) if j != i])
        result.append((train_idxs, val_idxs))
    return result
