from typing import Dict, List, Optional
from dataclasses import dataclass
import logging

import numpy as np
import scipy.stats

from rethinknet.classifier.rethinknet_classifier import RethinkNetClassifier
from rethinknet.common.errors import DimensionError
from rethinknet.dataset.multilabel_dataset import MultiLabelDataset

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CorrelationAnalysis:
    label_names: List[str]
    memory_matrix: np.ndarray
    unnormalized_rows: List[int]
    label_correlation: np.ndarray
    # agreement of the off-diagonal entries of the two matrices
    pearson_r: Optional[float]
    p_value: Optional[float]

    def to_dict(self) -> Dict:
        return {
            'label_names': list(self.label_names),
            'memory_matrix': self.memory_matrix.tolist(),
            'unnormalized_rows': list(self.unnormalized_rows),
            'label_correlation': self.label_correlation.tolist(),
            'pearson_r': self.pearson_r,
            'p_value': self.p_value,
        }


def label_correlation(labels: np.ndarray) -> np.ndarray:
    """Pearson correlation between label columns; constant labels correlate 0."""
    labels = np.asarray(labels, dtype=np.float64)
    k = labels.shape[1]
    constant = labels.std(axis=0) == 0
    with np.errstate(divide='ignore', invalid='ignore'):
        corr = np.atleast_2d(np.corrcoef(labels, rowvar=False))
    corr = np.nan_to_num(corr, nan=0.0)
    corr[constant, :] = 0.0
    corr[:, constant] = 0.0
    np.fill_diagonal(corr, 1.0)
    return corr.reshape(k, k)


def off_diagonal(matrix: np.ndarray) -> np.ndarray:
    mask = ~np.eye(matrix.shape[0], dtype=bool)
    return np.asarray(matrix)[mask]


def export_correlation_analysis(model: RethinkNetClassifier,
        dataset: MultiLabelDataset) -> CorrelationAnalysis:
    """
    Normalized memory matrix of an SRN with one hidden unit per label next to
    the label correlation of ``dataset``.
    """
    memory, unnormalized = model.extract_memory_matrix()
    if dataset.n_labels != model.n_labels:
        raise DimensionError(f"dataset has K={dataset.n_labels}, model has K={model.n_labels}")
    memory = memory.numpy()
    corr = label_correlation(dataset.labels)

    a = off_diagonal(memory)
    b = off_diagonal(corr)
    r, p = None, None
    if len(a) >= 2 and np.ptp(a) > 0 and np.ptp(b) > 0:
        result = scipy.stats.pearsonr(a, b)
        r, p = float(result[0]), float(result[1])
    else:
        logger.info("off-diagonal entries are constant or too few; no agreement statistic")
    return CorrelationAnalysis(
        label_names=list(dataset.label_names),
        memory_matrix=memory,
        unnormalized_rows=unnormalized,
        label_correlation=corr,
        pearson_r=r,
        p_value=p)
