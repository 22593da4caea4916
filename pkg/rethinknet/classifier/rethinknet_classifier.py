"""
RethinkNet: an RNN layer unrolled for B rethink iterations over the same
feature vector, followed by a dense layer shared by every iteration.
"""
from typing import List, Optional, Sequence, Tuple
from dataclasses import dataclass, asdict
import logging

import torch
import torch.nn as nn

from rethinknet.classifier.base_classifier import BaseMultiLabelClassifier, THRESHOLD
from rethinknet.common.costs import batch_importance_weights, get_cost
from rethinknet.common.errors import ConfigurationError
from rethinknet.common.pytorch_util import make_generator, require_finite
from rethinknet.model.rnn.cells import CELL_KINDS, build_cell, cell_parameter_count, glorot_uniform_
from rethinknet.model.rnn.recurrent_dropout import recurrent_dropout_mask

logger = logging.getLogger(__name__)

WEIGHT_NORMALIZATIONS = ('mean', 'raw')

# rows of the memory matrix with a smaller diagonal are left as they are
DIAGONAL_EPS = 1e-8


@dataclass
class ModelConfig:
    cell: str = 'lstm'
    hidden_dim: int = 128
    rethink_iterations: int = 3
    recurrent_dropout: float = 0.25
    l2_strength: float = 0.0
    cost: str = 'hamming'
    reweighted: bool = True
    weight_normalization: str = 'mean'
    seed: int = 0
    # filled in from the training data
    n_features: int = 0
    n_labels: int = 0

    def __post_init__(self):
        self.cell = str(self.cell).lower()
        if self.cell not in CELL_KINDS:
            raise ConfigurationError(f"unknown cell '{self.cell}', expected one of {CELL_KINDS}")
        if self.hidden_dim < 1:
            raise ConfigurationError(f"hidden_dim must be >= 1, got {self.hidden_dim}")
        if self.rethink_iterations < 1:
            raise ConfigurationError(
                f"rethink_iterations must be >= 1, got {self.rethink_iterations}")
        if not 0.0 <= self.recurrent_dropout < 1.0:
            raise ConfigurationError(
                f"recurrent_dropout must lie in [0, 1), got {self.recurrent_dropout}")
        if self.l2_strength < 0:
            raise ConfigurationError(f"l2_strength must be >= 0, got {self.l2_strength}")
        if self.weight_normalization not in WEIGHT_NORMALIZATIONS:
            raise ConfigurationError(
                f"weight_normalization must be one of {WEIGHT_NORMALIZATIONS}")
        self.cost = get_cost(self.cost).name

    def to_dict(self):
        return asdict(self)


class RethinkNetClassifier(BaseMultiLabelClassifier):
    def __init__(self, config: ModelConfig):
        super().__init__()
        if config.n_features < 1 or config.n_labels < 1:
            raise ConfigurationError(
                f"n_features and n_labels must be set, got {config.n_features}, {config.n_labels}")
        self.config = config
        self.n_features = config.n_features
        self.n_labels = config.n_labels
        self.cost = get_cost(config.cost)

        # initialization and dropout masks draw from this generator only
        self._generator = make_generator(config.seed)
        self.cell = build_cell(config.cell, config.n_features, config.hidden_dim,
            generator=self._generator)
        self.dense = nn.Linear(config.hidden_dim, config.n_labels, dtype=torch.float64)
        glorot_uniform_(self.dense.weight, self._generator)
        nn.init.zeros_(self.dense.bias)

    @property
    def n_iterations(self) -> int:
        return self.config.rethink_iterations

    @property
    def l2_strength(self) -> float:
        return self.config.l2_strength

    def forward(self, features: torch.Tensor, training: bool = False) -> List[torch.Tensor]:
        x = self.check_features(features)
        weight_hh = self.cell.weight_hh
        if training and self.config.recurrent_dropout > 0:
            # one mask per pass, shared by all iterations
            mask = recurrent_dropout_mask(weight_hh.shape,
                rate=self.config.recurrent_dropout,
                generator=self._generator,
                dtype=weight_hh.dtype)
            weight_hh = weight_hh * mask

        state = self.cell.init_state(x.shape[0])
        probs = list()
        for _ in range(self.n_iterations):
            state = self.cell(x, state, weight_hh)
            p = torch.sigmoid(self.dense(self.cell.output(state)))
            probs.append(require_finite(p, 'rethink output'))
        return probs

    def iteration_weights(self, labels: torch.Tensor,
            probs: Sequence[torch.Tensor]) -> List[torch.Tensor]:
        weights = [torch.ones_like(labels)]
        for p_prev in probs[:-1]:
            if not self.config.reweighted:
                weights.append(torch.ones_like(labels))
                continue
            yhat_prev = (p_prev.detach() >= THRESHOLD).to(labels.dtype)
            weights.append(batch_importance_weights(labels, yhat_prev, self.cost,
                normalize=self.config.weight_normalization == 'mean'))
        return weights

    # ========== analysis ===========
    @torch.no_grad()
    def extract_memory_matrix(self) -> Tuple[torch.Tensor, List[int]]:
        """
        Memory matrix with every row divided by its diagonal entry, plus the
        rows left unnormalized because the diagonal was ~0. Only defined for
        an SRN whose hidden layer has one unit per label.
        """
        if self.config.cell != 'srn':
            raise ConfigurationError(
                f"memory matrix analysis needs an srn cell, got {self.config.cell}")
        if self.config.hidden_dim != self.n_labels:
            raise ConfigurationError(
                f"memory matrix analysis needs hidden_dim == K "
                f"({self.config.hidden_dim} != {self.n_labels})")
        return normalize_memory_matrix(self.cell.memory_matrix)


def normalize_memory_matrix(matrix: torch.Tensor) -> Tuple[torch.Tensor, List[int]]:
    matrix = torch.as_tensor(matrix, dtype=torch.float64).detach().clone()
    diagonal = torch.diagonal(matrix).clone()
    unnormalized = list()
    for i, d in enumerate(diagonal.tolist()):
        if abs(d) < DIAGONAL_EPS:
            unnormalized.append(i)
            continue
        matrix[i] = matrix[i] / d
    return matrix, unnormalized


def rethinknet_parameter_count(cell: str, n_features: int, n_labels: int,
        hidden_dim: int) -> int:
    return cell_parameter_count(cell, n_features, hidden_dim) + hidden_dim * n_labels + n_labels


def hidden_dim_for_budget(cell: str, n_features: int, n_labels: int,
        budget: int = 200_000, max_hidden: Optional[int] = None) -> int:
    """Hidden size whose total parameter count is closest to ``budget``."""
    if max_hidden is None:
        max_hidden = max(1, budget)
    best_hidden, best_gap = 1, None
    for hidden in range(1, max_hidden + 1):
        count = rethinknet_parameter_count(cell, n_features, n_labels, hidden)
        gap = abs(count - budget)
        if best_gap is None or gap < best_gap:
            best_hidden, best_gap = hidden, gap
        if count > budget:
            break
    return best_hidden
