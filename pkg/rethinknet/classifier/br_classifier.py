from typing import List
from dataclasses import dataclass, asdict

import torch
import torch.nn as nn

from rethinknet.classifier.base_classifier import BaseMultiLabelClassifier
from rethinknet.common.errors import ConfigurationError
from rethinknet.common.pytorch_util import make_generator, require_finite
from rethinknet.model.rnn.cells import glorot_uniform_


@dataclass
class BRConfig:
    hidden_dim: int = 128
    l2_strength: float = 0.0
    seed: int = 0
    n_features: int = 0
    n_labels: int = 0

    def __post_init__(self):
        if self.hidden_dim < 1:
            raise ConfigurationError(f"hidden_dim must be >= 1, got {self.hidden_dim}")
        if self.l2_strength < 0:
            raise ConfigurationError(f"l2_strength must be >= 0, got {self.l2_strength}")

    def to_dict(self):
        return asdict(self)


class BRClassifier(BaseMultiLabelClassifier):
    """
    Binary relevance baseline: one ReLU hidden layer feeding K independent
    sigmoid outputs, trained with the unweighted cross-entropy.
    """
    def __init__(self, config: BRConfig):
        super().__init__()
        if config.n_features < 1 or config.n_labels < 1:
            raise ConfigurationError(
                f"n_features and n_labels must be set, got {config.n_features}, {config.n_labels}")
        self.config = config
        self.n_features = config.n_features
        self.n_labels = config.n_labels

        generator = make_generator(config.seed)
        self.hidden = nn.Linear(config.n_features, config.hidden_dim, dtype=torch.float64)
        self.output = nn.Linear(config.hidden_dim, config.n_labels, dtype=torch.float64)
        for layer in (self.hidden, self.output):
            glorot_uniform_(layer.weight, generator)
            nn.init.zeros_(layer.bias)

    @property
    def l2_strength(self) -> float:
        return self.config.l2_strength

    def forward(self, features: torch.Tensor, training: bool = False) -> List[torch.Tensor]:
        x = self.check_features(features)
        p = torch.sigmoid(self.output(torch.relu(self.hidden(x))))
        return [require_finite(p, 'baseline output')]
