from typing import Dict, List, Optional, Sequence, Tuple
import logging

import torch
import torch.nn as nn

from rethinknet.common.errors import DimensionError
from rethinknet.model.common.losses import weighted_bce
from rethinknet.model.common.nadam import Nadam

logger = logging.getLogger(__name__)

THRESHOLD = 0.5


class BaseMultiLabelClassifier(nn.Module):
    # init accepts a config dataclass, see classifier/*_classifier.py
    n_features: int
    n_labels: int

    def __init__(self):
        super().__init__()
        # one dict per epoch, filled by training.fit
        self.history: List[Dict] = list()

    @property
    def n_iterations(self) -> int:
        return 1

    @property
    def l2_strength(self) -> float:
        return 0.0

    def forward(self, features: torch.Tensor, training: bool = False) -> List[torch.Tensor]:
        """
        features: N,d
        return: one N,K probability tensor per iteration
        """
        raise NotImplementedError()

    def check_features(self, features: torch.Tensor) -> torch.Tensor:
        x = torch.as_tensor(features, dtype=torch.float64)
        if x.dim() != 2 or x.shape[1] != self.n_features:
            raise DimensionError(
                f"expected features of shape (N, {self.n_features}), got {tuple(x.shape)}")
        return x

    # ========== inference ===========
    @torch.no_grad()
    def predict_proba(self, features: torch.Tensor) -> List[torch.Tensor]:
        return [p.detach() for p in self.forward(features, training=False)]

    def predict_iterations(self, features: torch.Tensor) -> List[torch.Tensor]:
        return [(p >= THRESHOLD).to(torch.float64) for p in self.predict_proba(features)]

    def predict(self, features: torch.Tensor) -> torch.Tensor:
        """Final prediction: the last iteration thresholded at 0.5."""
        return self.predict_iterations(features)[-1]

    # ========== training ===========
    def iteration_weights(self, labels: torch.Tensor,
            probs: Sequence[torch.Tensor]) -> List[torch.Tensor]:
        return [torch.ones_like(labels) for _ in probs]

    def l2_penalty(self) -> torch.Tensor:
        # weight matrices only, biases are not regularized
        return sum(p.pow(2).sum() for p in self.trainable_parameters() if p.dim() >= 2)

    def compute_loss(self, batch: Dict[str, torch.Tensor],
            importance_weights: Optional[Sequence[torch.Tensor]] = None,
            training: bool = True) -> Tuple[torch.Tensor, List[torch.Tensor]]:
        """
        Sum over iterations of the weighted binary cross-entropy plus the L2
        term. ``importance_weights`` overrides the per-iteration weights,
        which are constants either way.
        """
        labels = torch.as_tensor(batch['labels'], dtype=torch.float64)
        if labels.dim() != 2 or labels.shape[1] != self.n_labels:
            raise DimensionError(
                f"expected labels of shape (N, {self.n_labels}), got {tuple(labels.shape)}")
        probs = self.forward(batch['features'], training=training)
        if importance_weights is None:
            importance_weights = self.iteration_weights(labels, probs)
        if len(importance_weights) != len(probs):
            raise DimensionError(
                f"{len(importance_weights)} weight tensors for {len(probs)} iterations")
        weights = [w.detach() for w in importance_weights]

        loss = weighted_bce(probs[0], labels, weights[0])
        for p, w in zip(probs[1:], weights[1:]):
            loss = loss + weighted_bce(p, labels, w)
        if self.l2_strength > 0:
            loss = loss + self.l2_strength * self.l2_penalty()
        return loss, weights

    def get_optimizer(self,
            lr: float = 0.002,
            betas: Tuple[float, float] = (0.9, 0.999),
            eps: float = 1e-8) -> torch.optim.Optimizer:
        params = list(self.trainable_parameters())
        logger.debug("optimizing %d parameter tensors with %s parameters",
            len(params), f"{self.num_parameters():,}")
        return Nadam(params, lr=lr, betas=tuple(betas), eps=eps)

    def trainable_parameters(self):
        return (p for p in self.parameters() if p.requires_grad)

    def num_parameters(self) -> int:
        return sum(p.numel() for p in self.trainable_parameters())
