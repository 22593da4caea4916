"""
Multi-label evaluation criteria and the cost-difference label weights.

Every criterion is evaluated from the confusion counts of a pair of label
vectors: |y ∩ ŷ|, |y|, |ŷ| and K. The batched entry points accept (..., K)
tensors and return one value per row.
"""
from typing import Optional, Sequence, Union
from dataclasses import dataclass
import enum

import torch

from rethinknet.common.errors import DimensionError, ParameterError

ArrayLike = Union[torch.Tensor, Sequence]

# rows whose raw weights agree to this relative tolerance are uniform
UNIFORM_RTOL = 1e-12


class CostKind(str, enum.Enum):
    HAMMING = 'hamming'
    F1 = 'f1'
    ACCURACY = 'accuracy'
    RANK_LOSS = 'rankloss'


class Direction(str, enum.Enum):
    LOWER_BETTER = 'lower_better'
    HIGHER_BETTER = 'higher_better'


_DIRECTIONS = {
    CostKind.HAMMING: Direction.LOWER_BETTER,
    CostKind.RANK_LOSS: Direction.LOWER_BETTER,
    CostKind.F1: Direction.HIGHER_BETTER,
    CostKind.ACCURACY: Direction.HIGHER_BETTER,
}

_ALIASES = {
    'hamming': CostKind.HAMMING,
    'hamming_loss': CostKind.HAMMING,
    'f1': CostKind.F1,
    'f1_score': CostKind.F1,
    'accuracy': CostKind.ACCURACY,
    'accuracy_score': CostKind.ACCURACY,
    'acc': CostKind.ACCURACY,
    'rankloss': CostKind.RANK_LOSS,
    'rank_loss': CostKind.RANK_LOSS,
    'rank': CostKind.RANK_LOSS,
}


def as_label_tensor(x: ArrayLike) -> torch.Tensor:
    t = torch.as_tensor(x, dtype=torch.float64)
    if t.dim() == 0 or t.shape[-1] < 1:
        raise DimensionError(f"label vectors need at least one label, got shape {tuple(t.shape)}")
    if not bool(((t == 0) | (t == 1)).all()):
        raise ParameterError("label vectors must contain only 0 and 1")
    return t


def _check_pair(y: ArrayLike, yhat: ArrayLike):
    y = as_label_tensor(y)
    yhat = as_label_tensor(yhat)
    if y.shape != yhat.shape:
        raise DimensionError(
            f"label vector shapes differ: {tuple(y.shape)} vs {tuple(yhat.shape)}")
    return y, yhat


@dataclass(frozen=True)
class CostFunction:
    kind: CostKind

    @property
    def name(self) -> str:
        return self.kind.value

    @property
    def direction(self) -> Direction:
        return _DIRECTIONS[self.kind]

    @property
    def lower_is_better(self) -> bool:
        return self.direction is Direction.LOWER_BETTER

    def __call__(self, y: ArrayLike, yhat: ArrayLike) -> torch.Tensor:
        return self.evaluate(y, yhat)

    def evaluate(self, y: ArrayLike, yhat: ArrayLike) -> torch.Tensor:
        y, yhat = _check_pair(y, yhat)
        n_common = (y * yhat).sum(dim=-1)
        n_true = y.sum(dim=-1)
        n_pred = yhat.sum(dim=-1)
        return self.evaluate_counts(n_common, n_true, n_pred, y.shape[-1])

    def evaluate_counts(self,
            n_common: torch.Tensor,
            n_true: torch.Tensor,
            n_pred: torch.Tensor,
            n_labels: int) -> torch.Tensor:
        if self.kind is CostKind.HAMMING:
            return (n_true + n_pred - 2 * n_common) / n_labels
        if self.kind is CostKind.F1:
            denom = n_true + n_pred
            # both vectors empty counts as perfect agreement
            return torch.where(denom > 0,
                2 * n_common / denom.clamp(min=1),
                torch.ones_like(denom))
        if self.kind is CostKind.ACCURACY:
            union = n_true + n_pred - n_common
            return torch.where(union > 0,
                n_common / union.clamp(min=1),
                torch.ones_like(union))
        # relevant/irrelevant labels split by predicted bit
        rel_hit = n_common
        rel_miss = n_true - n_common
        irr_hit = n_pred - n_common
        irr_miss = n_labels - n_true - irr_hit
        return rel_miss * irr_hit + 0.5 * (rel_hit * irr_hit + rel_miss * irr_miss)

    def to_loss(self, values: torch.Tensor) -> torch.Tensor:
        """Complementary loss of a score; losses pass through."""
        if self.lower_is_better:
            return values
        return 1 - values

    def is_better(self, a: float, b: float) -> bool:
        if self.lower_is_better:
            return a < b
        return a > b

    def best(self, values: Sequence[float]) -> int:
        values = list(values)
        best_idx = 0
        for i, v in enumerate(values):
            if self.is_better(v, values[best_idx]):
                best_idx = i
        return best_idx


HAMMING = CostFunction(CostKind.HAMMING)
F1 = CostFunction(CostKind.F1)
ACCURACY = CostFunction(CostKind.ACCURACY)
RANK_LOSS = CostFunction(CostKind.RANK_LOSS)
ALL_COSTS = (HAMMING, RANK_LOSS, F1, ACCURACY)


def get_cost(cost: Union[str, CostKind, CostFunction]) -> CostFunction:
    if isinstance(cost, CostFunction):
        return cost
    if isinstance(cost, CostKind):
        return CostFunction(cost)
    key = str(cost).strip().lower()
    if key not in _ALIASES:
        raise ParameterError(
            f"unknown cost '{cost}', expected one of {sorted(set(k.value for k in CostKind))}")
    return CostFunction(_ALIASES[key])


def hamming_loss(y: ArrayLike, yhat: ArrayLike) -> torch.Tensor:
    return HAMMING(y, yhat)


def f1_score(y: ArrayLike, yhat: ArrayLike) -> torch.Tensor:
    return F1(y, yhat)


def accuracy_score(y: ArrayLike, yhat: ArrayLike) -> torch.Tensor:
    return ACCURACY(y, yhat)


def rank_loss(y: ArrayLike, yhat: ArrayLike) -> torch.Tensor:
    return RANK_LOSS(y, yhat)


# ========= label importance ============
@dataclass(frozen=True)
class ImportanceWeights:
    values: torch.Tensor
    iteration: int

    def __post_init__(self):
        if self.iteration < 1:
            raise ParameterError(f"iteration must be >= 1, got {self.iteration}")
        if bool((self.values < 0).any()):
            raise ParameterError("importance weights must be non-negative")


def normalize_importance(raw: torch.Tensor, normalize: bool = True) -> torch.Tensor:
    """
    Rescale raw cost differences row by row.

    normalize=True divides each row by its mean so the mean weight is 1;
    rows with uniform raw values become exact ones. Rows that are all zero
    fall back to ones in both modes.
    """
    ones = torch.ones_like(raw)
    row_max = raw.amax(dim=-1, keepdim=True)
    if not normalize:
        return torch.where(row_max > 0, raw, ones)
    row_min = raw.amin(dim=-1, keepdim=True)
    uniform = (row_max - row_min) <= UNIFORM_RTOL * row_max
    mean = raw.mean(dim=-1, keepdim=True)
    scaled = raw / torch.where(mean > 0, mean, torch.ones_like(mean))
    return torch.where(uniform, ones, scaled)


def batch_importance_weights(
        y: ArrayLike,
        yhat_prev: ArrayLike,
        cost: Union[str, CostFunction],
        normalize: bool = True) -> torch.Tensor:
    """
    Cost difference of forcing each label of the previous prediction to 0
    versus 1, for a whole (N, K) batch at once.
    """
    cost = get_cost(cost)
    y, yhat_prev = _check_pair(y, yhat_prev)
    n_labels = y.shape[-1]
    both = y * yhat_prev
    n_common = both.sum(dim=-1, keepdim=True)
    n_true = y.sum(dim=-1, keepdim=True).expand_as(y)
    n_pred = yhat_prev.sum(dim=-1, keepdim=True)

    common_0 = n_common - both
    pred_0 = n_pred - yhat_prev
    common_1 = common_0 + y
    pred_1 = pred_0 + 1

    cost_0 = cost.evaluate_counts(common_0, n_true, pred_0, n_labels)
    cost_1 = cost.evaluate_counts(common_1, n_true, pred_1, n_labels)
    raw = (cost_0 - cost_1).abs()
    return normalize_importance(raw, normalize=normalize)


def label_importance_weights(
        y: ArrayLike,
        yhat_prev: Optional[ArrayLike],
        cost: Union[str, CostFunction],
        normalize: bool = True,
        iteration: Optional[int] = None) -> ImportanceWeights:
    y = as_label_tensor(y)
    if y.dim() != 1:
        raise DimensionError(f"expected a single label vector, got shape {tuple(y.shape)}")
    if yhat_prev is None:
        return ImportanceWeights(torch.ones_like(y), iteration or 1)
    values = batch_importance_weights(y, yhat_prev, cost, normalize=normalize)
    return ImportanceWeights(values, iteration or 2)


def flip_oracle_weights(
        y: ArrayLike,
        yhat_prev: ArrayLike,
        cost: Union[str, CostFunction],
        normalize: bool = True,
        as_loss: bool = False) -> ImportanceWeights:
    """
    Reference implementation of the cost-difference weights: both candidate
    vectors are rebuilt and evaluated in full for every label. Test use only.
    """
    cost = get_cost(cost)
    y, yhat_prev = _check_pair(y, yhat_prev)
    if y.dim() != 1:
        raise DimensionError(f"expected a single label vector, got shape {tuple(y.shape)}")

    raw = torch.zeros_like(y)
    for i in range(y.shape[0]):
        forced_0 = yhat_prev.clone()
        forced_0[i] = 0
        forced_1 = yhat_prev.clone()
        forced_1[i] = 1
        value_0 = cost(y, forced_0)
        value_1 = cost(y, forced_1)
        if as_loss:
            value_0 = cost.to_loss(value_0)
            value_1 = cost.to_loss(value_1)
        raw[i] = (value_0 - value_1).abs()
    return ImportanceWeights(normalize_importance(raw, normalize=normalize), 2)
