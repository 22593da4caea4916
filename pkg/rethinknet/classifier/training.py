from typing import Dict, List, Optional, Sequence, Union
from dataclasses import dataclass, field, replace, asdict
import logging
import math

import numpy as np
import torch
import tqdm
from torch.utils.data import DataLoader

from rethinknet.classifier.base_classifier import BaseMultiLabelClassifier
from rethinknet.classifier.br_classifier import BRClassifier, BRConfig
from rethinknet.classifier.rethinknet_classifier import ModelConfig, RethinkNetClassifier
from rethinknet.common.costs import ALL_COSTS, CostFunction, get_cost
from rethinknet.common.errors import (
    ConfigurationError, DimensionError, DivergenceError, NonFiniteError, ParameterError, SizeError)
from rethinknet.common.json_logger import NullLogger
from rethinknet.common.parallel import parallel_map
from rethinknet.common.pytorch_util import make_generator
from rethinknet.dataset.multilabel_dataset import MultiLabelDataset, scale_features
from rethinknet.dataset.splits import kfold

logger = logging.getLogger(__name__)

L2_GRID = (1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1)

ClassifierConfig = Union[ModelConfig, BRConfig]


@dataclass
class TrainConfig:
    max_epochs: int = 1000
    batch_size: int = 256
    # stop after this many epochs with relative improvement below min_delta
    patience: int = 10
    min_delta: float = 1e-4
    lr: float = 0.002
    betas: List[float] = field(default_factory=lambda: [0.9, 0.999])
    eps: float = 1e-8
    # logged as train_<criterion> after every epoch
    log_criteria: List[str] = field(default_factory=list)

    def __post_init__(self):
        if self.max_epochs < 1:
            raise ConfigurationError(f"max_epochs must be >= 1, got {self.max_epochs}")
        if self.batch_size < 1:
            raise ConfigurationError(f"batch_size must be >= 1, got {self.batch_size}")
        if self.patience < 1:
            raise ConfigurationError(f"patience must be >= 1, got {self.patience}")
        self.betas = [float(b) for b in self.betas]
        try:
            self.log_criteria = [get_cost(c).name for c in self.log_criteria]
        except ParameterError as e:
            raise ConfigurationError(str(e))

    def to_dict(self):
        return asdict(self)


def build_classifier(config: ClassifierConfig) -> BaseMultiLabelClassifier:
    if isinstance(config, ModelConfig):
        return RethinkNetClassifier(config)
    if isinstance(config, BRConfig):
        return BRClassifier(config)
    raise ConfigurationError(f"no classifier for config type {type(config).__name__}")


def fit(model: BaseMultiLabelClassifier,
        train: MultiLabelDataset,
        config: Optional[TrainConfig] = None,
        json_logger=None,
        tracker=None,
        progress: bool = False,
        seed: Optional[int] = None) -> BaseMultiLabelClassifier:
    """
    Mini-batch Nadam until ``max_epochs`` or until the epoch loss stops
    improving. Shuffling uses its own generator seeded from the model seed.
    """
    if config is None:
        config = TrainConfig()
    if json_logger is None:
        json_logger = NullLogger()
    if seed is None:
        seed = model.config.seed
    if train.n_features != model.n_features or train.n_labels != model.n_labels:
        raise DimensionError(
            f"dataset is (d={train.n_features}, K={train.n_labels}), "
            f"model expects (d={model.n_features}, K={model.n_labels})")

    train_dataloader = DataLoader(train,
        batch_size=config.batch_size,
        shuffle=True,
        generator=make_generator(seed),
        num_workers=0)
    optimizer = model.get_optimizer(lr=config.lr, betas=config.betas, eps=config.eps)

    history = list()
    best_loss = None
    n_stalled = 0
    global_step = 0
    for epoch in range(config.max_epochs):
        model.train()
        train_losses = list()
        with tqdm.tqdm(train_dataloader, desc=f"Training epoch {epoch}",
                leave=False, disable=not progress) as tepoch:
            for batch_idx, batch in enumerate(tepoch):
                try:
                    loss, _ = model.compute_loss(batch, training=True)
                except NonFiniteError:
                    raise DivergenceError(epoch, batch_idx, float('nan'))
                loss_value = loss.item()
                if not math.isfinite(loss_value):
                    raise DivergenceError(epoch, batch_idx, loss_value)

                optimizer.zero_grad(set_to_none=True)
                loss.backward()
                optimizer.step()

                train_losses.append(loss_value)
                tepoch.set_postfix(loss=loss_value, refresh=False)
                global_step += 1

        # epoch loss is the mean over batches
        train_loss = float(np.mean(train_losses))
        step_log = {
            'epoch': epoch,
            'global_step': global_step,
            'train_loss': train_loss,
        }
        if config.log_criteria:
            for name, result in evaluate_all(model, train, config.log_criteria).items():
                step_log[f'train_{name}'] = result.value
        history.append(step_log)
        json_logger.log(step_log)
        if tracker is not None:
            tracker.log(step_log, step=global_step)

        if best_loss is not None and (best_loss - train_loss) < config.min_delta * abs(best_loss):
            n_stalled += 1
        else:
            n_stalled = 0
        if best_loss is None or train_loss < best_loss:
            best_loss = train_loss
        if n_stalled >= config.patience:
            logger.debug("converged after %d epochs, loss %.6g", epoch + 1, train_loss)
            break

    model.eval()
    model.history = history
    return model


@dataclass(frozen=True)
class EvaluationResult:
    cost: str
    value: float
    per_iteration: List[float]

    def to_dict(self) -> Dict:
        return {'cost': self.cost, 'value': self.value, 'per_iteration': list(self.per_iteration)}


def evaluate(model: BaseMultiLabelClassifier,
        test: MultiLabelDataset,
        cost: Union[str, CostFunction]) -> EvaluationResult:
    """Mean criterion over the examples, after every iteration and at the last."""
    return evaluate_all(model, test, costs=(cost,))[get_cost(cost).name]


def evaluate_all(model: BaseMultiLabelClassifier,
        test: MultiLabelDataset,
        costs: Sequence[Union[str, CostFunction]] = ALL_COSTS) -> Dict[str, EvaluationResult]:
    if test.n_labels != model.n_labels:
        raise DimensionError(f"dataset has K={test.n_labels}, model predicts K={model.n_labels}")
    model.eval()
    predictions = model.predict_iterations(test.feature_tensor())
    labels = test.label_tensor()

    result = dict()
    for cost in costs:
        cost = get_cost(cost)
        per_iteration = [float(cost(labels, yhat).mean()) for yhat in predictions]
        result[cost.name] = EvaluationResult(
            cost=cost.name,
            value=per_iteration[-1],
            per_iteration=per_iteration)
    return result


# ========= model selection ============
@dataclass(frozen=True)
class L2Selection:
    best: float
    cost: str
    scores: Dict[float, float]
    n_runs: int


def _fold_score(task):
    model_config, train_config, train, val, cost = task
    train, normalizer = scale_features(train)
    val, _ = scale_features(val, normalizer)
    model = fit(build_classifier(model_config), train, train_config)
    return evaluate(model, val, cost).value


def select_l2(dataset: MultiLabelDataset,
        model_config: ClassifierConfig,
        train_config: Optional[TrainConfig] = None,
        grid: Sequence[float] = L2_GRID,
        folds: int = 3,
        cost: Union[str, CostFunction, None] = None,
        seed: int = 0,
        num_workers: Optional[int] = None) -> L2Selection:
    """
    Grid search of the L2 strength by k-fold cross-validation on ``dataset``.
    Feature scaling is fitted inside every training fold. Ties go to the
    larger strength.
    """
    if cost is None:
        cost = getattr(model_config, 'cost', 'hamming')
    cost = get_cost(cost)
    grid = sorted(set(float(g) for g in grid), reverse=True)
    if len(grid) == 0:
        raise ConfigurationError("empty L2 grid")
    if len(grid) == 1:
        return L2Selection(best=grid[0], cost=cost.name, scores=dict(), n_runs=0)
    if len(dataset) < folds:
        raise SizeError(f"cannot make {folds} folds from {len(dataset)} examples")

    model_config = replace(model_config,
        n_features=dataset.n_features, n_labels=dataset.n_labels)
    fold_indices = kfold(len(dataset), folds, seed=seed)
    tasks = list()
    for l2 in grid:
        for train_idxs, val_idxs in fold_indices:
            tasks.append((
                replace(model_config, l2_strength=l2),
                train_config,
                dataset.subset(train_idxs),
                dataset.subset(val_idxs),
                cost))
    fold_scores = parallel_map(_fold_score, tasks, num_workers=num_workers)

    scores = dict()
    for i, l2 in enumerate(grid):
        scores[l2] = float(np.mean(fold_scores[i * folds:(i + 1) * folds]))
    # grid is sorted descending so a strict comparison keeps the larger l2 on ties
    best = grid[cost.best([scores[l2] for l2 in grid])]
    logger.info("selected l2=%g (%s %.6g) from %d runs", best, cost.name, scores[best], len(tasks))
    return L2Selection(best=best, cost=cost.name, scores=scores, n_runs=len(tasks))
