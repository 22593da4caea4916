if __name__ == "__main__":
    import sys
    import os
    import pathlib

    ROOT_DIR = str(pathlib.Path(__file__).parent.parent.parent)
    sys.path.append(ROOT_DIR)
    os.chdir(ROOT_DIR)

from typing import Dict, Optional, Sequence
import logging
import os
import pathlib

import hydra
from omegaconf import OmegaConf

from rethinknet.classifier.base_classifier import BaseMultiLabelClassifier
from rethinknet.classifier.training import (
    EvaluationResult, build_classifier, evaluate_all, fit, select_l2)
from rethinknet.common.costs import ALL_COSTS
from rethinknet.common.errors import UsageError
from rethinknet.common.json_logger import JsonLogger
from rethinknet.dataset.loader import load_dataset
from rethinknet.dataset.multilabel_dataset import MultiLabelDataset, scale_features, stats
from rethinknet.model.common.normalizer import MinMaxNormalizer
from rethinknet.workspace.base_workspace import BaseWorkspace
from rethinknet.workspace.config_util import (
    init_tracker, model_config_from_cfg, train_config_from_cfg)

logger = logging.getLogger(__name__)


def load_task_dataset(cfg: OmegaConf) -> MultiLabelDataset:
    if OmegaConf.is_missing(cfg.task, 'dataset_path'):
        raise UsageError("no dataset given, set task.dataset_path")
    name = None if cfg.task.name == 'dataset' else cfg.task.name
    return load_dataset(cfg.task.dataset_path,
        fmt=cfg.task.format,
        label_spec=cfg.task.label_spec,
        name=name)


class TrainRethinkNetWorkspace(BaseWorkspace):
    include_keys = ['history', 'data_info']

    def __init__(self, cfg: OmegaConf, output_dir: Optional[str] = None):
        super().__init__(cfg, output_dir=output_dir)

        self.model_config = model_config_from_cfg(cfg)
        self.train_config = train_config_from_cfg(cfg)

        # configure model; dimensions are known once a dataset has been seen
        self.model: Optional[BaseMultiLabelClassifier] = None
        if self.model_config.n_features > 0 and self.model_config.n_labels > 0:
            self.model = build_classifier(self.model_config)
        self.normalizer = MinMaxNormalizer()

        self.history = list()
        self.data_info = dict()

    def run(self) -> str:
        cfg = self.cfg

        # configure dataset
        dataset = load_task_dataset(cfg)
        train, self.normalizer = scale_features(dataset)
        cfg.model.n_features = dataset.n_features
        cfg.model.n_labels = dataset.n_labels
        self.data_info = stats(dataset).to_dict()
        logger.info("training on %s", self.data_info)

        if cfg.l2.select:
            selection = select_l2(train, model_config_from_cfg(cfg), self.train_config,
                grid=cfg.l2.grid, folds=cfg.l2.folds, seed=cfg.model.seed)
            cfg.model.l2_strength = selection.best

        # configure model
        self.model_config = model_config_from_cfg(cfg)
        self.model = build_classifier(self.model_config)

        tracker = init_tracker(cfg, output_dir=self.output_dir)
        log_path = cfg.logging.json_log
        if log_path is None:
            log_path = os.path.join(self.output_dir, 'logs.json.txt')
        try:
            with JsonLogger(log_path) as json_logger:
                fit(self.model, train, self.train_config,
                    json_logger=json_logger,
                    tracker=tracker,
                    progress=cfg.logging.progress)
        finally:
            if tracker is not None:
                tracker.finish()
        self.history = self.model.history

        # checkpoint
        path = cfg.checkpoint.path
        path = self.save_checkpoint(path=path)
        logger.info("saved model to %s after %d epochs", path, len(self.history))
        return path

    def evaluate(self, dataset: MultiLabelDataset,
            costs: Sequence = ALL_COSTS) -> Dict[str, EvaluationResult]:
        """Scale ``dataset`` with the training statistics and evaluate every criterion."""
        if self.model is None:
            raise UsageError("workspace has no trained model")
        scaled, _ = scale_features(dataset, self.normalizer)
        return evaluate_all(self.model, scaled, costs)


@hydra.main(
    version_base=None,
    config_path=str(pathlib.Path(__file__).parent.parent.joinpath("config")),
    config_name='rethinknet')
def main(cfg):
    workspace = TrainRethinkNetWorkspace(cfg)
    workspace.run()


if __name__ == "__main__":
    main()
