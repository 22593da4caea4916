if __name__ == "__main__":
    import sys
    import os
    import pathlib

    ROOT_DIR = str(pathlib.Path(__file__).parent.parent.parent)
    sys.path.append(ROOT_DIR)
    os.chdir(ROOT_DIR)

from typing import Optional
from dataclasses import replace
import logging
import os
import pathlib

import hydra
from omegaconf import OmegaConf

from rethinknet.common.errors import ConfigurationError
from rethinknet.harness import protocol
from rethinknet.harness.report import Report, emit_report
from rethinknet.workspace.base_workspace import BaseWorkspace
from rethinknet.workspace.config_util import model_config_from_cfg, train_config_from_cfg
from rethinknet.workspace.train_rethinknet_workspace import load_task_dataset

logger = logging.getLogger(__name__)

EXPERIMENT_KINDS = ('experiment', 'reweighting', 'cells', 'br', 'compare_br', 'curve')


class ExperimentWorkspace(BaseWorkspace):
    """Runs one repeated-split protocol from ``cfg.experiment`` and writes its report."""

    def __init__(self, cfg: OmegaConf, output_dir: Optional[str] = None):
        super().__init__(cfg, output_dir=output_dir)
        if cfg.experiment.kind not in EXPERIMENT_KINDS:
            raise ConfigurationError(
                f"unknown experiment kind '{cfg.experiment.kind}', expected one of {EXPERIMENT_KINDS}")
        self.model_config = model_config_from_cfg(cfg)
        self.train_config = train_config_from_cfg(cfg)
        self.report: Optional[Report] = None

    def build_report(self) -> Report:
        cfg = self.cfg
        exp = cfg.experiment
        dataset = load_task_dataset(cfg)
        common = dict(
            repeats=exp.repeats,
            num_workers=exp.num_workers,
            l2_cv=cfg.l2.select,
            l2_grid=list(cfg.l2.grid),
            cv_folds=cfg.l2.folds)

        if exp.kind == 'experiment':
            return protocol.run_experiment(dataset, self.model_config, self.train_config, **common)
        if exp.kind == 'curve':
            config = replace(self.model_config, rethink_iterations=exp.curve_iterations)
            return protocol.run_experiment(dataset, config, self.train_config, **common)
        if exp.kind == 'reweighting':
            return protocol.compare_reweighting(dataset, self.model_config, self.train_config, **common)
        if exp.kind == 'cells':
            return protocol.compare_cells(dataset, self.model_config, self.train_config,
                cells=list(exp.cells), parameter_budget=exp.parameter_budget, **common)
        if exp.kind == 'br':
            return protocol.br_baseline(dataset, self.train_config,
                hidden_dim=exp.br_hidden_dim,
                l2_strength=self.model_config.l2_strength,
                **common)
        return protocol.compare_with_br(dataset, self.model_config, self.train_config,
            br_hidden_dim=exp.br_hidden_dim, **common)

    def run(self) -> str:
        self.report = self.build_report()
        path = self.cfg.experiment.report_path
        if path is None:
            path = os.path.join(self.output_dir, 'report.json')
        path = emit_report(self.report, path, 'json')
        logger.info("wrote %s report to %s", self.cfg.experiment.kind, path)
        return path


@hydra.main(
    version_base=None,
    config_path=str(pathlib.Path(__file__).parent.parent.joinpath("config")),
    config_name='rethinknet')
def main(cfg):
    workspace = ExperimentWorkspace(cfg)
    workspace.run()


if __name__ == "__main__":
    main()
