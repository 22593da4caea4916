"""
Hydra entry point over the same config tree as ``python -m rethinknet``.

    python train.py task=yeast model.cell=lstm model.cost=rankloss
    python train.py _target_=rethinknet.workspace.experiment_workspace.ExperimentWorkspace \
        task=scene experiment.kind=reweighting
"""
import logging
import pathlib
import sys

import hydra
from omegaconf import OmegaConf

from rethinknet.cli import exit_code
from rethinknet.common.errors import RethinkNetError
from rethinknet.workspace.base_workspace import BaseWorkspace

logger = logging.getLogger('rethinknet')


@hydra.main(
    version_base=None,
    config_path=str(pathlib.Path(__file__).parent.joinpath('rethinknet', 'config')),
    config_name='rethinknet')
def main(cfg: OmegaConf):
    # resolve once so every ${now:} interpolation sees the same time
    OmegaConf.resolve(cfg)

    cls = hydra.utils.get_class(cfg._target_)
    workspace: BaseWorkspace = cls(cfg)
    try:
        path = workspace.run()
    except (RethinkNetError, FileNotFoundError) as e:
        logger.error("%s", e)
        sys.exit(exit_code(e))
    logger.info("%s finished, output in %s", cls.__name__, path)


if __name__ == "__main__":
    main()
