from typing import Any, Dict, Optional, Sequence
import pathlib

import hydra
from omegaconf import DictConfig, OmegaConf
from omegaconf.errors import OmegaConfBaseException

from rethinknet.classifier.rethinknet_classifier import ModelConfig
from rethinknet.classifier.training import TrainConfig
from rethinknet.common.errors import ConfigurationError

CONFIG_DIR = pathlib.Path(__file__).parent.parent.joinpath('config')
CONFIG_NAME = 'rethinknet'


def compose_config(overrides: Sequence[str] = (),
        updates: Optional[Dict[str, Any]] = None,
        config_name: str = CONFIG_NAME) -> DictConfig:
    """
    Compose the packaged config with hydra-style ``overrides``, then set the
    dotted keys in ``updates`` verbatim (paths and other free-form values).
    """
    with hydra.initialize_config_dir(config_dir=str(CONFIG_DIR.absolute()), version_base=None):
        cfg = hydra.compose(config_name=config_name, overrides=list(overrides))
    for key, value in (updates or dict()).items():
        try:
            OmegaConf.update(cfg, key, value, merge=False)
        except OmegaConfBaseException as e:
            raise ConfigurationError(f"cannot set {key}: {e}")
    return cfg


def _structured(schema, *blocks) -> Dict:
    try:
        merged = OmegaConf.merge(OmegaConf.structured(schema), *blocks)
    except OmegaConfBaseException as e:
        raise ConfigurationError(str(e))
    return OmegaConf.to_container(merged, resolve=True)


def model_config_from_cfg(cfg: DictConfig) -> ModelConfig:
    return ModelConfig(**_structured(ModelConfig, cfg.model))


def train_config_from_cfg(cfg: DictConfig) -> TrainConfig:
    return TrainConfig(**_structured(TrainConfig, cfg.training, cfg.optimizer))


def init_tracker(cfg: DictConfig, output_dir: Optional[str] = None):
    """wandb run for ``cfg.logging``, or None when tracking is disabled."""
    if cfg.logging.mode == 'disabled':
        return None
    import wandb

    wandb_cfg = OmegaConf.to_container(cfg.logging, resolve=True)
    for key in ('json_log', 'progress'):
        wandb_cfg.pop(key, None)
    project = wandb_cfg.pop('project')
    return wandb.init(
        project=project,
        dir=output_dir,
        config=OmegaConf.to_container(cfg, resolve=True),
        **wandb_cfg)
