from typing import Dict, Optional, Sequence
import logging
import pathlib

import dill
import torch
from hydra.core.hydra_config import HydraConfig
from omegaconf import OmegaConf

from rethinknet.common.checkpoint_util import atomic_open
from rethinknet.common.errors import SchemaError

logger = logging.getLogger(__name__)

CHECKPOINT_FORMAT = 'rethinknet.checkpoint'
CHECKPOINT_VERSION = 1


class BaseWorkspace:
    """
    Owns a config and the objects built from it. Attributes exposing
    ``state_dict``/``load_state_dict`` are checkpointed as state dicts, the
    names in ``include_keys`` are pickled with dill.
    """
    include_keys: Sequence[str] = tuple()
    exclude_keys: Sequence[str] = tuple()

    def __init__(self, cfg: OmegaConf, output_dir: Optional[str] = None):
        self.cfg = cfg
        self._output_dir = output_dir

    @property
    def output_dir(self) -> str:
        if self._output_dir is not None:
            return self._output_dir
        if HydraConfig.initialized():
            return HydraConfig.get().runtime.output_dir
        return self.cfg.output_dir

    def run(self):
        raise NotImplementedError()

    def get_checkpoint_path(self, tag: str = 'latest') -> pathlib.Path:
        return pathlib.Path(self.output_dir).joinpath('checkpoints', f'{tag}.ckpt')

    # ========= save ============
    def state_payload(self,
            exclude_keys: Optional[Sequence[str]] = None,
            include_keys: Optional[Sequence[str]] = None) -> Dict:
        exclude_keys = tuple(self.exclude_keys if exclude_keys is None else exclude_keys)
        include_keys = tuple(self.include_keys if include_keys is None else include_keys)
        payload = {
            'format': CHECKPOINT_FORMAT,
            'format_version': CHECKPOINT_VERSION,
            'cfg': self.cfg,
            'state_dicts': dict(),
            'pickles': dict(),
        }
        for key, value in self.__dict__.items():
            if key in exclude_keys:
                continue
            if hasattr(value, 'state_dict') and hasattr(value, 'load_state_dict'):
                # classifier and feature scaler
                payload['state_dicts'][key] = _copy_to_cpu(value.state_dict())
            elif key in include_keys:
                payload['pickles'][key] = dill.dumps(value)
        return payload

    def save_checkpoint(self, path: Optional[str] = None, tag: str = 'latest', **kwargs) -> str:
        path = self.get_checkpoint_path(tag) if path is None else pathlib.Path(path)
        payload = self.state_payload(**kwargs)
        with atomic_open(path, 'wb') as f:
            torch.save(payload, f, pickle_module=dill)
        logger.debug("checkpoint with %s written to %s",
            sorted(payload['state_dicts']) + sorted(payload['pickles']), path)
        return str(path.absolute())

    # ========= load ============
    def load_payload(self, payload: Dict,
            exclude_keys: Optional[Sequence[str]] = None,
            include_keys: Optional[Sequence[str]] = None):
        exclude_keys = tuple(exclude_keys or ())
        if include_keys is None:
            include_keys = payload['pickles'].keys()
        for key in include_keys:
            if key in payload['pickles'] and key not in exclude_keys:
                self.__dict__[key] = dill.loads(payload['pickles'][key])
        for key, state in payload['state_dicts'].items():
            if key in exclude_keys:
                continue
            target = self.__dict__.get(key)
            if target is None:
                raise SchemaError(f"checkpoint holds state for '{key}', which this workspace lacks")
            target.load_state_dict(state)

    def load_checkpoint(self, path: Optional[str] = None, tag: str = 'latest', **kwargs) -> Dict:
        path = self.get_checkpoint_path(tag) if path is None else pathlib.Path(path)
        payload = read_checkpoint(path)
        self.load_payload(payload, **kwargs)
        return payload

    @classmethod
    def create_from_checkpoint(cls, path: str, **kwargs) -> 'BaseWorkspace':
        payload = read_checkpoint(pathlib.Path(path))
        instance = cls(payload['cfg'])
        instance.load_payload(payload, **kwargs)
        return instance


def read_checkpoint(path: pathlib.Path) -> Dict:
    if not path.is_file():
        raise FileNotFoundError(f"checkpoint not found: {path}")
    try:
        with path.open('rb') as f:
            payload = torch.load(f, pickle_module=dill, weights_only=False)
    except Exception as e:
        raise SchemaError(f"{path} is not a readable checkpoint: {e}")
    if not isinstance(payload, dict) or payload.get('format') != CHECKPOINT_FORMAT:
        raise SchemaError(f"{path} is not a {CHECKPOINT_FORMAT} file")
    if payload.get('format_version') != CHECKPOINT_VERSION:
        raise SchemaError(
            f"{path} has checkpoint version {payload.get('format_version')}, "
            f"expected {CHECKPOINT_VERSION}")
    return payload


def _copy_to_cpu(x):
    if isinstance(x, torch.Tensor):
        return x.detach().to('cpu').clone()
    if isinstance(x, dict):
        return {k: _copy_to_cpu(v) for k, v in x.items()}
    if isinstance(x, list):
        return [_copy_to_cpu(v) for v in x]
    return x
