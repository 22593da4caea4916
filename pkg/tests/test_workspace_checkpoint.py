import json
import pathlib

import numpy as np
import pytest
import torch
from omegaconf import OmegaConf

from rethinknet.common.checkpoint_util import atomic_open, atomic_write_text
from rethinknet.common.errors import ConfigurationError, SchemaError, StateError, UsageError
from rethinknet.common.json_logger import JsonLogger
from rethinknet.dataset.native import save_native
from rethinknet.model.common.normalizer import MinMaxNormalizer
from rethinknet.workspace.base_workspace import CHECKPOINT_FORMAT, read_checkpoint
from rethinknet.workspace.config_util import (
    compose_config, model_config_from_cfg, train_config_from_cfg)
from rethinknet.workspace.train_rethinknet_workspace import TrainRethinkNetWorkspace

from conftest import make_sign_dataset


def tiny_cfg(tmp_path, **updates):
    data_path = tmp_path / 'signs.txt'
    save_native(make_sign_dataset(n=24), str(data_path))
    base = {
        'task.dataset_path': str(data_path),
        'model.hidden_dim': 4,
        'model.rethink_iterations': 2,
        'model.cost': 'f1',
        'training.max_epochs': 3,
        'training.batch_size': 8,
        'output_dir': str(tmp_path / 'out'),
    }
    base.update(updates)
    return compose_config(updates=base)


class TestConfig:
    def test_defaults(self):
        cfg = compose_config()
        model_config = model_config_from_cfg(cfg)
        assert model_config.cell == 'lstm'
        assert model_config.hidden_dim == 128
        assert model_config.rethink_iterations == 3
        assert model_config.recurrent_dropout == 0.25
        train_config = train_config_from_cfg(cfg)
        assert train_config.lr == 2e-3
        assert train_config.patience == 10

    def test_task_override(self):
        cfg = compose_config(overrides=['task=yeast'])
        assert cfg.task.label_spec == 'last_k:14'
        assert cfg.task.name == 'yeast'

    def test_unknown_key(self):
        with pytest.raises(ConfigurationError):
            compose_config(updates={'model.no_such_key': 1})

    def test_invalid_values(self):
        cfg = compose_config(updates={'model.hidden_dim': 'wide'})
        with pytest.raises(ConfigurationError):
            model_config_from_cfg(cfg)
        cfg = compose_config(updates={'model.cell': 'transformer'})
        with pytest.raises(ConfigurationError):
            model_config_from_cfg(cfg)

    def test_no_code_evaluating_resolver(self):
        compose_config()
        assert not OmegaConf.has_resolver('eval')

    def test_missing_dataset(self, tmp_path):
        workspace = TrainRethinkNetWorkspace(compose_config(), output_dir=str(tmp_path))
        with pytest.raises(UsageError):
            workspace.run()


class TestTrainWorkspace:
    def test_checkpoint_restores_predictions(self, tmp_path):
        path = tmp_path / 'model.ckpt'
        cfg = tiny_cfg(tmp_path, **{'checkpoint.path': str(path)})
        workspace = TrainRethinkNetWorkspace(cfg, output_dir=cfg.output_dir)
        saved = workspace.run()
        assert pathlib.Path(saved) == path.absolute()
        assert workspace.data_info['n_labels'] == 2
        assert 1 <= len(workspace.history) <= 3

        restored = TrainRethinkNetWorkspace.create_from_checkpoint(str(path))
        assert restored.model_config == workspace.model_config
        assert restored.history == workspace.history
        assert restored.data_info == workspace.data_info
        for a, b in zip(workspace.model.state_dict().values(),
                restored.model.state_dict().values()):
            assert torch.equal(a, b)

        test = make_sign_dataset(n=16, seed=1)
        expected = workspace.evaluate(test)
        actual = restored.evaluate(test)
        assert {k: v.to_dict() for k, v in actual.items()} == \
            {k: v.to_dict() for k, v in expected.items()}

    def test_default_locations(self, tmp_path):
        cfg = tiny_cfg(tmp_path)
        saved = TrainRethinkNetWorkspace(cfg, output_dir=cfg.output_dir).run()
        out = tmp_path / 'out'
        assert pathlib.Path(saved) == (out / 'checkpoints' / 'latest.ckpt').absolute()
        lines = (out / 'logs.json.txt').read_text().splitlines()
        assert len(lines) >= 1
        assert 'train_loss' in json.loads(lines[0])

    def test_l2_selection(self, tmp_path):
        cfg = tiny_cfg(tmp_path, **{'l2.select': True, 'l2.grid': [1e-3, 1e-1], 'l2.folds': 2})
        workspace = TrainRethinkNetWorkspace(cfg, output_dir=cfg.output_dir)
        workspace.run()
        assert workspace.model_config.l2_strength in (1e-3, 1e-1)

    def test_evaluate_needs_model(self):
        workspace = TrainRethinkNetWorkspace(compose_config())
        with pytest.raises(UsageError):
            workspace.evaluate(make_sign_dataset(n=4))

    def test_missing_checkpoint(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            TrainRethinkNetWorkspace.create_from_checkpoint(str(tmp_path / 'none.ckpt'))


class TestAtomicWrite:
    def test_creates_parents(self, tmp_path):
        path = tmp_path / 'a' / 'b' / 'out.txt'
        atomic_write_text(path, 'hello\n')
        assert path.read_text() == 'hello\n'
        assert list(path.parent.iterdir()) == [path]

    def test_failure_keeps_previous_content(self, tmp_path):
        path = tmp_path / 'out.txt'
        path.write_text('old')
        with pytest.raises(RuntimeError):
            with atomic_open(path, 'w') as f:
                f.write('partial')
                raise RuntimeError('interrupted')
        assert path.read_text() == 'old'
        assert not (tmp_path / 'out.txt.tmp').exists()


class TestNormalizerState:
    def test_restores_into_unfitted_instance(self):
        fitted = MinMaxNormalizer.create_fit(np.array([[0.0, 5.0], [2.0, 5.0], [4.0, 5.0]]))
        restored = MinMaxNormalizer()
        assert not restored.is_fitted
        restored.load_state_dict(fitted.state_dict())
        assert restored.is_fitted
        x = np.array([[1.0, 7.0], [8.0, 5.0]])
        assert torch.equal(restored(x), fitted(x))
        assert restored(x).tolist() == [[0.25, 0.0], [1.0, 0.0]]

    def test_unfitted(self):
        with pytest.raises(StateError):
            MinMaxNormalizer().normalize(np.zeros((1, 2)))
        # an unfitted normalizer round-trips as empty state
        MinMaxNormalizer().load_state_dict(MinMaxNormalizer().state_dict())


class TestJsonLogger:
    def test_scalars_only(self, tmp_path):
        path = tmp_path / 'logs' / 'log.json.txt'
        with JsonLogger(str(path)) as json_logger:
            json_logger.log({'epoch': np.int64(2), 'train_loss': torch.tensor(0.5),
                'name': 'run', 'flag': True, 'weights': torch.ones(3)})
        assert json.loads(path.read_text()) == {'epoch': 2, 'train_loss': 0.5}

    def test_resume_drops_partial_line(self, tmp_path):
        path = tmp_path / 'log.json.txt'
        path.write_text('{"epoch": 0}\n{"epoch": 1}\n{"epo')
        with JsonLogger(str(path)) as json_logger:
            assert json_logger.get_last_log() == {'epoch': 1}
            json_logger.log({'epoch': 2})
        assert [json.loads(line)['epoch'] for line in path.read_text().splitlines()] == [0, 1, 2]
        assert JsonLogger(str(path)).n_records == 3


class TestCheckpointFormat:
    def test_rejects_foreign_files(self, tmp_path):
        garbage = tmp_path / 'garbage.ckpt'
        garbage.write_bytes(b'not a checkpoint')
        with pytest.raises(SchemaError):
            read_checkpoint(garbage)
        other = tmp_path / 'other.ckpt'
        torch.save({'weights': torch.zeros(2)}, str(other))
        with pytest.raises(SchemaError):
            read_checkpoint(other)

    def test_payload_header(self, tmp_path):
        workspace = TrainRethinkNetWorkspace(compose_config(), output_dir=str(tmp_path))
        path = workspace.save_checkpoint()
        payload = read_checkpoint(pathlib.Path(path))
        assert payload['format'] == CHECKPOINT_FORMAT
        assert set(payload['pickles']) == {'history', 'data_info'}
        # no model before training, only the empty feature scaler
        assert set(payload['state_dicts']) == {'normalizer'}
