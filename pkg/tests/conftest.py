import os
import pathlib

import numpy as np
import pytest
import torch

from rethinknet.dataset.multilabel_dataset import MultiLabelDataset

DATA_DIR_ENV = 'RETHINK_DATA_DIR'


def make_sign_dataset(n: int = 64, seed: int = 0) -> MultiLabelDataset:
    """d=2, K=2, label k is 1 when feature k is positive."""
    rng = np.random.default_rng(seed)
    features = rng.uniform(-1.0, 1.0, size=(n, 2))
    labels = (features > 0).astype(np.int8)
    return MultiLabelDataset(features, labels, name='signs')


def make_random_dataset(n: int = 24, d: int = 4, k: int = 3, seed: int = 0) -> MultiLabelDataset:
    rng = np.random.default_rng(seed)
    features = rng.normal(size=(n, d))
    labels = (rng.uniform(size=(n, k)) < 0.4).astype(np.int8)
    return MultiLabelDataset(features, labels, name='random')


@pytest.fixture
def sign_dataset():
    return make_sign_dataset()


@pytest.fixture
def random_dataset():
    return make_random_dataset()


@pytest.fixture
def write_text(tmp_path):
    def _write(name: str, text: str) -> str:
        path = tmp_path / name
        path.write_text(text)
        return str(path)
    return _write


@pytest.fixture
def data_dir():
    value = os.environ.get(DATA_DIR_ENV)
    if not value or not pathlib.Path(value).is_dir():
        pytest.skip(f"set {DATA_DIR_ENV} to a directory with MULAN data sets")
    return pathlib.Path(value)


def mulan_file(data_dir: pathlib.Path, name: str) -> str:
    path = data_dir / f'{name}.arff'
    if not path.is_file():
        pytest.skip(f"{path} not found")
    return str(path)


@pytest.fixture(autouse=True)
def _single_thread_runs(monkeypatch):
    # parallel runs are exercised explicitly where they matter
    monkeypatch.setenv('RETHINK_THREADS', '1')
    torch.set_num_threads(1)
    torch.manual_seed(0)
