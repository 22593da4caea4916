from typing import Optional
import pathlib

from rethinknet.common.errors import UsageError
from rethinknet.dataset.arff import load_arff
from rethinknet.dataset.multilabel_dataset import MultiLabelDataset
from rethinknet.dataset.native import load_native

FORMATS = ('auto', 'arff', 'native')


def load_dataset(path: str, fmt: str = 'auto',
        label_spec: Optional[str] = None,
        name: Optional[str] = None) -> MultiLabelDataset:
    """
    Load by explicit format or by extension ('.arff' is ARFF, anything else
    native). ARFF needs a label spec; when omitted, a MULAN XML file next to
    the data (same stem, or the stem before the first '-') is used.
    """
    path = pathlib.Path(path)
    if fmt not in FORMATS:
        raise UsageError(f"unknown format '{fmt}', expected one of {FORMATS}")
    if not path.is_file():
        raise FileNotFoundError(f"dataset file not found: {path}")
    if fmt == 'auto':
        fmt = 'arff' if path.suffix.lower() == '.arff' else 'native'

    if fmt == 'native':
        return load_native(str(path), name=name)

    if label_spec is None:
        candidates = [
            path.with_suffix('.xml'),
            path.with_name(path.stem.split('-')[0] + '.xml')]
        for candidate in candidates:
            if candidate.is_file():
                label_spec = f'xml:{candidate}'
                break
        else:
            raise UsageError(f"ARFF file {path} needs a label spec (last_k:<K> or xml:<path>)")
    if name is None:
        name = path.stem.split('-')[0]
    return load_arff(str(path), label_spec, name=name)
