"""
Native text format.

    N d K
    <comma-separated relevant label indices or empty>\t<space-separated index:value pairs>
    ... (N lines)

Feature indices not listed are zero. Values are written with ``repr`` so a
save/load round trip reproduces every float64 exactly.
"""
import pathlib
from typing import Optional

import numpy as np

from rethinknet.common.checkpoint_util import atomic_write_text
from rethinknet.common.errors import ParseError
from rethinknet.dataset.multilabel_dataset import MultiLabelDataset


def _parse_int(token: str, what: str, line_no: int, path: str) -> int:
    try:
        return int(token)
    except ValueError:
        raise ParseError(f"non-integer {what} '{token}'", line=line_no, path=path)


def load_native(path: str, name: Optional[str] = None) -> MultiLabelDataset:
    path = str(path)
    with open(path, 'r') as f:
        lines = f.read().split('\n')
    # a single trailing newline is not an example
    if len(lines) > 0 and lines[-1] == '':
        lines = lines[:-1]
    if len(lines) == 0:
        raise ParseError("empty file", line=1, path=path)

    header = lines[0].split()
    if len(header) != 3:
        raise ParseError("header must be 'N d K'", line=1, path=path)
    n, d, k = (_parse_int(t, 'header field', 1, path) for t in header)
    if n < 1 or d < 1 or k < 1:
        raise ParseError(f"header needs N, d, K >= 1, got {n} {d} {k}", line=1, path=path)
    if len(lines) - 1 != n:
        raise ParseError(
            f"header announces {n} examples, found {len(lines) - 1}", line=len(lines), path=path)

    features = np.zeros((n, d), dtype=np.float64)
    labels = np.zeros((n, k), dtype=np.int8)
    for row, line in enumerate(lines[1:]):
        line_no = row + 2
        line = line.rstrip('\r')
        if '\t' not in line:
            raise ParseError("missing TAB between labels and features", line=line_no, path=path)
        label_field, feature_field = line.split('\t', 1)

        for token in label_field.split(','):
            token = token.strip()
            if not token:
                continue
            j = _parse_int(token, 'label index', line_no, path)
            if not 0 <= j < k:
                raise ParseError(f"label index {j} outside [0, {k})", line=line_no, path=path)
            labels[row, j] = 1

        for pair in feature_field.split():
            if ':' not in pair:
                raise ParseError(f"malformed feature pair '{pair}'", line=line_no, path=path)
            idx_token, value_token = pair.split(':', 1)
            j = _parse_int(idx_token, 'feature index', line_no, path)
            if not 0 <= j < d:
                raise ParseError(f"feature index {j} outside [0, {d})", line=line_no, path=path)
            try:
                value = float(value_token)
            except ValueError:
                raise ParseError(f"non-numeric feature value '{value_token}'", line=line_no, path=path)
            if not np.isfinite(value):
                raise ParseError("non-finite feature value", line=line_no, path=path)
            features[row, j] = value

    if name is None:
        name = pathlib.Path(path).stem
    return MultiLabelDataset(features, labels, name=name)


def save_native(ds: MultiLabelDataset, path: str):
    path = pathlib.Path(path)
    lines = [f'{ds.n_examples} {ds.n_features} {ds.n_labels}']
    for features, labels in zip(ds.features, ds.labels):
        label_field = ','.join(str(j) for j in np.flatnonzero(labels))
        feature_field = ' '.join(
            f'{j}:{float(features[j])!r}' for j in np.flatnonzero(features))
        lines.append(f'{label_field}\t{feature_field}')
    atomic_write_text(path, '\n'.join(lines) + '\n')
