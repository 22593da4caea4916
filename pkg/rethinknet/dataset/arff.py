"""
Reader for the ARFF subset used by MULAN multi-label data sets.

Supported: numeric/real/integer attributes and nominal attributes whose values
are {0,1}, dense and sparse data rows, '%' comments. Labels are either the last
K attributes (``last_k:<K>``) or the attributes named in a MULAN label XML file.
"""
from typing import List, Optional, Tuple
from dataclasses import dataclass
import logging
import pathlib
import xml.etree.ElementTree as ET

import numpy as np

from rethinknet.common.errors import ParseError, SchemaError
from rethinknet.dataset.multilabel_dataset import MultiLabelDataset

logger = logging.getLogger(__name__)

NUMERIC_TYPES = ('numeric', 'real', 'integer')
BINARY_VALUES = ('0', '1')


@dataclass(frozen=True)
class Attribute:
    name: str
    kind: str  # 'numeric' or 'binary'
    line: int


def parse_label_spec(label_spec: str) -> Tuple[str, object]:
    """'last_k:6' -> ('last_k', 6); 'xml:path' or a bare path -> ('xml', path)."""
    spec = str(label_spec).strip()
    if spec.startswith('last_k:'):
        try:
            k = int(spec[len('last_k:'):])
        except ValueError:
            raise SchemaError(f"malformed label spec '{label_spec}'")
        if k < 1:
            raise SchemaError(f"label spec needs K >= 1, got {k}")
        return 'last_k', k
    if spec.startswith('xml:'):
        spec = spec[len('xml:'):]
    return 'xml', spec


def read_label_xml(path: str) -> List[str]:
    """Label names of a MULAN XML file, in document order."""
    try:
        root = ET.parse(path).getroot()
    except ET.ParseError as e:
        raise ParseError(f"malformed label XML: {e}", line=e.position[0], path=str(path))
    names = list()
    for element in root.iter():
        # tags carry the MULAN namespace, e.g. '{http://mulan.sourceforge.net/labels}label'
        if element.tag.rsplit('}', 1)[-1] == 'label':
            name = element.get('name')
            if name is None:
                raise SchemaError(f"{path}: <label> element without a name")
            names.append(name)
    if len(names) == 0:
        raise SchemaError(f"{path}: no <label> elements")
    return names


def _unquote(token: str) -> str:
    token = token.strip()
    if len(token) >= 2 and token[0] == token[-1] and token[0] in ('"', "'"):
        return token[1:-1]
    return token


def _parse_attribute(rest: str, line_no: int, path: str) -> Attribute:
    rest = rest.strip()
    if not rest:
        raise ParseError("attribute declaration without a name", line=line_no, path=path)
    if rest[0] in ('"', "'"):
        end = rest.find(rest[0], 1)
        if end < 0:
            raise ParseError("unterminated quoted attribute name", line=line_no, path=path)
        name = rest[1:end]
        type_str = rest[end + 1:].strip()
    else:
        parts = rest.split(None, 1)
        if len(parts) < 2:
            raise ParseError(f"attribute '{parts[0]}' has no type", line=line_no, path=path)
        name, type_str = parts[0], parts[1].strip()

    if type_str.lower() in NUMERIC_TYPES:
        return Attribute(name, 'numeric', line_no)
    if type_str.startswith('{') and type_str.endswith('}'):
        values = [_unquote(v) for v in type_str[1:-1].split(',') if v.strip()]
        if values and set(values) <= set(BINARY_VALUES):
            return Attribute(name, 'binary', line_no)
        raise ParseError(
            f"nominal attribute '{name}' must take values in {{0,1}}", line=line_no, path=path)
    raise ParseError(f"unsupported attribute type '{type_str}'", line=line_no, path=path)


def _parse_value(token: str, attribute: Attribute, line_no: int, path: str) -> float:
    token = _unquote(token)
    if token == '?':
        raise ParseError(f"missing value for '{attribute.name}'", line=line_no, path=path)
    if attribute.kind == 'binary':
        if token not in BINARY_VALUES:
            raise ParseError(
                f"value '{token}' of '{attribute.name}' is not 0 or 1", line=line_no, path=path)
        return float(token)
    try:
        value = float(token)
    except ValueError:
        raise ParseError(
            f"non-numeric token '{token}' for '{attribute.name}'", line=line_no, path=path)
    if not np.isfinite(value):
        raise ParseError(f"non-finite value for '{attribute.name}'", line=line_no, path=path)
    return value


def _parse_sparse_row(body: str, attributes: List[Attribute], line_no: int, path: str) -> np.ndarray:
    row = np.zeros(len(attributes), dtype=np.float64)
    for entry in body.split(','):
        entry = entry.strip()
        if not entry:
            continue
        parts = entry.split(None, 1)
        if len(parts) != 2:
            raise ParseError(f"malformed sparse entry '{entry}'", line=line_no, path=path)
        try:
            index = int(parts[0])
        except ValueError:
            raise ParseError(f"non-integer sparse index '{parts[0]}'", line=line_no, path=path)
        if not 0 <= index < len(attributes):
            raise ParseError(f"sparse index {index} out of range", line=line_no, path=path)
        row[index] = _parse_value(parts[1], attributes[index], line_no, path)
    return row


def _parse_dense_row(body: str, attributes: List[Attribute], line_no: int, path: str) -> np.ndarray:
    tokens = body.split(',')
    if len(tokens) != len(attributes):
        raise ParseError(
            f"expected {len(attributes)} values, found {len(tokens)}", line=line_no, path=path)
    return np.array([
        _parse_value(token, attribute, line_no, path)
        for token, attribute in zip(tokens, attributes)], dtype=np.float64)


def read_arff(path: str) -> Tuple[str, List[Attribute], np.ndarray]:
    path = str(path)
    relation = None
    attributes: List[Attribute] = list()
    rows = list()
    in_data = False
    with open(path, 'r') as f:
        for line_no, raw_line in enumerate(f, start=1):
            line = raw_line.strip()
            if not line or line.startswith('%'):
                continue
            if in_data:
                if line.startswith('{'):
                    if not line.endswith('}'):
                        raise ParseError("unterminated sparse row", line=line_no, path=path)
                    rows.append(_parse_sparse_row(line[1:-1], attributes, line_no, path))
                else:
                    rows.append(_parse_dense_row(line, attributes, line_no, path))
                continue

            lowered = line.lower()
            if lowered.startswith('@relation'):
                relation = _unquote(line[len('@relation'):])
            elif lowered.startswith('@attribute'):
                attributes.append(_parse_attribute(line[len('@attribute'):], line_no, path))
            elif lowered.startswith('@data'):
                if len(attributes) == 0:
                    raise ParseError("@data before any @attribute", line=line_no, path=path)
                in_data = True
            else:
                raise ParseError(f"malformed header line '{line}'", line=line_no, path=path)

    if not in_data:
        raise ParseError("missing @data section", path=path)
    if len(rows) == 0:
        raise ParseError("no data rows", path=path)
    return relation, attributes, np.stack(rows)


def load_arff(path: str, label_spec: str, name: Optional[str] = None) -> MultiLabelDataset:
    relation, attributes, values = read_arff(path)
    names = [a.name for a in attributes]

    kind, arg = parse_label_spec(label_spec)
    if kind == 'last_k':
        if arg >= len(attributes):
            raise SchemaError(
                f"last_k:{arg} leaves no features among {len(attributes)} attributes")
        label_idxs = list(range(len(attributes) - arg, len(attributes)))
    else:
        label_idxs = list()
        positions = {n: i for i, n in enumerate(names)}
        for label_name in read_label_xml(arg):
            if label_name not in positions:
                raise SchemaError(f"label '{label_name}' is not an attribute of {path}")
            label_idxs.append(positions[label_name])

    for i in label_idxs:
        if attributes[i].kind != 'binary':
            raise SchemaError(f"label attribute '{names[i]}' is not a {{0,1}} nominal")
    label_set = set(label_idxs)
    feature_idxs = [i for i in range(len(attributes)) if i not in label_set]
    if len(feature_idxs) == 0:
        raise SchemaError(f"{path} has no feature attributes")

    if name is None:
        name = pathlib.Path(path).stem
    ds = MultiLabelDataset(
        features=values[:, feature_idxs],
        labels=values[:, label_idxs].astype(np.int8),
        name=name,
        feature_names=[names[i] for i in feature_idxs],
        label_names=[names[i] for i in label_idxs])
    logger.debug("loaded %s (relation %r)", ds, relation)
    return ds
