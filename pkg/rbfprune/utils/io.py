"""
File formats: CSV datasets, JSON model files, line-delimited JSON reports and
plot-ready CSV tables.
"""

import csv
import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from rbfprune.core.exceptions import (
    DataFormatError,
    DimensionMismatchError,
    ModelFormatError,
    RbfPruneError,
)
from rbfprune.core.model import Dataset, RbfNetwork

logger = logging.getLogger(__name__)

PathLike = Union[str, Path]
MODEL_SCHEMA_VERSION = 1
RESPONSE_HEADER = 'y'


def _format_float(value) -> str:
    # repr of a Python float is the shortest string that parses back bit-exactly
    return repr(float(value))


def _read_rows(path: PathLike, has_header: bool) -> Tuple[Optional[List[str]], List[Tuple[int, List[float]]]]:
    try:
        handle = open(path, newline='')
    except OSError as e:
        raise DataFormatError(str(path), f"cannot open file: {e.strerror}")

    header = None
    rows: List[Tuple[int, List[float]]] = []
    width = None
    with handle:
        for line_no, cells in enumerate(csv.reader(handle), start=1):
            if not cells or all(not c.strip() for c in cells):
                continue
            if has_header and header is None:
                header = [c.strip() for c in cells]
                width = len(header)
                continue
            if width is None:
                width = len(cells)
            if len(cells) != width:
                raise DataFormatError(str(path), f"expected {width} columns, found {len(cells)}", line_no)
            values = []
            for column, cell in enumerate(cells):
                try:
                    value = float(cell)
                except ValueError:
                    raise DataFormatError(str(path), f"non-numeric cell {cell!r}", line_no, column)
                if not math.isfinite(value):
                    raise DataFormatError(str(path), f"non-finite cell {cell!r}", line_no, column)
                values.append(value)
            rows.append((line_no, values))

    if width is None:
        raise DataFormatError(str(path), "file has no header and no rows")
    return header, rows


def _resolve_column(path: PathLike, header: Optional[List[str]], width: int, column: Union[int, str]) -> int:
    if isinstance(column, str):
        if header is None:
            raise DataFormatError(str(path), f"response column {column!r} given by name but the file has no header")
        if column not in header:
            raise DataFormatError(str(path), f"response column {column!r} not in header {header}")
        return header.index(column)
    index = column + width if column < 0 else column
    if not 0 <= index < width:
        raise DataFormatError(str(path), f"response column {column} out of range for {width} columns")
    return index


def _map_binary_columns(path: PathLike, inputs: np.ndarray, names: Sequence[str]) -> np.ndarray:
    mapped = inputs.copy()
    for d in range(inputs.shape[1]):
        values = set(np.unique(inputs[:, d]).tolist())
        if 0.0 not in values:
            continue
        if values <= {0.0, 1.0}:
            mapped[:, d] = np.where(inputs[:, d] == 0.0, -1.0, 1.0)
        elif -1.0 in values and values <= {-1.0, 0.0, 1.0}:
            raise DataFormatError(str(path), f"ambiguous binary column {names[d]!r}: contains 0 and -1",
                                  column=d)
    return mapped


def load_csv(path: PathLike, has_header: bool = True, response_column: Union[int, str] = -1,
             binary_to_pm1: bool = False, expected_dim: Optional[int] = None) -> Dataset:
    """
    Load a comma-separated dataset.

    Args:
        path: CSV file ('.' decimal point)
        has_header: First non-blank line holds column names
        response_column: Index (negative counts from the end) or header name
        binary_to_pm1: Map feature columns whose values are all 0/1 to -1/+1
        expected_dim: Fail unless the file has this many feature columns

    Returns:
        Dataset with every other column as a feature
    """
    header, rows = _read_rows(path, has_header)
    width = len(header) if header is not None else len(rows[0][1])
    target = _resolve_column(path, header, width, response_column)
    if width < 2:
        raise DataFormatError(str(path), "need at least one feature column and a response column")

    table = np.array([values for _, values in rows], dtype=np.float64).reshape(len(rows), width)
    features = [c for c in range(width) if c != target]
    names = tuple(header[c] for c in features) if header is not None else tuple(f'x{i}' for i in range(len(features)))
    if expected_dim is not None and len(features) != expected_dim:
        raise DimensionMismatchError(f'feature columns in {path}', expected_dim, len(features))

    inputs = table[:, features]
    if binary_to_pm1 and len(rows):
        inputs = _map_binary_columns(path, inputs, names)
    logger.info("Loaded %d rows with %d features from %s", len(rows), len(features), path)
    return Dataset(inputs, table[:, target], names)


def load_csv_inputs(path: PathLike, dim: int, has_header: bool = True,
                    binary_to_pm1: bool = False) -> Tuple[np.ndarray, Optional[np.ndarray]]:
    """
    Load inputs for prediction.

    A file with dim columns has no responses; with dim + 1 columns the last
    one is the response.
    """
    header, rows = _read_rows(path, has_header)
    width = len(header) if header is not None else len(rows[0][1])
    if width not in (dim, dim + 1):
        raise DimensionMismatchError(f'columns in {path}', dim, width)
    table = np.array([values for _, values in rows], dtype=np.float64).reshape(len(rows), width)
    inputs = table[:, :dim]
    if binary_to_pm1 and len(rows):
        names = header[:dim] if header is not None else [f'x{i}' for i in range(dim)]
        inputs = _map_binary_columns(path, inputs, names)
    responses = table[:, dim] if width == dim + 1 else None
    return inputs, responses


def save_csv(dataset: Dataset, path: PathLike) -> None:
    """Write a dataset with a header, features first and the response last."""
    names = list(dataset.feature_names or [f'x{i}' for i in range(dataset.dim)])
    rows = ([_format_float(v) for v in row] + [_format_float(y)]
            for row, y in zip(dataset.inputs, dataset.responses))
    write_table(path, names + [RESPONSE_HEADER], rows)


def write_table(path: PathLike, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> int:
    """Write a CSV table; float cells use their round-trip repr."""
    count = 0
    with open(path, 'w', newline='') as handle:
        writer = csv.writer(handle, lineterminator='\n')
        writer.writerow(header)
        for row in rows:
            writer.writerow([_format_float(c) if isinstance(c, (float, np.floating)) else c for c in row])
            count += 1
    return count


@dataclass
class ModelFile:
    """A network plus the provenance it was produced with."""

    network: RbfNetwork
    provenance: Dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> Dict[str, Any]:
        net = self.network
        return {
            'schema_version': MODEL_SCHEMA_VERSION,
            'D': net.dim,
            'K': net.num_centroids,
            'log_gamma': net.log_gamma,
            'alpha': net.alpha,
            'beta': [float(b) for b in net.beta],
            'theta': [[float(t) for t in row] for row in net.theta],
            'provenance': self.provenance,
        }

    @classmethod
    def from_dict(cls, doc: Dict[str, Any], path: str = '<memory>') -> 'ModelFile':
        if not isinstance(doc, dict):
            raise ModelFormatError(path, "top level must be an object")
        version = doc.get('schema_version')
        if version != MODEL_SCHEMA_VERSION:
            raise ModelFormatError(path, f"unsupported schema_version {version!r}", version)
        required = {'D', 'K', 'log_gamma', 'alpha', 'beta', 'theta'}
        missing = required - set(doc)
        if missing:
            raise ModelFormatError(path, f"missing keys {sorted(missing)}", version)
        unknown = set(doc) - required - {'schema_version', 'provenance'}
        if unknown:
            raise ModelFormatError(path, f"unknown keys {sorted(unknown)}", version)

        dim, count = doc['D'], doc['K']
        beta, theta = doc['beta'], doc['theta']
        if not isinstance(beta, list) or len(beta) != count:
            raise ModelFormatError(path, f"beta must have K = {count} entries", version)
        if not isinstance(theta, list) or len(theta) != count or any(
                not isinstance(row, list) or len(row) != dim for row in theta):
            raise ModelFormatError(path, f"theta must be {count} rows of D = {dim} values", version)
        try:
            network = RbfNetwork(doc['log_gamma'], doc['alpha'], np.array(beta, dtype=np.float64),
                                 np.array(theta, dtype=np.float64).reshape(count, dim))
        except (TypeError, ValueError) as e:
            if isinstance(e, RbfPruneError):
                raise
            raise ModelFormatError(path, f"bad parameter values: {e}", version)
        return cls(network, doc.get('provenance') or {})


def save_model(network: RbfNetwork, path: PathLike, provenance: Optional[Dict[str, Any]] = None) -> None:
    """Write a model file; identical inputs give byte-identical files."""
    doc = ModelFile(network, provenance or {}).to_dict()
    with open(path, 'w') as handle:
        json.dump(doc, handle, indent=2, allow_nan=False)
        handle.write('\n')
    logger.info("Saved model (K=%d, D=%d) to %s", network.num_centroids, network.dim, path)


def read_model_file(path: PathLike) -> ModelFile:
    try:
        with open(path) as handle:
            doc = json.load(handle)
    except OSError as e:
        raise ModelFormatError(str(path), f"cannot open file: {e.strerror}")
    except json.JSONDecodeError as e:
        raise ModelFormatError(str(path), f"invalid JSON at line {e.lineno}: {e.msg}")
    return ModelFile.from_dict(doc, str(path))


def load_model(path: PathLike) -> RbfNetwork:
    """Load the network stored in a model file."""
    return read_model_file(path).network


def write_report(path: PathLike, records: Iterable[Dict[str, Any]], summary: Dict[str, Any]) -> None:
    """
    Write a line-delimited JSON report.

    Every record becomes one line; the summary is the last line and carries
    "type": "summary".
    """
    with open(path, 'w') as handle:
        for record in records:
            handle.write(json.dumps(record, default=str) + '\n')
        handle.write(json.dumps({'type': 'summary', **summary}, default=str) + '\n')


def read_report(path: PathLike) -> List[Dict[str, Any]]:
    records = []
    with open(path) as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                records.append(json.loads(line))
            except json.JSONDecodeError as e:
                raise DataFormatError(str(path), f"invalid JSON record: {e.msg}", line_no)
    return records
