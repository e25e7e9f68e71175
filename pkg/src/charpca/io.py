"""CSV ingestion and output.

Files are UTF-8, comma separated, with one header row. By default each row is
a sample and each column a variable; the matrix is transposed on load into
the package's ``p x n`` convention. ``columns_are_samples=True`` reads the
file the other way round (header then names the samples).
"""
import csv
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .errors import IngestionError

FLOAT_FMT = "%.17g"


@dataclass
class CsvData:
    """``names`` is the header: variable names, or sample names when columns are samples."""

    matrix: np.ndarray
    names: list
    labels: Optional[np.ndarray] = None
    label_names: tuple = ()


def _parse_cell(token, row, col):
    s = token.strip()
    if s == "" or s.lower() in ("na", "nan"):
        return math.nan
    try:
        v = float(s)
    except ValueError:
        raise IngestionError(f"non-numeric cell at row {row}, column {col!r}: {token!r}") from None
    if math.isinf(v):
        raise IngestionError(f"infinite value at row {row}, column {col!r}")
    return v


def load_csv(path, columns_are_samples=False, label_column=None, impute_mean=False):
    """Read a numeric CSV into a ``p x n`` matrix, optionally splitting off a binary label column.

    Row numbers in error messages count the header as row 1.
    """
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.reader(fh))
    except (OSError, UnicodeDecodeError) as exc:
        raise IngestionError(f"cannot read {path}: {exc}") from exc
    rows = [r for r in rows if any(cell.strip() for cell in r)]
    if len(rows) < 2:
        raise IngestionError(f"{path}: need a header row and at least one data row")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    for i, r in enumerate(body, start=2):
        if len(r) != len(header):
            raise IngestionError(f"row {i} has {len(r)} fields, header has {len(header)}")

    labels = None
    label_names = ()
    if label_column is not None:
        if columns_are_samples:
            raise IngestionError("--label-column requires rows to be samples")
        if label_column not in header:
            raise IngestionError(f"label column {label_column!r} not in header")
        j = header.index(label_column)
        raw = [r[j].strip() for r in body]
        label_names = tuple(sorted(set(raw)))
        if len(label_names) != 2:
            raise IngestionError(f"label column must hold exactly two classes, found {label_names}")
        labels = np.array([label_names.index(v) for v in raw], dtype=np.int64)
        header = header[:j] + header[j + 1:]
        body = [r[:j] + r[j + 1:] for r in body]

    values = np.array(
        [[_parse_cell(tok, i, header[c]) for c, tok in enumerate(r)] for i, r in enumerate(body, start=2)],
        dtype=float,
    ).reshape(len(body), len(header))
    missing = np.isnan(values)
    if missing.any():
        if not impute_mean:
            i, c = np.argwhere(missing)[0]
            raise IngestionError(
                f"missing value at row {i + 2}, column {header[c]!r} (use --impute-mean to fill)"
            )
        axis = 1 if columns_are_samples else 0
        means = np.nanmean(values, axis=axis, keepdims=True)
        if np.isnan(means).any():
            raise IngestionError("a variable has no observed values; cannot impute")
        values = np.where(missing, np.broadcast_to(means, values.shape), values)

    matrix = values if columns_are_samples else values.T
    return CsvData(matrix=np.ascontiguousarray(matrix), names=header, labels=labels,
                   label_names=label_names)


def save_csv(path, X, names=None, columns_are_samples=False):
    """Write a ``p x n`` matrix with ``%.17g`` formatting (round-trips bit-exactly)."""
    X = np.asarray(X, dtype=float)
    table = X if columns_are_samples else X.T
    if names is None:
        count = table.shape[1]
        prefix = "s" if columns_are_samples else "v"
        names = [f"{prefix}{i + 1}" for i in range(count)]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh)
        w.writerow(names)
        for row in table:
            w.writerow([FLOAT_FMT % v for v in row])
