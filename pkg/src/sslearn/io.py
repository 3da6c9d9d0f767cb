"""CSV readers and writers for series, exogenous tables and matrices.

Series files have header ``t,value`` with contiguous 1-based t and an empty
field for a missing value. Exogenous files have header ``t,x1,...,xp``.
Errors name the file and line.
"""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

__all__ = ["CSVFormatError", "read_series_csv", "read_exogenous_csv", "write_columns_csv", "fmt"]


class CSVFormatError(ValueError):
    def __init__(self, path, line: int, message: str):
        self.path = str(path)
        self.line = line
        super().__init__(f"{path}:{line}: {message}")


def fmt(v: float) -> str:
    """17 significant digits, empty for NaN."""
    return "" if np.isnan(v) else f"{v:.17g}"


def _rows(path):
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None:
            raise CSVFormatError(path, 1, "empty file")
        yield 1, [h.strip() for h in header]
        for lineno, row in enumerate(reader, start=2):
            if row:
                yield lineno, row


def _read_table(path, first_cols: list[str] | None, prefix: str | None, start_t: int):
    it = _rows(path)
    _, header = next(it)
    if header[0] != "t":
        raise CSVFormatError(path, 1, f"first column must be 't', got {header[0]!r}")
    names = header[1:]
    if first_cols is not None and names != first_cols:
        raise CSVFormatError(path, 1, f"expected header t,{','.join(first_cols)}")
    if prefix is not None:
        want = [f"{prefix}{i}" for i in range(1, len(names) + 1)]
        if not names or names != want:
            raise CSVFormatError(path, 1, f"expected header t,{prefix}1..{prefix}p, got {header}")
    rows = []
    expect = start_t
    for lineno, row in it:
        if len(row) != len(header):
            raise CSVFormatError(path, lineno, f"expected {len(header)} fields, got {len(row)}")
        try:
            t = int(row[0])
        except ValueError:
            raise CSVFormatError(path, lineno, f"bad time index {row[0]!r}") from None
        if t != expect:
            raise CSVFormatError(path, lineno, f"time index {t} breaks contiguity, expected {expect}")
        expect += 1
        vals = []
        for field in row[1:]:
            field = field.strip()
            if not field:
                vals.append(np.nan)
                continue
            try:
                vals.append(float(field))
            except ValueError:
                raise CSVFormatError(path, lineno, f"not a number: {field!r}") from None
            if not np.isfinite(vals[-1]):
                raise CSVFormatError(path, lineno, f"non-finite value {field!r}")
        rows.append(vals)
    if not rows:
        raise CSVFormatError(path, 2, "no data rows")
    return np.array(rows, dtype=float)


def read_series_csv(path) -> np.ndarray:
    return _read_table(path, ["value"], None, 1)[:, 0]


def read_exogenous_csv(path, start_t: int = 1) -> np.ndarray:
    """Exogenous table; missing fields are not allowed."""
    X = _read_table(path, None, "x", start_t)
    bad = np.argwhere(np.isnan(X))
    if bad.size:
        raise CSVFormatError(path, int(bad[0, 0]) + 2, "exogenous values may not be missing")
    return X


def write_columns_csv(target, header: list[str], columns: list[np.ndarray]) -> None:
    """Write columns to a path or an open text stream."""
    cols = [np.asarray(c) for c in columns]
    if hasattr(target, "write"):
        _emit(target, header, cols)
        return
    with Path(target).open("w", newline="", encoding="utf-8") as fh:
        _emit(fh, header, cols)


def _emit(fh, header, cols) -> None:
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    for i in range(len(cols[0])):
        w.writerow([
            str(c[i]) if np.issubdtype(c.dtype, np.integer) else fmt(float(c[i])) for c in cols
        ])
