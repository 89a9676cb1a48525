"""Observations, regressor construction and CSV ingestion."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

__all__ = ["Dataset", "DataError", "prepare_dataset", "load_csv", "RawData"]


class DataError(ValueError):
    """Malformed or incomplete input data."""


@dataclass(frozen=True)
class RawData:
    values: np.ndarray
    names: list[str]
    index: list[str]


@dataclass(frozen=True)
class Dataset:
    """Effective sample ``Y`` (T x N) with regressors ``X`` (T x (Np + d)).

    Row t of X is ``[y_{t-1}', ..., y_{t-p}', d_t']``.
    """

    Y: np.ndarray
    X: np.ndarray
    lags: int
    n_det: int
    names: list[str]
    index: list[str]

    @property
    def T(self) -> int:
        return self.Y.shape[0]

    @property
    def N(self) -> int:
        return self.Y.shape[1]

    def require_estimable(self) -> None:
        """Estimation needs more observations than regressors."""
        if self.T <= self.X.shape[1]:
            raise DataError(f"effective sample T={self.T} does not exceed regressor count {self.X.shape[1]}")

    def initial_lags(self) -> np.ndarray:
        """p x N presample block ``[y_0, y_{-1}, ..., y_{1-p}]`` (most recent first)."""
        return self.X[0, : self.N * self.lags].reshape(self.lags, self.N)


def prepare_dataset(raw, lags: int, n_det: int = 1, names=None, index=None) -> Dataset:
    if isinstance(raw, RawData):
        names = raw.names if names is None else names
        index = raw.index if index is None else index
        raw = raw.values
    Y0 = np.asarray(raw, dtype=float)
    if Y0.ndim != 2:
        raise DataError("raw data must be a 2-D array (T0 x N)")
    T0, N = Y0.shape
    bad = np.argwhere(~np.isfinite(Y0))
    if bad.size:
        r, c = bad[0]
        raise DataError(f"missing or non-finite value at row {r + 1}, column {c + 1}")
    if lags < 1:
        raise DataError("lags must be >= 1")
    if n_det not in (0, 1):
        raise DataError("only a constant deterministic term (n_det in {0, 1}) is supported")
    if T0 <= lags:
        raise DataError(f"need more than {lags} observations, got {T0}")
    T = T0 - lags
    blocks = [Y0[lags - l : T0 - l] for l in range(1, lags + 1)]
    if n_det:
        blocks.append(np.ones((T, 1)))
    X = np.hstack(blocks)
    names = list(names) if names is not None else [f"y{i + 1}" for i in range(N)]
    index = list(index)[lags:] if index is not None else [str(t) for t in range(lags, T0)]
    return Dataset(Y=Y0[lags:].copy(), X=X, lags=lags, n_det=n_det, names=names, index=index)


def _is_number(cell: str) -> bool:
    try:
        float(cell)
    except ValueError:
        return False
    return True


def load_csv(path: str | Path) -> RawData:
    """Read a header + numeric-body CSV.

    A first column whose body cells are not all numeric is treated as a date
    (row label) column.
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"data file not found: {path}")
    with path.open(newline="") as fh:
        rows = list(csv.reader(fh))
    rows = [r for r in rows if r and any(c.strip() for c in r)]
    if len(rows) < 2:
        raise DataError(f"{path}: need a header row and at least one data row")
    header = [h.strip() for h in rows[0]]
    body = rows[1:]
    width = len(header)
    for i, r in enumerate(body, start=2):
        if len(r) != width:
            raise DataError(f"{path}: line {i} has {len(r)} fields, header has {width}")
    has_dates = not all(_is_number(r[0].strip()) for r in body)
    names = header[1:] if has_dates else header
    if len(set(names)) != len(names):
        dupes = sorted({n for n in names if names.count(n) > 1})
        raise DataError(f"{path}: duplicate column names {dupes}")
    start = 1 if has_dates else 0
    values = np.empty((len(body), width - start))
    for i, r in enumerate(body):
        for j, cell in enumerate(r[start:]):
            cell = cell.strip()
            if cell == "" or cell.lower() in ("na", "nan", "null"):
                raise DataError(f"{path}: line {i + 2}, column {names[j]!r}: missing value")
            try:
                v = float(cell)
            except ValueError:
                raise DataError(
                    f"{path}: line {i + 2}, column {names[j]!r}: non-numeric value {cell!r}"
                ) from None
            if not math.isfinite(v):
                raise DataError(f"{path}: line {i + 2}, column {names[j]!r}: missing value")
            values[i, j] = v
    index = [r[0].strip() for r in body] if has_dates else [str(i) for i in range(len(body))]
    return RawData(values=values, names=names, index=index)


def write_csv(path: str | Path, values: np.ndarray, names: list[str], index: list[str] | None = None) -> None:
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow((["date"] if index is not None else []) + list(names))
        for i, row in enumerate(np.atleast_2d(values)):
            lead = [index[i]] if index is not None else []
            w.writerow(lead + [repr(float(v)) for v in row])
