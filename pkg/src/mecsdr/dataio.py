"""Loading delimited datasets and building deterministic splits.

Files are UTF-8 delimited text (comma by default), transparently
gunzipped when the name ends in ``.gz``.  Rows are samples; a transpose
switch accommodates files shipped as variables x samples.  Missing or
non-numeric predictor cells are hard errors that name the offending row
and column.
"""

from __future__ import annotations

import csv
import gzip
import io
import os
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DataError, DegenerateSplitError

RESPONSE_KINDS = ("numeric", "categorical")


@dataclass(frozen=True)
class Dataset:
    """A predictor matrix with its response and column names."""

    X: np.ndarray
    y: np.ndarray
    feature_names: tuple[str, ...]
    response_kind: str
    response_name: str = "y"

    def __post_init__(self) -> None:
        if self.X.ndim != 2:
            raise DataError("predictor matrix must be 2-d")
        if self.X.shape[0] != self.y.shape[0]:
            raise DataError("predictor and response row counts differ")
        if self.response_kind not in RESPONSE_KINDS:
            raise ConfigError(f"unknown response kind {self.response_kind!r}")

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]

    def take(self, indices) -> "Dataset":
        idx = np.asarray(indices, dtype=int)
        return Dataset(
            X=self.X[idx],
            y=self.y[idx],
            feature_names=self.feature_names,
            response_kind=self.response_kind,
            response_name=self.response_name,
        )


def _open_text(path: str):
    if path.endswith(".gz"):
        return io.TextIOWrapper(gzip.open(path, "rb"), encoding="utf-8", newline="")
    return open(path, encoding="utf-8", newline="")


def _read_grid(path: str, delimiter: str) -> list[list[str]]:
    try:
        with _open_text(path) as handle:
            rows = [row for row in csv.reader(handle, delimiter=delimiter) if row]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if not rows:
        raise DataError(f"{path} is empty")
    width = len(rows[0])
    for i, row in enumerate(rows):
        if len(row) != width:
            raise DataError(
                f"{path}: row {i + 1} has {len(row)} fields, expected {width}"
            )
    return rows


def _resolve_response_column(columns: list[str], response, path: str) -> int:
    if response is None:
        return len(columns) - 1
    if isinstance(response, int) or (
        isinstance(response, str) and response.lstrip("-").isdigit()
    ):
        idx = int(response)
        if idx < 0:
            idx += len(columns)
        if not 0 <= idx < len(columns):
            raise DataError(f"{path}: response column index {response} out of range")
        return idx
    if response in columns:
        return columns.index(response)
    raise DataError(f"{path}: response column {response!r} not found")


def load_csv(
    path: str,
    response=None,
    has_header: bool = True,
    delimiter: str = ",",
    transpose: bool = False,
    response_kind: str | None = None,
) -> Dataset:
    """Load a delimited file into a :class:`Dataset`.

    Parameters
    ----------
    response:
        Column holding the response, as header name or integer index
        (negative allowed).  Defaults to the last column.
    has_header:
        Whether the first row names the columns.
    transpose:
        Transpose the raw cell grid before any other interpretation,
        for files stored as variables x samples.
    response_kind:
        Force ``"numeric"`` or ``"categorical"``; by default the
        response is categorical exactly when any value fails to parse
        as a number.
    """
    if response_kind is not None and response_kind not in RESPONSE_KINDS:
        raise ConfigError(f"unknown response kind {response_kind!r}")
    grid = _read_grid(path, delimiter)
    if transpose:
        grid = [list(row) for row in zip(*grid)]
    if has_header:
        header, body = grid[0], grid[1:]
    else:
        header = [f"x{j}" for j in range(len(grid[0]))]
        body = grid
    if not body:
        raise DataError(f"{path}: no data rows")
    col = _resolve_response_column(header, response, path)

    n, width = len(body), len(header)
    X = np.empty((n, width - 1))
    y_raw: list[str] = []
    feature_names = tuple(name for j, name in enumerate(header) if j != col)
    offset = 2 if has_header else 1  # 1-based file row of the first data row
    for i, row in enumerate(body):
        k = 0
        for j, cell in enumerate(row):
            if j == col:
                y_raw.append(cell)
                continue
            text = cell.strip()
            if text == "":
                raise DataError(
                    f"{path}: missing value at row {i + offset}, column {header[j]!r}"
                )
            try:
                value = float(text)
            except ValueError as exc:
                raise DataError(
                    f"{path}: row {i + offset}, column {header[j]!r}: "
                    f"{cell!r} is not numeric"
                ) from exc
            if not np.isfinite(value):
                raise DataError(
                    f"{path}: non-finite value at row {i + offset}, column {header[j]!r}"
                )
            X[i, k] = value
            k += 1

    y = _parse_response(y_raw, response_kind, path, header[col])
    return Dataset(
        X=X,
        y=y,
        feature_names=feature_names,
        response_kind="categorical" if y.dtype.kind in "USO" else "numeric",
        response_name=header[col],
    )


def _parse_response(raw: list[str], forced: str | None, path: str, name: str) -> np.ndarray:
    stripped = [v.strip() for v in raw]
    if any(v == "" for v in stripped):
        row = stripped.index("") + 1
        raise DataError(f"{path}: missing response value in data row {row}")
    numeric: np.ndarray | None = None
    try:
        values = np.array([float(v) for v in stripped])
        if not np.isfinite(values).all():
            raise DataError(f"{path}: non-finite response value in column {name!r}")
        numeric = values
    except ValueError:
        numeric = None
    if forced == "numeric":
        if numeric is None:
            raise DataError(f"{path}: response column {name!r} is not numeric")
        return numeric
    if forced == "categorical" or numeric is None:
        return np.array(stripped, dtype=object)
    return numeric


def save_csv(data: Dataset, path: str, delimiter: str = ",") -> None:
    """Write a dataset back out; numbers round-trip at full precision."""
    opener = gzip.open if path.endswith(".gz") else open
    with opener(path, "wt", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, delimiter=delimiter)
        writer.writerow(list(data.feature_names) + [data.response_name])
        for i in range(data.n):
            row = [format(v, ".17g") for v in data.X[i]]
            value = data.y[i]
            row.append(str(value) if data.response_kind == "categorical" else format(value, ".17g"))
            writer.writerow(row)


def _finish_split(data: Dataset, test_idx: np.ndarray) -> tuple[Dataset, Dataset]:
    mask = np.zeros(data.n, dtype=bool)
    mask[test_idx] = True
    train_idx = np.flatnonzero(~mask)
    if train_idx.size == 0 or test_idx.size == 0:
        raise DegenerateSplitError("both split parts must be non-empty")
    train = data.take(train_idx)
    if data.response_kind == "categorical" and len(set(train.y.tolist())) < 2:
        raise DegenerateSplitError("training part lost all but one class")
    return train, data.take(test_idx)


def split_first_k_test(data: Dataset, k: int) -> tuple[Dataset, Dataset]:
    """First ``k`` rows become the test set, the rest train."""
    if not 0 < k < data.n:
        raise DegenerateSplitError(f"test size {k} must lie strictly between 0 and {data.n}")
    return _finish_split(data, np.arange(k))


def split_fraction(data: Dataset, seed: int, test_frac: float) -> tuple[Dataset, Dataset]:
    """Seeded random split holding out roughly ``test_frac`` of the rows."""
    if not 0.0 < test_frac < 1.0:
        raise ConfigError(f"test fraction must be in (0, 1), got {test_frac}")
    k = min(max(int(round(data.n * test_frac)), 1), data.n - 1)
    rng = np.random.default_rng(seed)
    return _finish_split(data, rng.permutation(data.n)[:k])


def split_index_list(data: Dataset, indices) -> tuple[Dataset, Dataset]:
    """Explicit test row indices (0-based)."""
    idx = np.asarray(list(indices), dtype=int)
    if idx.size == 0:
        raise DegenerateSplitError("empty test index list")
    if idx.size != np.unique(idx).size:
        raise DataError("duplicate test indices")
    if idx.min(initial=0) < 0 or idx.max(initial=-1) >= data.n:
        raise DataError("test index out of range")
    return _finish_split(data, idx)


def parse_split(text: str):
    """Parse a split description into ``f(data, seed) -> (train, test)``.

    Accepted forms: ``first:K``, ``frac:F`` and ``idx:i1,i2,...``.
    """
    head, _, rest = text.partition(":")
    if head == "first" and rest:
        try:
            k = int(rest)
        except ValueError:
            raise ConfigError(f"bad split {text!r}: {rest!r} is not an integer") from None
        return lambda data, seed: split_first_k_test(data, k)
    if head == "frac" and rest:
        try:
            frac = float(rest)
        except ValueError:
            raise ConfigError(f"bad split {text!r}: {rest!r} is not a number") from None
        return lambda data, seed: split_fraction(data, seed, frac)
    if head == "idx" and rest:
        try:
            indices = [int(v) for v in rest.split(",") if v != ""]
        except ValueError:
            raise ConfigError(f"bad split {text!r}: indices must be integers") from None
        return lambda data, seed: split_index_list(data, indices)
    raise ConfigError(
        f"bad split {text!r}; expected first:K, frac:F or idx:i1,i2,..."
    )
