"""CSV loading and environment splitting for tabular data.

Input files are UTF-8, comma-separated with a header row, ``.`` as the
decimal separator and no thousands separators. Rows with a missing or
non-numeric feature cell are rejected, never imputed.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .core import LabeledDataset, standardize
from .exceptions import (
    DimensionMismatch,
    MissingColumn,
    NonNumericCell,
    ParseError,
    RowOutOfRange,
    SRDOError,
)

TASKS = ("regression", "binary")


@dataclass(frozen=True)
class RawTable:
    """Parsed CSV: numeric features, the target and the environment column.

    ``lines`` holds the physical file line of every data row (header is
    line 1).
    """

    feature_names: tuple
    features: np.ndarray
    target: np.ndarray
    target_name: str
    task: str
    environment: np.ndarray | None = None
    environment_name: str | None = None
    lines: np.ndarray | None = None
    label_mapping: dict = field(default_factory=dict)

    @property
    def n(self):
        return self.features.shape[0]


def _to_float(text):
    text = text.strip()
    if not text:
        raise ValueError("empty")
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("non-finite")
    return value


def encode_binary(labels):
    """Map two distinct labels to -1/+1.

    ``{0, 1}`` and ``{-1, +1}`` keep their obvious meaning; two arbitrary
    strings map the lexicographically smaller one to -1. Returns the coded
    array and the mapping used.
    """
    raw = [s.strip() for s in labels]
    distinct = sorted(set(raw))
    if len(distinct) != 2:
        raise SRDOError(f"binary target needs exactly two labels, found {distinct}")
    try:
        nums = sorted({float(s) for s in distinct})
    except ValueError:
        nums = None
    if nums in ([0.0, 1.0], [-1.0, 1.0]):
        mapping = {s: (1.0 if float(s) == 1.0 else -1.0) for s in distinct}
    else:
        mapping = {distinct[0]: -1.0, distinct[1]: 1.0}
    return np.array([mapping[s] for s in raw]), mapping


def load_csv(path, target_column, environment_column=None, task="regression",
             exclude=(), keep_environment_feature=True):
    """Read a CSV into a :class:`RawTable`.

    Every column other than the target and ``exclude`` is a feature and must
    be numeric. ``target_column=None`` reads features only. The environment column stays among the features unless
    ``keep_environment_feature`` is false. Raises :class:`MissingColumn`,
    :class:`ParseError` (ragged rows) or :class:`NonNumericCell`.
    """
    if task not in TASKS:
        raise SRDOError(f"task must be one of {TASKS}")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(1, 1, "file is empty") from None
        except csv.Error as exc:
            raise ParseError(1, 1, str(exc)) from None
        header = [h.strip() for h in header]
        if len(set(header)) != len(header):
            raise ParseError(1, 1, "duplicate column names in header")
        for name in (target_column, environment_column):
            if name is not None and name not in header:
                raise MissingColumn(name)
        for name in exclude:
            if name not in header:
                raise MissingColumn(name)
        t_idx = header.index(target_column) if target_column is not None else None
        e_idx = header.index(environment_column) if environment_column else None
        skip = {header.index(e) for e in exclude}
        if t_idx is not None:
            skip.add(t_idx)
        if e_idx is not None and not keep_environment_feature:
            skip.add(e_idx)
        f_idx = [j for j in range(len(header)) if j not in skip]

        rows, targets, envs, lines = [], [], [], []
        data_row = 0
        while True:
            try:
                cells = next(reader)
            except StopIteration:
                break
            except csv.Error as exc:
                raise ParseError(reader.line_num, 1, str(exc)) from None
            if not cells or all(not c.strip() for c in cells):
                continue
            data_row += 1
            line = reader.line_num
            if len(cells) != len(header):
                raise ParseError(line, min(len(cells), len(header)) + 1,
                                 f"expected {len(header)} cells, got {len(cells)}")
            vals = []
            for j in f_idx:
                try:
                    vals.append(_to_float(cells[j]))
                except ValueError:
                    raise NonNumericCell(data_row, header[j], line, cells[j]) from None
            if e_idx is not None:
                try:
                    envs.append(_to_float(cells[e_idx]))
                except ValueError:
                    raise NonNumericCell(data_row, header[e_idx], line, cells[e_idx]) from None
            if t_idx is None:
                pass
            elif task == "regression":
                try:
                    targets.append(_to_float(cells[t_idx]))
                except ValueError:
                    raise NonNumericCell(data_row, header[t_idx], line, cells[t_idx]) from None
            else:
                if not cells[t_idx].strip():
                    raise NonNumericCell(data_row, header[t_idx], line, cells[t_idx])
                targets.append(cells[t_idx])
            rows.append(vals)
            lines.append(line)

    mapping = {}
    if task == "binary":
        target, mapping = encode_binary(targets) if targets else (np.zeros(0), {})
    else:
        target = np.asarray(targets, dtype=float)
    features = np.asarray(rows, dtype=float).reshape(len(rows), len(f_idx))
    return RawTable(
        feature_names=tuple(header[j] for j in f_idx),
        features=features,
        target=target,
        target_name=target_column,
        task=task,
        environment=np.asarray(envs, dtype=float) if e_idx is not None else None,
        environment_name=environment_column,
        lines=np.asarray(lines, dtype=int),
        label_mapping=mapping,
    )


@dataclass(frozen=True)
class EnvironmentSplit:
    """Bins ``[e0, e1), [e1, e2), ..., [e_{k-1}, e_k]`` over one column."""

    environment_column: str
    bin_edges: tuple
    train_bin_index: int = 0

    def __post_init__(self):
        edges = tuple(float(e) for e in self.bin_edges)
        if len(edges) < 2:
            raise SRDOError("need at least two bin edges")
        if any(b <= a for a, b in zip(edges, edges[1:])):
            raise SRDOError(f"bin edges must be strictly increasing: {edges}")
        if not 0 <= self.train_bin_index < len(edges) - 1:
            raise SRDOError(
                f"train_bin_index {self.train_bin_index} outside {len(edges) - 1} bins"
            )
        object.__setattr__(self, "bin_edges", edges)

    @property
    def n_bins(self):
        return len(self.bin_edges) - 1

    def tag(self, k):
        lo, hi = self.bin_edges[k], self.bin_edges[k + 1]
        close = "]" if k == self.n_bins - 1 else ")"
        return f"[{lo:g}, {hi:g}{close}"

    def assign(self, values, lines=None):
        """Bin index of every value; raises :class:`RowOutOfRange`."""
        values = np.asarray(values, dtype=float)
        edges = np.asarray(self.bin_edges)
        out = np.searchsorted(edges, values, side="right") - 1
        out[values == edges[-1]] = self.n_bins - 1
        bad = np.flatnonzero((values < edges[0]) | (values > edges[-1]))
        if bad.size:
            i = int(bad[0])
            line = int(lines[i]) if lines is not None else i + 1
            raise RowOutOfRange(line, float(values[i]))
        return out


def split_environments(table, split, *, standardize_features=True, log_target=False):
    """Partition ``table`` into one :class:`LabeledDataset` per bin.

    Bins come back in edge order, empty ones included. When
    ``standardize_features`` is set, the mean/std of the training bin are
    applied to every bin, so test bins need not be centered. The
    standardization record is stored in each dataset's ``meta``.
    """
    if table.environment is None:
        raise SRDOError("table was loaded without an environment column")
    if table.environment_name != split.environment_column:
        raise MissingColumn(split.environment_column)
    y = table.target
    if log_target:
        if table.task != "regression":
            raise SRDOError("log_target applies to regression targets only")
        if np.any(y <= 0):
            raise SRDOError("log_target requires a strictly positive target")
        y = np.log(y)
    bins = split.assign(table.environment, table.lines)
    train_rows = bins == split.train_bin_index
    record = None
    X = table.features
    if standardize_features:
        if train_rows.sum() < 2:
            raise DimensionMismatch("training bin has fewer than two rows")
        _, record = standardize(X[train_rows], column_names=list(table.feature_names))
        X = record.apply(X)
    out = []
    for k in range(split.n_bins):
        rows = bins == k
        meta = {"bin": k, "train": k == split.train_bin_index, "lines": table.lines[rows].tolist()}
        if record is not None:
            meta["standardization"] = record.to_dict()
        if table.label_mapping:
            meta["label_mapping"] = dict(table.label_mapping)
        out.append(LabeledDataset(
            X[rows].reshape(int(rows.sum()), X.shape[1]), y[rows], split.tag(k),
            tuple(table.feature_names), meta,
        ))
    return out


def dataset_from_csv(path, target_column="y", task="regression", exclude=()):
    """Whole-file dataset without environment splitting (no standardization)."""
    t = load_csv(path, target_column, None, task, exclude)
    return LabeledDataset(t.features, t.target, str(path), t.feature_names,
                          {"label_mapping": t.label_mapping})


__all__ = [
    "EnvironmentSplit",
    "RawTable",
    "dataset_from_csv",
    "encode_binary",
    "load_csv",
    "split_environments",
]
