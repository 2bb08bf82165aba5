"""Tabular datasets for fitting: named variable columns plus one target."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DatasetFormatError, EmptyDatasetError


@dataclass
class Dataset:
    """Column store with one designated target column.

    Conventional units for the corona datasets: E in kV/cm, n as a count,
    d in cm, target level in dB.  Units are metadata only and never enter
    the numerics.
    """

    columns: dict[str, np.ndarray]
    target: str
    units: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.target not in self.columns:
            raise DatasetFormatError(f"target column {self.target!r} not present")
        lengths = {name: len(col) for name, col in self.columns.items()}
        if len(set(lengths.values())) > 1:
            raise DatasetFormatError(f"unequal column lengths: {lengths}")
        n = next(iter(lengths.values()))
        if n == 0:
            raise EmptyDatasetError("dataset has no rows")
        if n < 2:
            raise DatasetFormatError("dataset needs at least 2 rows")
        for name, col in self.columns.items():
            arr = np.asarray(col, dtype=float)
            if not np.all(np.isfinite(arr)):
                raise DatasetFormatError(f"column {name!r} contains non-finite values")
            self.columns[name] = arr

    @property
    def n_rows(self) -> int:
        return len(self.columns[self.target])

    @property
    def variables(self) -> list[str]:
        return [name for name in self.columns if name != self.target]

    @property
    def y(self) -> np.ndarray:
        return self.columns[self.target]

    def variable_env(self) -> dict[str, np.ndarray]:
        return {name: self.columns[name] for name in self.variables}


def load_dataset(path, target: str | None = None,
                 variables: list[str] | None = None) -> Dataset:
    """Ingest a CSV file (UTF-8, comma separator, '.' decimal, header row).

    Rows with missing or non-numeric cells are rejected; the error message
    cites 1-based file line numbers.  ``target`` defaults to the last
    header column.
    """
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise DatasetFormatError(f"{path}: file is empty") from None
        header = [h.strip() for h in header]
        if any(not h for h in header):
            raise DatasetFormatError(f"{path}: line 1: empty column name in header")
        if len(set(header)) != len(header):
            raise DatasetFormatError(f"{path}: line 1: duplicate column names")

        rows = []
        problems = []
        for lineno, raw in enumerate(reader, start=2):
            if not raw or all(not cell.strip() for cell in raw):
                continue  # ignore blank lines
            if len(raw) != len(header):
                problems.append(f"line {lineno}: expected {len(header)} cells, "
                                f"got {len(raw)}")
                continue
            parsed = []
            for name, cell in zip(header, raw):
                cell = cell.strip()
                if not cell:
                    problems.append(f"line {lineno}: missing value in column {name!r}")
                    break
                try:
                    value = float(cell)
                except ValueError:
                    problems.append(f"line {lineno}: non-numeric value {cell!r} "
                                    f"in column {name!r}")
                    break
                if not math.isfinite(value):
                    problems.append(f"line {lineno}: non-finite value {cell!r} "
                                    f"in column {name!r}")
                    break
                parsed.append(value)
            else:
                rows.append(parsed)
        if problems:
            raise DatasetFormatError(f"{path}: " + "; ".join(problems))
        if not rows:
            raise EmptyDatasetError(f"{path}: no data rows")

    data = np.asarray(rows, dtype=float)
    columns = {name: data[:, j] for j, name in enumerate(header)}

    if target is None:
        target = header[-1]
    if target not in columns:
        raise DatasetFormatError(f"{path}: target column {target!r} not in header")
    if variables is not None:
        missing = [v for v in variables if v not in columns]
        if missing:
            raise DatasetFormatError(f"{path}: missing variable columns {missing}")
        keep = dict.fromkeys(list(variables) + [target])
        columns = {name: columns[name] for name in keep}
    return Dataset(columns=columns, target=target)
