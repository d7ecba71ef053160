"""Datasets of network inputs and their CSV form."""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Dataset:
    inputs: np.ndarray
    labels: np.ndarray | None = None

    def __post_init__(self):
        x = np.atleast_2d(np.asarray(self.inputs, dtype=float))
        object.__setattr__(self, "inputs", x)
        if self.labels is not None:
            y = np.asarray(self.labels, dtype=int).reshape(-1)
            if len(y) != len(x):
                raise ValueError("labels and inputs have different lengths")
            object.__setattr__(self, "labels", y)

    def __len__(self):
        return len(self.inputs)

    @property
    def dim(self) -> int:
        return self.inputs.shape[1]

    def subset(self, idx) -> "Dataset":
        idx = np.asarray(idx, dtype=int)
        labels = None if self.labels is None else self.labels[idx]
        return Dataset(self.inputs[idx].reshape(len(idx), self.dim), labels)


def read_csv(path, input_dim: int | None = None) -> Dataset:
    """Read rows of ``input_dim`` numbers plus an optional integer label."""
    rows = []
    with open(path, newline="", encoding="utf-8") as f:
        for lineno, row in enumerate(csv.reader(f), start=1):
            if not row or all(not c.strip() for c in row):
                continue
            try:
                rows.append([float(c) for c in row])
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise ValueError(f"{path}: line {lineno}: non-numeric field") from None
    if not rows:
        return Dataset(np.empty((0, input_dim or 0)))
    widths = {len(r) for r in rows}
    if len(widths) != 1:
        raise ValueError(f"{path}: rows have differing column counts {sorted(widths)}")
    arr = np.array(rows)
    if input_dim is None or arr.shape[1] == input_dim:
        return Dataset(arr)
    if arr.shape[1] == input_dim + 1:
        return Dataset(arr[:, :input_dim], arr[:, input_dim].astype(int))
    raise ValueError(f"{path}: expected {input_dim} or {input_dim + 1} columns, got {arr.shape[1]}")


def write_csv(data: Dataset, path):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        for i, x in enumerate(data.inputs):
            row = [repr(float(v)) for v in x]
            if data.labels is not None:
                row.append(int(data.labels[i]))
            w.writerow(row)
