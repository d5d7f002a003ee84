"""Labeled feature datasets and their CSV form.

One row per coating epoch: the 27 extracted features followed by one label
column per available quality target (prefixed ``label_``).
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .features import FEATURE_NAMES, GROUP_FEATURE_INDICES, N_FEATURES
from .semkl import QualityTarget


@dataclass
class Dataset:
    X: np.ndarray  # (N, 27) full feature matrix in schema order
    labels: dict[QualityTarget, np.ndarray] = field(default_factory=dict)
    epoch_ids: list[str] = field(default_factory=list)

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        if self.X.shape[1] != N_FEATURES:
            raise ValueError(f"expected {N_FEATURES} feature columns, got {self.X.shape[1]}")
        for t, y in self.labels.items():
            y = np.asarray(y, dtype=float)
            if y.shape != (self.X.shape[0],):
                raise ValueError(f"label {t.value} length {y.shape} != {self.X.shape[0]} rows")
            self.labels[t] = y
        if not self.epoch_ids:
            self.epoch_ids = [f"epoch-{k}" for k in range(self.X.shape[0])]

    def __len__(self) -> int:
        return int(self.X.shape[0])

    def features_for(self, target: QualityTarget) -> np.ndarray:
        """Feature subset applicable to the target's group."""
        idx = np.array(GROUP_FEATURE_INDICES[target.group], dtype=int)
        return self.X[:, idx]

    def xy(self, target: QualityTarget) -> tuple[np.ndarray, np.ndarray]:
        if target not in self.labels:
            raise KeyError(f"dataset has no labels for {target.value}")
        return self.features_for(target), self.labels[target]

    def subset(self, rows: np.ndarray | list[int]) -> "Dataset":
        rows = np.asarray(rows, dtype=int)
        return Dataset(
            X=self.X[rows],
            labels={t: y[rows] for t, y in self.labels.items()},
            epoch_ids=[self.epoch_ids[i] for i in rows],
        )

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            header = ["epoch_id", *FEATURE_NAMES]
            targets = sorted(self.labels, key=lambda t: t.value)
            header += [f"label_{t.value}" for t in targets]
            writer.writerow(header)
            for i in range(len(self)):
                row = [self.epoch_ids[i]]
                row += [repr(float(v)) for v in self.X[i]]
                row += [repr(float(self.labels[t][i])) for t in targets]
                writer.writerow(row)

    @staticmethod
    def from_csv(path: str | Path) -> "Dataset":
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            rows = list(reader)
        if header[: 1 + N_FEATURES] != ["epoch_id", *FEATURE_NAMES]:
            raise ValueError(f"{path} does not match the feature dataset schema")
        label_cols = {}
        for k, col in enumerate(header[1 + N_FEATURES :], start=1 + N_FEATURES):
            if not col.startswith("label_"):
                raise ValueError(f"unexpected column {col!r}")
            label_cols[QualityTarget(col[len("label_") :])] = k
        X = np.array([[float(v) for v in row[1 : 1 + N_FEATURES]] for row in rows])
        labels = {
            t: np.array([float(row[k]) for row in rows]) for t, k in label_cols.items()
        }
        return Dataset(X=X, labels=labels, epoch_ids=[row[0] for row in rows])
