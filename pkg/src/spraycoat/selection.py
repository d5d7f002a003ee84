"""Model selection: leave-one-out CV over the (C, p) grid, metrics, and the
ordinary-least-squares baseline.

The CV matrix is laid out with p on the rows and C on the columns, and the
best cell is the minimum-RMSD cell with deterministic tie-breaking
(smaller C first, then smaller p). Base Gram matrices are computed once
per fold and shared across every grid cell.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .kernels import KernelBank, bank_grams, gram_matrix
from .semkl import Hyperparams, Standardizer, train_on_grams
from .svr import SvrSolution, decision_function

DEFAULT_C_VALUES = tuple(float(10**k) for k in range(0, 6))
DEFAULT_P_VALUES = tuple(float(2**k) for k in range(0, 16))


class MetricError(ValueError):
    """Empty or mismatched metric inputs."""


def rmsd(y: np.ndarray, f: np.ndarray) -> float:
    """Root mean squared deviation sqrt(mean((y - f)^2))."""
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    if y.shape != f.shape:
        raise MetricError(f"length mismatch: {y.shape} vs {f.shape}")
    if y.size == 0:
        raise MetricError("rmsd of empty input")
    return float(np.sqrt(np.mean((y - f) ** 2)))


def eps_error(y: np.ndarray, f: np.ndarray, epsilon: float) -> float:
    """Aggregate epsilon-insensitive error sum(max(0, |y - f| - eps))."""
    y = np.asarray(y, dtype=float)
    f = np.asarray(f, dtype=float)
    if y.shape != f.shape:
        raise MetricError(f"length mismatch: {y.shape} vs {f.shape}")
    if y.size == 0:
        raise MetricError("eps_error of empty input")
    return float(np.sum(np.maximum(np.abs(y - f) - epsilon, 0.0)))


@dataclass(frozen=True)
class GridSpec:
    C_values: tuple[float, ...] = DEFAULT_C_VALUES
    p_values: tuple[float, ...] = DEFAULT_P_VALUES
    epsilon: float = 0.1

    def __post_init__(self):
        if not self.C_values or not self.p_values:
            raise ValueError("grid axes must be non-empty")
        if list(self.C_values) != sorted(self.C_values) or list(self.p_values) != sorted(
            self.p_values
        ):
            raise ValueError("grid axes must be sorted ascending")
        if any(c <= 0 for c in self.C_values):
            raise ValueError("C values must be positive")
        if any(p < 1 for p in self.p_values):
            raise ValueError("p values must be >= 1")


@dataclass(frozen=True)
class CvReport:
    grid: GridSpec
    rmsd_matrix: np.ndarray  # rows p, columns C; NaN for failed cells
    fold_predictions: np.ndarray  # shape (len(p), len(C), N)
    y: np.ndarray
    failures: tuple[tuple[int, int, str], ...] = field(default=())

    @property
    def best_cell(self) -> tuple[float, float, float]:
        """(p, C, rmsd) of the best valid cell; ties broken by smaller C then p."""
        best = None
        # C-major scan so equal-RMSD ties resolve to the smaller C, then smaller p
        for ci, c in enumerate(self.grid.C_values):
            for pi, p in enumerate(self.grid.p_values):
                val = self.rmsd_matrix[pi, ci]
                if np.isnan(val):
                    continue
                if best is None or val < best[2]:
                    best = (p, c, float(val))
        if best is None:
            raise MetricError("every grid cell failed")
        return best

    def to_csv(self, path: str | Path | None = None) -> str:
        """Matrix CSV: one row per p, one column per C."""
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["p"] + [f"C={c:g}" for c in self.grid.C_values])
        for pi, p in enumerate(self.grid.p_values):
            row = [f"{p:g}"] + [
                "" if np.isnan(v) else f"{v:.6g}" for v in self.rmsd_matrix[pi]
            ]
            writer.writerow(row)
        text = buf.getvalue()
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_dict(self) -> dict:
        p, c, r = self.best_cell
        return {
            "C_values": list(self.grid.C_values),
            "p_values": list(self.grid.p_values),
            "epsilon": self.grid.epsilon,
            "rmsd": [[None if np.isnan(v) else v for v in row] for row in self.rmsd_matrix],
            "best": {"p": p, "C": c, "rmsd": r},
            "failures": [list(f) for f in self.failures],
        }


def loo_cv(
    X: np.ndarray,
    y: np.ndarray,
    bank: KernelBank,
    grid: GridSpec = GridSpec(),
    max_iters: int = 100,
    gap_tol: float = 1e-4,
) -> CvReport:
    """Leave-one-out CV over every (C, p) cell.

    For each fold, standardization and base Grams are refitted on the N-1
    training rows (no leakage) and shared across all cells. A failing cell
    is recorded and marked NaN instead of aborting the grid.
    """
    X = np.atleast_2d(np.asarray(X, dtype=float))
    y = np.asarray(y, dtype=float)
    n = X.shape[0]
    if n < 3:
        raise MetricError(f"leave-one-out needs at least 3 samples, got {n}")
    n_p = len(grid.p_values)
    n_c = len(grid.C_values)
    preds = np.full((n_p, n_c, n), np.nan)
    failures: list[tuple[int, int, str]] = []
    failed_cells: set[tuple[int, int]] = set()

    for fold in range(n):
        mask = np.ones(n, dtype=bool)
        mask[fold] = False
        std = Standardizer.fit(X[mask])
        Xs = std.transform(X[mask])
        x_out = std.transform(X[fold : fold + 1])
        grams = bank_grams(bank, Xs)
        # kernel rows between the held-out point and the fold's training set
        out_rows = [gram_matrix(spec, x_out, Xs)[0] for spec in bank.specs]
        y_tr = y[mask]
        for pi, p in enumerate(grid.p_values):
            for ci, c in enumerate(grid.C_values):
                try:
                    hp = Hyperparams(
                        C=c, p=p, epsilon=grid.epsilon, max_iters=max_iters, gap_tol=gap_tol
                    )
                    weights, sol, _, _, _, _ = train_on_grams(grams, y_tr, bank, hp)
                    k_row = np.zeros(n - 1)
                    for g_m, row in zip(weights.gamma, out_rows):
                        if g_m != 0.0:
                            k_row += g_m * row
                    preds[pi, ci, fold] = decision_function(sol, k_row)
                except Exception as exc:  # noqa: BLE001 - cell failure must not kill the grid
                    if (pi, ci) not in failed_cells:
                        failed_cells.add((pi, ci))
                        failures.append((pi, ci, f"fold {fold}: {exc}"))

    matrix = np.full((n_p, n_c), np.nan)
    for pi in range(n_p):
        for ci in range(n_c):
            if (pi, ci) not in failed_cells:
                matrix[pi, ci] = rmsd(y, preds[pi, ci])
    return CvReport(
        grid=grid,
        rmsd_matrix=matrix,
        fold_predictions=preds,
        y=y,
        failures=tuple(failures),
    )


def linear_baseline(
    X_train: np.ndarray,
    y_train: np.ndarray,
    X_test: np.ndarray,
    y_test: np.ndarray,
    epsilon: float = 0.1,
) -> tuple[float, float]:
    """OLS on standardized features; returns (rmsd, eps_error) on the test set.

    Rank-deficient designs fall back to the minimum-norm solution (lstsq).
    """
    std = Standardizer.fit(X_train)
    A = np.column_stack([np.ones(len(y_train)), std.transform(X_train)])
    coef, _, rank, _ = np.linalg.lstsq(A, np.asarray(y_train, dtype=float), rcond=None)
    if rank < A.shape[1]:
        import warnings

        warnings.warn("rank-deficient design; using minimum-norm least squares", stacklevel=2)
    A_test = np.column_stack([np.ones(len(np.atleast_2d(X_test))), std.transform(X_test)])
    f = A_test @ coef
    return rmsd(y_test, f), eps_error(y_test, f, epsilon)
