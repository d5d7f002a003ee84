import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))  # makes `oracles` importable

from spraycoat.data import Dataset

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture(scope="session")
def benchmark_train() -> Dataset:
    return Dataset.from_csv(FIXTURES / "benchmark_train.csv")


@pytest.fixture(scope="session")
def benchmark_test() -> Dataset:
    return Dataset.from_csv(FIXTURES / "benchmark_test.csv")


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(1234)


def make_regression_problem(n=30, d=4, seed=0, noise=0.05):
    """Small smooth nonlinear regression set shared by solver tests."""
    g = np.random.default_rng(seed)
    X = g.normal(size=(n, d))
    y = np.sin(X[:, 0]) + 0.5 * X[:, 1] * X[:, 2] - 0.3 * X[:, 3] + noise * g.normal(size=n)
    return X, y
