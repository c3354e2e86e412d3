import os

import numpy as np
import pytest

from cobrabench.data import Dataset

DATA_DIR = os.path.join(os.path.dirname(__file__), os.pardir, "data")
BOSTON_CSV = os.path.join(DATA_DIR, "boston.csv")
CALIFORNIA_CSV = os.path.join(DATA_DIR, "california.csv")


@pytest.fixture(scope="session")
def boston_path():
    return BOSTON_CSV


@pytest.fixture(scope="session")
def california_path():
    return CALIFORNIA_CSV


def synthetic_dataset(n=80, d=3, seed=0, noise=0.2):
    """Linear-plus-noise regression data for unit tests."""
    rng = np.random.default_rng(seed)
    X = rng.normal(size=(n, d))
    w = rng.normal(size=d)
    y = X @ w + noise * rng.normal(size=n) + 1.0
    names = tuple(f"x{j}" for j in range(d))
    return Dataset(X, y, names, "y")
