"""Shared fixtures: the published Iris coefficient tables and acceptance reporting."""

import numpy as np
import pytest

from fi_fuse.data import load_iris, normalize
from fi_fuse.explain import ImportanceTensor

FEATURES = ["sepal length (cm)", "sepal width (cm)", "petal length (cm)", "petal width (cm)"]
MODELS = ["Neural Network", "Random Forest", "Support Vectors"]

# Normalised coefficients per technique: rows are features, columns are MODELS.
PUBLISHED = {
    "PI": [[0.07, 0.02, 0.00],
           [0.00, 0.00, 0.08],
           [1.00, 0.45, 0.91],
           [0.52, 1.00, 1.00]],
    "SHAP": [[0.20, 0.12, 0.00],
             [0.00, 0.00, 0.01],
             [1.00, 0.84, 1.00],
             [0.37, 1.00, 0.90]],
    "LIME": [[1.00, 0.11, 0.58],
             [0.56, 0.36, 0.72],
             [0.46, 1.00, 0.00],
             [0.00, 0.00, 1.00]],
}

ACCEPTANCE_LINES: list[str] = []


def published_tensor() -> ImportanceTensor:
    tensor = ImportanceTensor(FEATURES)
    for tech, table in PUBLISHED.items():
        cols = np.array(table).T
        for m, model in enumerate(MODELS):
            tensor.add(model, tech, 0, cols[m])
    return tensor


@pytest.fixture
def published() -> ImportanceTensor:
    return published_tensor()


@pytest.fixture
def published_sources() -> np.ndarray:
    return published_tensor().select()


@pytest.fixture
def nn_slice() -> np.ndarray:
    return published_tensor().select(["Neural Network"])


@pytest.fixture(scope="session")
def iris():
    return normalize(load_iris())


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
