import numpy as np
import pytest
import scipy.sparse as sp

from tltr import Dataset, LogisticLoss
from tltr.harness import SYNTHETIC_DEFAULTS
from tltr.data import LabelConvention, map_labels, synthetic_classification


def random_dataset(rng, n_samples, n_features, labels="pm1", density=0.6):
    z = rng.standard_normal((n_samples, n_features))
    z *= rng.random((n_samples, n_features)) < density
    y = rng.integers(0, 2, n_samples).astype(float)
    if labels == "pm1":
        y = 2.0 * y - 1.0
    return Dataset(sp.csr_matrix(z), y)


@pytest.fixture(scope="session")
def synthetic():
    d = synthetic_classification(**SYNTHETIC_DEFAULTS)
    return map_labels(d, LabelConvention.PLUS_MINUS_ONE)


@pytest.fixture
def synthetic_logistic(synthetic):
    return LogisticLoss(synthetic)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
