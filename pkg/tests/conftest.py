import numpy as np
import pytest

import defectlab
from defectlab.data import Dataset, Feature, FeatureSchema, parse_csv


@pytest.fixture
def fixtures_dir():
    return defectlab.bundled("")


def two_blob(n0=180, n1=20, seed=0, sep=5.0, std=0.5):
    rng = np.random.default_rng(seed)
    X = np.vstack([rng.normal(-sep, std, (n0, 2)), rng.normal(sep, std, (n1, 2))])
    y = np.array([0] * n0 + [1] * n1)
    schema = FeatureSchema((Feature("x1"), Feature("x2")), Feature("label", ("clean", "defect")))
    return Dataset(schema, X, np.zeros_like(X, dtype=bool), y)


@pytest.fixture
def blobs():
    return two_blob()


@pytest.fixture
def mixed_dataset():
    text = (
        "size,lang,reviewed,cls\n"
        "10,c,yes,clean\n"
        "12,java,no,clean\n"
        "?,py,yes,buggy\n"
        "30,c,,buggy\n"
        "8,java,no,clean\n"
    )
    return parse_csv(text)


# PASS/FAIL lines collected by test_acceptance.py, echoed after the run
ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
