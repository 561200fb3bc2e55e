import numpy as np
import pytest

from screenwise.model import (
    DEFAULT_TESTS,
    Dataset,
    FeatureSchema,
    FeatureSpec,
    default_costs,
)
from screenwise.synth import default_generator_config, default_schema


@pytest.fixture(scope="session")
def schema():
    return default_schema()


@pytest.fixture(scope="session")
def generator_config():
    return default_generator_config()


@pytest.fixture
def costs():
    return default_costs(gamma=0.5)


@pytest.fixture
def tiny_risk():
    from screenwise.risk import RiskParameters

    return RiskParameters(baseline_hazard=0.03, intercept=-2.0, coefficients=(1.0,))


def make_dataset(score_rows, labels, tests=DEFAULT_TESTS, features=None):
    """Small hand-built dataset; score_rows holds integer codes (-1 missing)."""
    m = len(labels)
    schema = FeatureSchema(features=(FeatureSpec("x", 0.0, 1.0),))
    if features is None:
        features = np.linspace(0.0, 1.0, m).reshape(m, 1)
    return Dataset(
        schema=schema,
        tests=tuple(tests),
        ids=np.array([f"r{i}" for i in range(m)], dtype=object),
        features=np.asarray(features, dtype=np.float64).reshape(m, 1),
        scores=np.asarray(score_rows, dtype=np.int8).reshape(m, len(tests)),
        labels=np.asarray(labels, dtype=np.int8),
    )


@pytest.fixture
def tiny_dataset():
    # codes: 0..7 map to scores 1,2,3,4A,4B,4C,5,6
    scores = [
        [0, 0, 0],
        [1, 2, 1],
        [6, 7, 6],
        [7, 6, 7],
        [2, 1, 0],
        [3, 4, 6],
    ]
    labels = [0, 0, 1, 1, 0, 1]
    return make_dataset(scores, labels)
