import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from screenwise.errors import SchemaMismatchError
from screenwise.risk import (
    DEFAULT_RISK,
    RiskParameters,
    assess_risk,
    distance,
    risk_scores,
)

D = len(DEFAULT_RISK.coefficients)

# Golden value for the default parameters at the all-zero vector, horizon 5.
# Independently recomputed: p = 0.035 / (1 + e^2.2); G = 1 - (1 - p)^5.
GOLDEN_ZERO_VECTOR_5Y = 1.0 - (1.0 - 0.035 / (1.0 + math.exp(2.2))) ** 5


def test_zero_horizon_is_zero_risk():
    assert assess_risk(np.zeros(D), 0) == 0.0


def test_monotone_in_horizon():
    x = np.full(D, 0.3)
    values = [assess_risk(x, tau) for tau in range(0, 11)]
    assert all(b >= a for a, b in zip(values, values[1:]))


def test_golden_zero_vector_value():
    value = assess_risk(np.zeros(D), 5)
    assert value == pytest.approx(GOLDEN_ZERO_VECTOR_5Y, abs=1e-12)
    # Frozen anchor, recomputed once by hand:
    # e^2.2 = 9.0250135, p = 0.035/10.0250135 = 0.00349127,
    # G = 1 - (1 - p)^5 = 0.01733487.
    assert value == pytest.approx(0.01733487, abs=5e-7)


def test_strictly_increasing_in_family_history():
    base = np.zeros(D)
    bumped = base.copy()
    bumped[2] = 1.0  # family_history coefficient is positive by default
    assert assess_risk(bumped, 5) > assess_risk(base, 5)


def test_output_in_unit_interval():
    rng = np.random.default_rng(7)
    X = rng.random((200, D))
    g = risk_scores(X, 5)
    assert np.all((g >= 0) & (g <= 1))


def test_batch_matches_scalar():
    rng = np.random.default_rng(8)
    X = rng.random((50, D))
    g = risk_scores(X, 5)
    for i in range(0, 50, 7):
        assert g[i] == pytest.approx(assess_risk(X[i], 5), abs=1e-15)


def test_parameter_validation():
    with pytest.raises(ValueError):
        RiskParameters(baseline_hazard=0.5, intercept=0.0, coefficients=(1.0,))
    with pytest.raises(ValueError):
        RiskParameters(baseline_hazard=0.05, intercept=0.0, coefficients=(1.0,), horizon_years=0)


class TestDistance:
    def test_identical_points_have_zero_distance(self):
        x = np.full(D, 0.4)
        for beta in (0.0, 0.5, 1.0):
            assert distance(x, x, beta) == 0.0

    def test_beta_zero_reduces_to_risk_gap(self):
        x = np.zeros(D)
        y = np.full(D, 0.6)
        gap = abs(assess_risk(x, 5) - assess_risk(y, 5))
        assert distance(x, y, 0.0) == pytest.approx(gap, abs=1e-15)

    def test_blend_arithmetic(self):
        # beta 0.75 with feature distance 0.2 and risk gap 0.04 gives 0.16.
        assert 0.75 * 0.2 + 0.25 * 0.04 == pytest.approx(0.16)

    def test_beta_one_is_euclidean(self):
        rng = np.random.default_rng(3)
        x, y = rng.random(D), rng.random(D)
        assert distance(x, y, 1.0) == pytest.approx(
            float(np.linalg.norm(x - y)), abs=1e-15
        )

    def test_schema_mismatch(self):
        with pytest.raises(SchemaMismatchError):
            distance(np.zeros(D), np.zeros(D + 1), 0.5)

    @given(
        st.integers(min_value=0, max_value=2**32 - 1),
        st.floats(min_value=0.0, max_value=1.0),
    )
    def test_symmetric_premetric(self, seed, beta):
        rng = np.random.default_rng(seed)
        x, y = rng.random(D), rng.random(D)
        d_xy = distance(x, y, beta)
        d_yx = distance(y, x, beta)
        assert d_xy == pytest.approx(d_yx, abs=1e-15)
        assert d_xy >= 0.0
        assert distance(x, x, beta) == 0.0

    def test_triangle_inequality_sampled(self):
        rng = np.random.default_rng(11)
        for _ in range(100):
            x, y, z = rng.random((3, D))
            for beta in (0.0, 0.5, 0.75, 1.0):
                assert distance(x, z, beta) <= (
                    distance(x, y, beta) + distance(y, z, beta) + 1e-12
                )
