"""Risk assessment and the risk-blended patient distance.

The default risk model is a documented surrogate, not a validated clinical
model: a logistic score over the normalized personal features gives an
annual probability, scaled by a baseline hazard, and the horizon risk follows
the survival form 1 - (1 - p_annual)^tau. Any model mapping a normalized
feature vector to a horizon probability can be plugged in through
:class:`RiskParameters` or by swapping the functions below.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Mapping

import numpy as np

from .errors import SchemaMismatchError

#: Default assessment horizon in years.
DEFAULT_HORIZON_YEARS = 5

#: Default blend weight between feature distance and risk distance.
DEFAULT_BETA = 0.75


@dataclass(frozen=True)
class RiskParameters:
    """Parameters of the surrogate risk model.

    ``coefficients`` aligns with the personal-feature schema order. The
    baseline hazard caps the annual probability; the logistic score modulates
    it per patient.
    """

    baseline_hazard: float
    intercept: float
    coefficients: tuple[float, ...]
    horizon_years: int = DEFAULT_HORIZON_YEARS

    def __post_init__(self) -> None:
        if not 0.0 < self.baseline_hazard <= 0.2:
            raise ValueError(
                f"baseline hazard outside (0, 0.2]: {self.baseline_hazard!r}"
            )
        if not all(math.isfinite(c) for c in self.coefficients):
            raise ValueError("coefficients must be finite")
        if not math.isfinite(self.intercept):
            raise ValueError("intercept must be finite")
        if self.horizon_years < 1:
            raise ValueError(f"horizon must be >= 1 year: {self.horizon_years!r}")
        object.__setattr__(self, "coefficients", tuple(self.coefficients))

    def to_dict(self) -> dict[str, Any]:
        return {
            "baseline_hazard": self.baseline_hazard,
            "intercept": self.intercept,
            "coefficients": list(self.coefficients),
            "horizon_years": self.horizon_years,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "RiskParameters":
        return cls(
            baseline_hazard=float(data["baseline_hazard"]),
            intercept=float(data["intercept"]),
            coefficients=tuple(float(c) for c in data["coefficients"]),
            horizon_years=int(data.get("horizon_years", DEFAULT_HORIZON_YEARS)),
        )


#: Coefficients align with the default schema order:
#: age, breast_density, family_history, age_menarche, age_first_birth,
#: num_biopsies, hormonal_history. Chosen so the population risk histogram is
#: right-skewed toward low risk under the default generator.
DEFAULT_RISK = RiskParameters(
    baseline_hazard=0.035,
    intercept=-2.2,
    coefficients=(2.2, 0.9, 1.6, -0.6, 0.7, 1.1, 0.5),
    horizon_years=DEFAULT_HORIZON_YEARS,
)


def annual_probability(x: np.ndarray, params: RiskParameters) -> np.ndarray | float:
    """Annual event probability: baseline_hazard * logistic(intercept + w.x).

    Accepts a single vector (d,) or a matrix (m, d).
    """
    x = np.asarray(x, dtype=np.float64)
    coeffs = np.asarray(params.coefficients, dtype=np.float64)
    if x.shape[-1] != coeffs.shape[0]:
        raise SchemaMismatchError(
            f"feature dimension {x.shape[-1]} != coefficient dimension {len(coeffs)}"
        )
    score = params.intercept + x @ coeffs
    p = params.baseline_hazard / (1.0 + np.exp(-score))
    return float(p) if np.ndim(p) == 0 else p


def assess_risk(
    x: np.ndarray, tau: int, params: RiskParameters = DEFAULT_RISK
) -> float:
    """Probability of developing the condition within tau years.

    Monotone nondecreasing in tau and in each positively weighted feature;
    tau = 0 yields exactly 0.
    """
    if tau < 0:
        raise ValueError(f"horizon must be >= 0: {tau!r}")
    if tau == 0:
        return 0.0
    p = annual_probability(x, params)
    return float(1.0 - (1.0 - p) ** tau)


def risk_scores(
    X: np.ndarray, tau: int, params: RiskParameters = DEFAULT_RISK
) -> np.ndarray:
    """Vectorized horizon risk for a feature matrix (m, d) -> (m,)."""
    if tau < 0:
        raise ValueError(f"horizon must be >= 0: {tau!r}")
    X = np.asarray(X, dtype=np.float64)
    if tau == 0:
        return np.zeros(X.shape[0], dtype=np.float64)
    p = annual_probability(X, params)
    return 1.0 - (1.0 - np.asarray(p)) ** tau


def distance(
    x: np.ndarray,
    x_other: np.ndarray,
    beta: float,
    params: RiskParameters = DEFAULT_RISK,
    tau: int = DEFAULT_HORIZON_YEARS,
) -> float:
    """Blended patient distance: beta * ||x - x'|| + (1 - beta) * |G(x) - G(x')|.

    beta = 1 stratifies the feature space alone, beta = 0 the risk space
    alone. Symmetric, nonnegative, and zero at x = x' for any beta.
    """
    if not 0.0 <= beta <= 1.0:
        raise ValueError(f"beta outside [0,1]: {beta!r}")
    x = np.asarray(x, dtype=np.float64)
    x_other = np.asarray(x_other, dtype=np.float64)
    if x.shape != x_other.shape:
        raise SchemaMismatchError(f"shape mismatch: {x.shape} vs {x_other.shape}")
    euclidean = float(np.linalg.norm(x - x_other))
    risk_gap = abs(assess_risk(x, tau, params) - assess_risk(x_other, tau, params))
    return beta * euclidean + (1.0 - beta) * risk_gap


def distances_to_points(
    X: np.ndarray,
    points: np.ndarray,
    beta: float,
    params: RiskParameters = DEFAULT_RISK,
    tau: int = DEFAULT_HORIZON_YEARS,
    risk_of_X: np.ndarray | None = None,
) -> np.ndarray:
    """Distance matrix (m, k) from rows of X to rows of ``points``.

    ``risk_of_X`` lets callers reuse precomputed per-record risk scores.
    """
    X = np.asarray(X, dtype=np.float64)
    points = np.asarray(points, dtype=np.float64).reshape(-1, X.shape[1])
    if risk_of_X is None:
        risk_of_X = risk_scores(X, tau, params)
    risk_of_points = risk_scores(points, tau, params)
    diff = X[:, None, :] - points[None, :, :]
    euclidean = np.sqrt(np.einsum("mkd,mkd->mk", diff, diff))
    risk_gap = np.abs(risk_of_X[:, None] - risk_of_points[None, :])
    return beta * euclidean + (1.0 - beta) * risk_gap
