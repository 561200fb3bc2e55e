"""Two-way Lloyd clustering under the risk-blended metric.

Initialization is deterministic: the starting centroids are the input points
of minimum and maximum assessed risk, so identical inputs always produce
identical splits. Interpolated centroids (coordinate means) are legal inputs
to the risk model, which accepts any vector in the unit cube.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .risk import DEFAULT_BETA, DEFAULT_HORIZON_YEARS, DEFAULT_RISK, RiskParameters
from .risk import distances_to_points, risk_scores

#: Hard cap on Lloyd iterations, guarding against oscillation.
MAX_ITERATIONS = 100

#: Default relative-improvement threshold for convergence.
DEFAULT_PRECISION = 1e-4


@dataclass(frozen=True)
class Centroid:
    """A cluster center (not required to be a data point) with its member count."""

    position: np.ndarray
    member_count: int


@dataclass(frozen=True)
class SplitResult:
    """Outcome of one two-way split.

    ``assignments`` holds 0/1 cluster indices per input point; ``objective``
    is the mean point-to-assigned-centroid distance; ``history`` records the
    objective after each Lloyd iteration (nonincreasing).
    """

    centroids: tuple[Centroid, Centroid]
    assignments: np.ndarray
    objective: float
    iterations: int
    history: tuple[float, ...]

    @property
    def degenerate(self) -> bool:
        """True when all inputs were identical and no real split exists."""
        return bool(
            np.array_equal(self.centroids[0].position, self.centroids[1].position)
        )


def assign(
    x: np.ndarray,
    centroids: list[Centroid] | tuple[Centroid, ...],
    beta: float = DEFAULT_BETA,
    params: RiskParameters = DEFAULT_RISK,
    tau: int = DEFAULT_HORIZON_YEARS,
) -> int:
    """Index of the nearest centroid under the blended metric.

    Ties break toward the lowest index.
    """
    if not centroids:
        raise ValueError("need at least one centroid")
    positions = np.stack([np.asarray(c.position, dtype=np.float64) for c in centroids])
    d = distances_to_points(
        np.asarray(x, dtype=np.float64).reshape(1, -1), positions, beta, params, tau
    )
    return int(np.argmin(d[0]))


def objective(
    X: np.ndarray,
    assignments: np.ndarray,
    centroids: tuple[Centroid, Centroid] | list[Centroid],
    beta: float = DEFAULT_BETA,
    params: RiskParameters = DEFAULT_RISK,
    tau: int = DEFAULT_HORIZON_YEARS,
) -> float:
    """Mean distance from each point to its assigned centroid."""
    X = np.asarray(X, dtype=np.float64)
    assignments = np.asarray(assignments)
    if len(X) != len(assignments):
        raise ValueError("assignments length must match point count")
    positions = np.stack([np.asarray(c.position, dtype=np.float64) for c in centroids])
    d = distances_to_points(X, positions, beta, params, tau)
    return float(d[np.arange(len(X)), assignments].mean())


def split(
    X: np.ndarray,
    beta: float = DEFAULT_BETA,
    params: RiskParameters = DEFAULT_RISK,
    tau: int = DEFAULT_HORIZON_YEARS,
    precision: float = DEFAULT_PRECISION,
    max_iterations: int = MAX_ITERATIONS,
) -> SplitResult:
    """Split the points into two clusters under the blended metric.

    Seeds the centroids at the minimum- and maximum-risk points, then runs
    Lloyd iterations (assign to nearest centroid, recompute coordinate means)
    until the relative objective improvement drops to ``precision``, the
    objective reaches zero, the iteration cap is hit, or an iteration fails
    to improve the objective (the pre-update state is kept in that case, so
    the recorded history is always nonincreasing).

    All-identical inputs yield the degenerate result: both centroids equal
    the common point, everything assigned to cluster 0.
    """
    X = np.asarray(X, dtype=np.float64)
    n = len(X)
    if n < 2:
        raise ValueError("need at least 2 points to split")
    if precision <= 0:
        raise ValueError(f"precision must be positive: {precision!r}")

    if np.all(X == X[0]):
        centroid = Centroid(position=X[0].copy(), member_count=n)
        return SplitResult(
            centroids=(centroid, Centroid(position=X[0].copy(), member_count=0)),
            assignments=np.zeros(n, dtype=np.int8),
            objective=0.0,
            iterations=0,
            history=(),
        )

    point_risk = risk_scores(X, tau, params)
    centers = np.stack([X[int(np.argmin(point_risk))], X[int(np.argmax(point_risk))]])

    history: list[float] = []
    best_assignments = np.zeros(n, dtype=np.int8)
    previous = None
    iterations = 0
    for _ in range(max_iterations):
        d = distances_to_points(X, centers, beta, params, tau, risk_of_X=point_risk)
        assignments = np.argmin(d, axis=1).astype(np.int8)
        for j in (0, 1):
            if not np.any(assignments == j):
                # Reseed an emptied cluster at the point farthest from the
                # other centroid; with >= 2 distinct points this never loops.
                farthest = int(np.argmax(d[:, 1 - j]))
                assignments[farthest] = j
        new_centers = np.stack(
            [X[assignments == j].mean(axis=0) for j in (0, 1)]
        )
        d_new = distances_to_points(
            X, new_centers, beta, params, tau, risk_of_X=point_risk
        )
        value = float(d_new[np.arange(n), assignments].mean())
        if previous is not None and value > previous:
            break
        centers = new_centers
        best_assignments = assignments
        history.append(value)
        iterations += 1
        if value == 0.0:
            break
        if previous is not None and (previous - value) / value <= precision:
            previous = value
            break
        previous = value

    counts = (
        int(np.sum(best_assignments == 0)),
        int(np.sum(best_assignments == 1)),
    )
    return SplitResult(
        centroids=(
            Centroid(position=centers[0].copy(), member_count=counts[0]),
            Centroid(position=centers[1].copy(), member_count=counts[1]),
        ),
        assignments=best_assignments,
        objective=history[-1] if history else 0.0,
        iterations=iterations,
        history=tuple(history),
    )
