"""Domain model: BI-RADS scores, score buckets, feature schema, records, costs.

Everything here is immutable after construction and safe to share across
threads. Heavy numerical work elsewhere operates on the columnar
:class:`Dataset` view rather than on individual records.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Iterable, Mapping, Sequence

import numpy as np

from .errors import NonNumericValueError, SchemaMismatchError, UnknownFeatureError


class BiRadsScore(Enum):
    """The eight reportable radiological assessment scores.

    Score 0 ("incomplete") is deliberately not a member: an ingested 0 is
    coerced to a missing observation by the loaders.
    """

    S1 = "1"
    S2 = "2"
    S3 = "3"
    S4A = "4A"
    S4B = "4B"
    S4C = "4C"
    S5 = "5"
    S6 = "6"

    @property
    def level(self) -> int:
        """Numeric assessment level; the 4A/4B/4C subcategories share level 4."""
        return _LEVELS[self.value]

    def __str__(self) -> str:
        return self.value


_LEVELS = {"1": 1, "2": 2, "3": 3, "4A": 4, "4B": 4, "4C": 4, "5": 5, "6": 6}

#: Fixed serialization order; a score's integer code is its index here.
SCORE_ORDER: tuple[BiRadsScore, ...] = tuple(BiRadsScore)

_CODE_OF_SCORE = {score: i for i, score in enumerate(SCORE_ORDER)}
_SCORE_OF_TOKEN = {score.value: score for score in SCORE_ORDER}

#: Integer code used in columnar arrays for a missing observation.
MISSING = -1


class Bucket(Enum):
    """Three-way grouping of scores used for tree edges.

    B1 holds levels below 3, B2 levels 3 and 4 (all subcategories), B3 levels
    above 4.
    """

    B1 = 0
    B2 = 1
    B3 = 2

    @property
    def index(self) -> int:
        return self.value


def birads_bucket(score: BiRadsScore) -> Bucket:
    """Map a score to its bucket. Total and deterministic."""
    level = score.level
    if level < 3:
        return Bucket.B1
    if level <= 4:
        return Bucket.B2
    return Bucket.B3


#: Bucket index by score code, aligned with SCORE_ORDER.
BUCKET_OF_CODE = np.array(
    [birads_bucket(score).index for score in SCORE_ORDER], dtype=np.int8
)


def parse_birads(token: str) -> BiRadsScore | None:
    """Parse a CSV cell into a score.

    Returns None for an empty cell or the incomplete-study token "0" (both
    mean "missing"); raises ValueError for any other token.
    """
    token = token.strip().upper()
    if token in ("", "0"):
        return None
    score = _SCORE_OF_TOKEN.get(token)
    if score is None:
        raise ValueError(f"not a BI-RADS score: {token!r}")
    return score


def score_code(score: BiRadsScore | None) -> int:
    return MISSING if score is None else _CODE_OF_SCORE[score]


def score_from_code(code: int) -> BiRadsScore | None:
    return None if code == MISSING else SCORE_ORDER[code]


# ---------------------------------------------------------------------------
# Feature schema and normalization
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class FeatureSpec:
    """One personal feature with its normalization range.

    Categorical features are encoded ordinally before normalization (breast
    density categories 1..4 map to 0, 1/3, 2/3, 1 via the [1, 4] range).
    """

    name: str
    minimum: float
    maximum: float

    def __post_init__(self) -> None:
        if not self.minimum < self.maximum:
            raise ValueError(f"feature {self.name}: need min < max")

    def normalize(self, raw: float) -> float:
        value = (raw - self.minimum) / (self.maximum - self.minimum)
        return min(1.0, max(0.0, value))

    def denormalize(self, value: float) -> float:
        return self.minimum + value * (self.maximum - self.minimum)


@dataclass(frozen=True)
class FeatureSchema:
    """Ordered personal-feature layout shared by every record in a dataset.

    ``passthrough`` columns are ingested and kept for round-tripping but do
    not enter the feature vector (and therefore neither the distance metric
    nor the risk model). Both lists are configurable via the schema file.
    """

    features: tuple[FeatureSpec, ...]
    passthrough: tuple[str, ...] = ()

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(spec.name for spec in self.features)

    @property
    def dimension(self) -> int:
        return len(self.features)

    def to_dict(self) -> dict[str, Any]:
        return {
            "features": [
                {"name": s.name, "min": s.minimum, "max": s.maximum}
                for s in self.features
            ],
            "passthrough": list(self.passthrough),
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "FeatureSchema":
        features = tuple(
            FeatureSpec(f["name"], float(f["min"]), float(f["max"]))
            for f in data["features"]
        )
        return cls(features=features, passthrough=tuple(data.get("passthrough", ())))

    def fingerprint(self) -> str:
        return sha256_of(self.to_dict())


def sha256_of(obj: Any) -> str:
    """Stable hash of a JSON-serializable object (canonical key order)."""
    canonical = json.dumps(obj, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def normalize_features(
    raw: Mapping[str, Any], schema: FeatureSchema
) -> np.ndarray:
    """Normalize named raw values into the schema-ordered unit vector.

    Each entry is (raw - min) / (max - min), clamped to [0, 1]. Idempotent on
    inputs already expressed within their ranges only in the sense that
    re-normalizing a normalized *vector* is meaningless; use the schema's
    denormalize for the inverse.
    """
    values = np.empty(schema.dimension, dtype=np.float64)
    for i, spec in enumerate(schema.features):
        if spec.name not in raw:
            raise UnknownFeatureError(f"record is missing feature {spec.name!r}")
        try:
            value = float(raw[spec.name])
        except (TypeError, ValueError) as exc:
            raise NonNumericValueError(
                f"feature {spec.name!r}: {raw[spec.name]!r} is not numeric"
            ) from exc
        if not np.isfinite(value):
            raise NonNumericValueError(f"feature {spec.name!r}: non-finite value")
        values[i] = spec.normalize(value)
    return values


# ---------------------------------------------------------------------------
# Records
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ScreeningObservation:
    """Per-test score slots; a slot is either a score or missing (None)."""

    tests: tuple[str, ...]
    scores: tuple[BiRadsScore | None, ...]

    def __post_init__(self) -> None:
        if len(self.tests) != len(self.scores):
            raise SchemaMismatchError("one slot per configured test required")

    def score_for(self, test: str) -> BiRadsScore | None:
        try:
            return self.scores[self.tests.index(test)]
        except ValueError as exc:
            raise UnknownFeatureError(f"no such test: {test!r}") from exc

    def observed(self, test: str) -> bool:
        return self.score_for(test) is not None

    @property
    def any_observed(self) -> bool:
        return any(score is not None for score in self.scores)


@dataclass(frozen=True)
class TrainingRecord:
    """One labeled screening record.

    ``features_only`` flags records with no observed test outcome; they are
    legal inputs but cannot contribute to tree statistics. ``raw`` keeps the
    original column values for lossless CSV round-trips and is excluded from
    equality.
    """

    record_id: str
    personal: tuple[float, ...]
    screening: ScreeningObservation
    label: int
    features_only: bool = False
    raw: Mapping[str, Any] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self) -> None:
        if self.label not in (0, 1):
            raise ValueError(f"label outside {{0,1}}: {self.label!r}")


@dataclass(frozen=True)
class CostConfig:
    """Normalized per-test monetary costs plus the misclassification weight.

    The per-test costs must sum to 1 (each is the test's share of the total
    price of taking every test). ``gamma`` blends the empirical
    false-positive rate with the mean monetary cost in the combined objective
    gamma * FPR + (1 - gamma) * mean_cost.
    """

    costs: Mapping[str, float]
    gamma: float

    def __post_init__(self) -> None:
        total = sum(self.costs.values())
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"normalized test costs must sum to 1, got {total!r}")
        if any(c < 0 for c in self.costs.values()):
            raise ValueError("test costs must be nonnegative")
        if not 0.0 <= self.gamma <= 1.0:
            raise ValueError(f"gamma outside [0,1]: {self.gamma!r}")
        object.__setattr__(self, "costs", dict(self.costs))

    @property
    def tests(self) -> tuple[str, ...]:
        return tuple(self.costs)

    def cost_of(self, test: str) -> float:
        return self.costs[test]

    def to_dict(self) -> dict[str, Any]:
        return {"tests": dict(self.costs), "gamma": self.gamma}

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "CostConfig":
        return cls(costs=dict(data["tests"]), gamma=float(data["gamma"]))


#: Test order is fixed; ties in tree induction fall back to this order.
DEFAULT_TESTS: tuple[str, ...] = ("MG", "US", "MRI")


def default_costs(gamma: float = 0.5) -> CostConfig:
    return CostConfig(costs={"MG": 0.1, "US": 0.2, "MRI": 0.7}, gamma=gamma)


# ---------------------------------------------------------------------------
# Columnar dataset
# ---------------------------------------------------------------------------


@dataclass
class Dataset:
    """Columnar view of a set of training records.

    ``scores`` holds integer score codes (MISSING for unobserved slots) with
    one column per test in ``tests`` order. ``raw`` retains original column
    values (including passthrough columns) for lossless CSV emission.
    """

    schema: FeatureSchema
    tests: tuple[str, ...]
    ids: np.ndarray
    features: np.ndarray
    scores: np.ndarray
    labels: np.ndarray
    raw: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self) -> None:
        m = len(self.ids)
        if self.features.shape != (m, self.schema.dimension):
            raise SchemaMismatchError("feature matrix shape disagrees with schema")
        if self.scores.shape != (m, len(self.tests)):
            raise SchemaMismatchError("score matrix shape disagrees with test list")
        if self.labels.shape != (m,):
            raise SchemaMismatchError("label vector length mismatch")
        self._buckets: np.ndarray | None = None

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def n_pos(self) -> int:
        return int(self.labels.sum())

    @property
    def buckets(self) -> np.ndarray:
        """Per-record, per-test bucket index (MISSING where unobserved)."""
        if self._buckets is None:
            buckets = np.full(self.scores.shape, MISSING, dtype=np.int8)
            observed = self.scores >= 0
            buckets[observed] = BUCKET_OF_CODE[self.scores[observed]]
            self._buckets = buckets
        return self._buckets

    def record(self, i: int) -> TrainingRecord:
        scores = tuple(score_from_code(int(c)) for c in self.scores[i])
        observation = ScreeningObservation(tests=self.tests, scores=scores)
        raw = {name: column[i] for name, column in self.raw.items()} or None
        return TrainingRecord(
            record_id=str(self.ids[i]),
            personal=tuple(float(v) for v in self.features[i]),
            screening=observation,
            label=int(self.labels[i]),
            features_only=not observation.any_observed,
            raw=raw,
        )

    def to_records(self) -> list[TrainingRecord]:
        return [self.record(i) for i in range(len(self))]

    @classmethod
    def from_records(
        cls,
        records: Sequence[TrainingRecord],
        schema: FeatureSchema,
        tests: Sequence[str] = DEFAULT_TESTS,
    ) -> "Dataset":
        tests = tuple(tests)
        m = len(records)
        ids = np.array([r.record_id for r in records], dtype=object)
        features = np.array([r.personal for r in records], dtype=np.float64).reshape(
            m, schema.dimension
        )
        scores = np.full((m, len(tests)), MISSING, dtype=np.int8)
        for i, record in enumerate(records):
            for j, test in enumerate(tests):
                scores[i, j] = score_code(record.screening.score_for(test))
        labels = np.array([r.label for r in records], dtype=np.int8)
        raw: dict[str, np.ndarray] = {}
        if records and records[0].raw:
            for name in records[0].raw:
                raw[name] = np.array([r.raw[name] for r in records], dtype=object)
        return cls(
            schema=schema,
            tests=tests,
            ids=ids,
            features=features,
            scores=scores,
            labels=labels,
            raw=raw,
        )

    def equals(self, other: "Dataset") -> bool:
        """Record-level equality: ids, normalized features, scores, labels."""
        return (
            self.tests == other.tests
            and len(self) == len(other)
            and bool(np.all(self.ids == other.ids))
            and bool(np.array_equal(self.features, other.features))
            and bool(np.array_equal(self.scores, other.scores))
            and bool(np.array_equal(self.labels, other.labels))
        )


def observation_codes(
    observation: ScreeningObservation, tests: Iterable[str]
) -> np.ndarray:
    """Score codes for the given observation in the given test order."""
    return np.array(
        [score_code(observation.score_for(t)) for t in tests], dtype=np.int8
    )
