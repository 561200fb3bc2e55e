"""Synthetic screening-record generation and CSV input/output.

The generator stands in for real screening data. Personal features come from
a small number of latent population clusters; labels are Bernoulli draws
from the risk model's horizon probability, rescaled so the expected positive
fraction hits the configured prevalence; test scores are drawn from
label-and-density-conditioned categorical tables. Negative records draw each
test independently from per-density tables. Positive records carry a latent
presentation: a small occult fraction scores like a slightly-suspicious
negative on every test, while clear cases score conspicuously with at most
one equivocal modality, which correlates scores across tests the way one
underlying lesion would. The per-test marginal conditional distribution is
still a fixed table (see ``implied_positive_table``). The default tables
make mammography lose separation as breast density rises while MRI stays
density-insensitive. All table values are artifact choices shipped in
editable JSON config files, not estimates from any real cohort.

Generation is fully deterministic per seed (single PCG64 stream, fixed draw
order), so identical configs produce byte-identical CSV files.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Mapping

import numpy as np

from .errors import ConfigError
from .model import (
    MISSING,
    SCORE_ORDER,
    Dataset,
    FeatureSchema,
    parse_birads,
    score_code,
)
from .risk import DEFAULT_RISK, RiskParameters, risk_scores

CSV_HEADER = [
    "patient_id",
    "age",
    "breast_density",
    "ethnicity",
    "gender",
    "family_history",
    "age_menarche",
    "age_first_birth",
    "num_biopsies",
    "hormonal_history",
    "mg_birads",
    "mri_birads",
    "us_birads",
    "label",
]

#: CSV column holding each test's score.
TEST_COLUMNS = {"MG": "mg_birads", "MRI": "mri_birads", "US": "us_birads"}

_INT_FEATURES = (
    "age",
    "breast_density",
    "family_history",
    "age_menarche",
    "age_first_birth",
    "num_biopsies",
    "hormonal_history",
)


def _load_packaged(name: str) -> Any:
    text = resources.files("screenwise").joinpath(f"configs/{name}").read_text()
    return json.loads(text)


def default_schema() -> FeatureSchema:
    return FeatureSchema.from_dict(_load_packaged("schema_default.json"))


@dataclass(frozen=True)
class ClusterSpec:
    """One latent population cluster and its sampling distributions."""

    name: str
    weight: float
    age: tuple[float, float]
    density_probs: tuple[float, ...]
    family_history_probs: tuple[float, ...]
    menarche: tuple[float, float]
    first_birth: tuple[float, float]
    biopsy_probs: tuple[float, ...]
    hormonal_rate: float


@dataclass(frozen=True)
class PositiveModel:
    """Presentation latent for positive records.

    ``occult_rate`` of positives score like a slightly-suspicious negative on
    every test; ``faint_rate`` score equivocal (mid-range) on every test; the
    remaining clear cases score conspicuously, with mammography degraded by
    breast density (per-density rows) while ultrasound and MRI stay
    density-insensitive. Scoring like-for-like on every test is what one
    underlying lesion produces; the per-test marginal is still a fixed table.
    """

    occult_rate: float
    occult: tuple[float, ...]
    faint_rate: float
    faint: tuple[float, ...]
    clear: Mapping[str, Any]


@dataclass(frozen=True)
class NegativeModel:
    """Benign patients: mostly plain low scorers, plus a benign-vivid
    stratum (per-density ``vivid_rates``, concentrated in low-density
    breasts) whose findings look suspicious on every modality."""

    vivid_rates: tuple[float, float, float, float]
    vivid: Mapping[str, Any]
    plain: Mapping[str, Any]


@dataclass(frozen=True)
class GeneratorConfig:
    """Everything the generator needs; ships as an editable JSON file."""

    population: int
    seed: int
    prevalence: float
    clusters: tuple[ClusterSpec, ...]
    positives: PositiveModel
    negatives: NegativeModel
    missing_rates: Mapping[str, float]
    ethnicity_probs: Mapping[str, float]
    label_risk: RiskParameters | None = None

    def __post_init__(self) -> None:
        if self.population < 1:
            raise ConfigError("population must be >= 1")
        if not 0.0 < self.prevalence < 1.0:
            raise ConfigError(f"prevalence outside (0,1): {self.prevalence!r}")
        if abs(sum(c.weight for c in self.clusters) - 1.0) > 1e-9:
            raise ConfigError("cluster weights must sum to 1")
        for cluster in self.clusters:
            for probs in (
                cluster.density_probs,
                cluster.family_history_probs,
                cluster.biopsy_probs,
            ):
                if abs(sum(probs) - 1.0) > 1e-9:
                    raise ConfigError(
                        f"cluster {cluster.name}: distribution does not sum to 1"
                    )
        rows: list[tuple[str, tuple[float, ...]]] = [
            ("positives/occult", self.positives.occult),
            ("positives/faint", self.positives.faint),
        ]
        for test, per_density in self.positives.clear.items():
            for d, row in enumerate(per_density):
                rows.append((f"positives/clear/{test}/d{d + 1}", tuple(row)))
        for test, row in self.negatives.vivid.items():
            rows.append((f"negatives/vivid/{test}", tuple(row)))
        for test, per_density in self.negatives.plain.items():
            for d, row in enumerate(per_density):
                rows.append((f"negatives/plain/{test}/d{d + 1}", tuple(row)))
        for name, row in rows:
            if len(row) != 8:
                raise ConfigError(f"{name}: need 8 score probabilities")
            if abs(sum(row) - 1.0) > 1e-9:
                raise ConfigError(f"{name}: row does not sum to 1")
        if not 0.0 <= self.positives.occult_rate + self.positives.faint_rate < 1.0:
            raise ConfigError("occult_rate + faint_rate must lie in [0,1)")
        if len(self.negatives.vivid_rates) != 4 or any(
            not 0.0 <= r < 1.0 for r in self.negatives.vivid_rates
        ):
            raise ConfigError("vivid_rates must be four values in [0,1)")
        for test, rate in self.missing_rates.items():
            if not 0.0 <= rate <= 1.0:
                raise ConfigError(f"missing rate for {test} outside [0,1]")

    def implied_table(self, test: str, density_cat: int, label: int) -> np.ndarray:
        """Marginal P(score | label, density, test) implied by the strata."""
        if label == 1:
            p = self.positives
            clear = np.asarray(p.clear[test][density_cat], dtype=np.float64)
            return (
                p.occult_rate * np.asarray(p.occult)
                + p.faint_rate * np.asarray(p.faint)
                + (1.0 - p.occult_rate - p.faint_rate) * clear
            )
        n = self.negatives
        vivid_rate = n.vivid_rates[density_cat]
        plain = np.asarray(n.plain[test][density_cat], dtype=np.float64)
        return vivid_rate * np.asarray(n.vivid[test]) + (1.0 - vivid_rate) * plain

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "GeneratorConfig":
        clusters = tuple(
            ClusterSpec(
                name=c["name"],
                weight=float(c["weight"]),
                age=(float(c["age"][0]), float(c["age"][1])),
                density_probs=tuple(float(p) for p in c["density_probs"]),
                family_history_probs=tuple(
                    float(p) for p in c["family_history_probs"]
                ),
                menarche=(float(c["menarche"][0]), float(c["menarche"][1])),
                first_birth=(float(c["first_birth"][0]), float(c["first_birth"][1])),
                biopsy_probs=tuple(float(p) for p in c["biopsy_probs"]),
                hormonal_rate=float(c["hormonal_rate"]),
            )
            for c in data["clusters"]
        )
        p = data["positives"]
        positives = PositiveModel(
            occult_rate=float(p["occult_rate"]),
            occult=tuple(float(v) for v in p["occult"]),
            faint_rate=float(p["faint_rate"]),
            faint=tuple(float(v) for v in p["faint"]),
            clear=p["clear"],
        )
        n = data["negatives"]
        negatives = NegativeModel(
            vivid_rates=tuple(float(v) for v in n["vivid_rates"]),
            vivid=n["vivid"],
            plain=n["plain"],
        )
        label_risk = data.get("label_risk")
        return cls(
            population=int(data["population"]),
            seed=int(data.get("seed", 0)),
            prevalence=float(data["prevalence"]),
            clusters=clusters,
            positives=positives,
            negatives=negatives,
            missing_rates=dict(data.get("missing_rates", {})),
            ethnicity_probs=dict(data["ethnicity_probs"]),
            label_risk=RiskParameters.from_dict(label_risk) if label_risk else None,
        )

    def with_overrides(
        self, population: int | None = None, seed: int | None = None
    ) -> "GeneratorConfig":
        return GeneratorConfig(
            population=population if population is not None else self.population,
            seed=seed if seed is not None else self.seed,
            prevalence=self.prevalence,
            clusters=self.clusters,
            positives=self.positives,
            negatives=self.negatives,
            missing_rates=self.missing_rates,
            ethnicity_probs=self.ethnicity_probs,
            label_risk=self.label_risk,
        )


def default_generator_config() -> GeneratorConfig:
    return GeneratorConfig.from_dict(_load_packaged("generator_default.json"))


def misspecified_generator_config() -> GeneratorConfig:
    """Labels decoupled from the engine's risk model, for robustness runs."""
    return GeneratorConfig.from_dict(_load_packaged("generator_misspecified.json"))


def load_generator_config(path: str) -> GeneratorConfig:
    with open(path, "r", encoding="utf-8") as handle:
        return GeneratorConfig.from_dict(json.load(handle))


def _categorical(u: np.ndarray, prob_rows: np.ndarray) -> np.ndarray:
    """Per-row inverse-CDF draw: u (m,), prob_rows (m, k) -> indices (m,)."""
    cumulative = np.cumsum(prob_rows, axis=1)
    return (u[:, None] >= cumulative).sum(axis=1).astype(np.intp)


def _rounded_normal(
    rng: np.random.Generator, mu: np.ndarray, sigma: np.ndarray, low: int, high: int
) -> np.ndarray:
    values = np.rint(rng.normal(mu, sigma)).astype(np.int64)
    return np.clip(values, low, high)


def generate(
    config: GeneratorConfig,
    seed: int | None = None,
    schema: FeatureSchema | None = None,
    risk: RiskParameters = DEFAULT_RISK,
    tests: tuple[str, ...] = ("MG", "US", "MRI"),
) -> Dataset:
    """Sample a complete synthetic dataset. Deterministic per seed."""
    if schema is None:
        schema = default_schema()
    m = config.population
    rng = np.random.default_rng(config.seed if seed is None else seed)

    weights = np.array([c.weight for c in config.clusters], dtype=np.float64)
    weights = weights / weights.sum()
    cluster_idx = _categorical(
        rng.random(m), np.broadcast_to(weights, (m, len(weights)))
    )

    def per_cluster(attr) -> np.ndarray:
        return np.array([attr(c) for c in config.clusters], dtype=np.float64)

    age = _rounded_normal(
        rng,
        per_cluster(lambda c: c.age[0])[cluster_idx],
        per_cluster(lambda c: c.age[1])[cluster_idx],
        25,
        80,
    )
    density_rows = np.array(
        [c.density_probs for c in config.clusters], dtype=np.float64
    )[cluster_idx]
    density = _categorical(rng.random(m), density_rows) + 1
    fh_rows = np.array(
        [c.family_history_probs for c in config.clusters], dtype=np.float64
    )[cluster_idx]
    family_history = _categorical(rng.random(m), fh_rows)
    menarche = _rounded_normal(
        rng,
        per_cluster(lambda c: c.menarche[0])[cluster_idx],
        per_cluster(lambda c: c.menarche[1])[cluster_idx],
        9,
        17,
    )
    first_birth = _rounded_normal(
        rng,
        per_cluster(lambda c: c.first_birth[0])[cluster_idx],
        per_cluster(lambda c: c.first_birth[1])[cluster_idx],
        16,
        45,
    )
    biopsy_rows = np.array(
        [c.biopsy_probs for c in config.clusters], dtype=np.float64
    )[cluster_idx]
    biopsies = _categorical(rng.random(m), biopsy_rows)
    hormonal_rate = per_cluster(lambda c: c.hormonal_rate)[cluster_idx]
    hormonal = (rng.random(m) < hormonal_rate).astype(np.int64)

    ethnicity_tokens = list(config.ethnicity_probs)
    ethnicity_p = np.array(
        [config.ethnicity_probs[t] for t in ethnicity_tokens], dtype=np.float64
    )
    ethnicity_p = ethnicity_p / ethnicity_p.sum()
    ethnicity_idx = _categorical(
        rng.random(m), np.broadcast_to(ethnicity_p, (m, len(ethnicity_p)))
    )
    ethnicity = np.array(ethnicity_tokens, dtype=object)[ethnicity_idx]

    raw = {
        "age": age,
        "breast_density": density.astype(np.int64),
        "family_history": family_history.astype(np.int64),
        "age_menarche": menarche,
        "age_first_birth": first_birth,
        "num_biopsies": biopsies.astype(np.int64),
        "hormonal_history": hormonal,
        "ethnicity": ethnicity,
        "gender": np.array(["F"] * m, dtype=object),
    }

    features = np.empty((m, schema.dimension), dtype=np.float64)
    for i, spec in enumerate(schema.features):
        column = raw[spec.name].astype(np.float64)
        features[:, i] = np.clip(
            (column - spec.minimum) / (spec.maximum - spec.minimum), 0.0, 1.0
        )

    label_params = config.label_risk if config.label_risk is not None else risk
    g = risk_scores(features, label_params.horizon_years, label_params)
    scale = config.prevalence / float(g.mean())
    p_label = np.clip(g * scale, 0.0, 1.0)
    labels = (rng.random(m) < p_label).astype(np.int8)

    # Per-record presentation strata: occult / faint / clear for positives,
    # benign-vivid / plain for negatives. These correlate scores across tests
    # the way one underlying finding would; negatives ignore the positive
    # draws and vice versa, keeping the stream layout fixed.
    pos_model = config.positives
    neg_model = config.negatives
    n_tests = len(tests)
    density_cat = density.astype(np.intp) - 1
    stratum_u = rng.random(m)
    occult = stratum_u < pos_model.occult_rate
    faint = (stratum_u >= pos_model.occult_rate) & (
        stratum_u < pos_model.occult_rate + pos_model.faint_rate
    )
    vivid_rate = np.asarray(neg_model.vivid_rates, dtype=np.float64)[density_cat]
    vivid = rng.random(m) < vivid_rate

    is_pos = labels == 1
    scores = np.full((m, n_tests), MISSING, dtype=np.int8)
    occult_row = np.asarray(pos_model.occult, dtype=np.float64)
    faint_row = np.asarray(pos_model.faint, dtype=np.float64)
    for j, test in enumerate(tests):
        clear_table = np.asarray(pos_model.clear[test], dtype=np.float64)
        plain_table = np.asarray(neg_model.plain[test], dtype=np.float64)
        vivid_row = np.asarray(neg_model.vivid[test], dtype=np.float64)
        rows = plain_table[density_cat]
        rows = np.where((~is_pos & vivid)[:, None], vivid_row[None, :], rows)
        rows = np.where(
            (is_pos & ~occult & ~faint)[:, None], clear_table[density_cat], rows
        )
        rows = np.where((is_pos & faint)[:, None], faint_row[None, :], rows)
        rows = np.where((is_pos & occult)[:, None], occult_row[None, :], rows)
        scores[:, j] = _categorical(rng.random(m), rows).astype(np.int8)
    for j, test in enumerate(tests):
        rate = float(config.missing_rates.get(test, 0.0))
        if rate > 0.0:
            hidden = rng.random(m) < rate
            scores[hidden, j] = MISSING

    ids = np.array([f"p{i + 1:06d}" for i in range(m)], dtype=object)
    return Dataset(
        schema=schema,
        tests=tests,
        ids=ids,
        features=features,
        scores=scores,
        labels=labels,
        raw=raw,
    )


# ---------------------------------------------------------------------------
# CSV
# ---------------------------------------------------------------------------


@dataclass
class RejectionReport:
    """Per-file ingestion outcome: accepted count, rejects, and notes."""

    accepted: int = 0
    rejected: list[tuple[int, str]] = field(default_factory=list)
    notes: list[str] = field(default_factory=list)


def _format_cell(value: Any) -> str:
    if isinstance(value, (np.integer, int)):
        return str(int(value))
    if isinstance(value, (np.floating, float)):
        f = float(value)
        if abs(f - round(f)) < 1e-9:
            return str(int(round(f)))
        return repr(f)
    return str(value)


def write_csv(ds: Dataset, path: str) -> None:
    """Emit the fixed-header CSV; inverse of :func:`load_csv`."""
    raw = ds.raw
    have_raw = all(name in raw for name in _INT_FEATURES)
    schema_index = {name: j for j, name in enumerate(ds.schema.names)}

    def feature_cell(name: str, i: int) -> str:
        if have_raw:
            return _format_cell(raw[name][i])
        spec = ds.schema.features[schema_index[name]]
        return _format_cell(spec.denormalize(ds.features[i, schema_index[name]]))

    with open(path, "w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(CSV_HEADER)
        test_cols = {t: j for j, t in enumerate(ds.tests)}
        for i in range(len(ds)):
            row = [
                str(ds.ids[i]),
                feature_cell("age", i),
                feature_cell("breast_density", i),
                str(raw["ethnicity"][i]) if "ethnicity" in raw else "U",
                str(raw["gender"][i]) if "gender" in raw else "F",
                feature_cell("family_history", i),
                feature_cell("age_menarche", i),
                feature_cell("age_first_birth", i),
                feature_cell("num_biopsies", i),
                feature_cell("hormonal_history", i),
            ]
            for test in ("MG", "MRI", "US"):
                code = int(ds.scores[i, test_cols[test]])
                row.append("" if code == MISSING else SCORE_ORDER[code].value)
            row.append(str(int(ds.labels[i])))
            writer.writerow(row)


def load_csv(
    path: str, schema: FeatureSchema | None = None
) -> tuple[Dataset, RejectionReport]:
    """Parse the fixed-header CSV into a dataset plus a rejection report.

    Malformed rows are rejected with line-numbered reasons; empty BI-RADS
    cells and the incomplete-study token 0 load as missing observations.
    """
    if schema is None:
        schema = default_schema()
    report = RejectionReport()
    tests = ("MG", "US", "MRI")

    ids: list[str] = []
    feature_rows: list[np.ndarray] = []
    score_rows: list[list[int]] = []
    labels: list[int] = []
    raw_rows: dict[str, list[Any]] = {name: [] for name in _INT_FEATURES}
    raw_rows["ethnicity"] = []
    raw_rows["gender"] = []

    with open(path, "r", encoding="utf-8", newline="") as handle:
        reader = csv.reader(handle)
        try:
            header = next(reader)
        except StopIteration:
            raise ConfigError(f"{path}: missing header row") from None
        if header != CSV_HEADER:
            raise ConfigError(f"{path}: unexpected header {header!r}")
        for line_no, row in enumerate(reader, start=2):
            if len(row) != len(CSV_HEADER):
                report.rejected.append((line_no, f"expected {len(CSV_HEADER)} cells"))
                continue
            cells = dict(zip(CSV_HEADER, row))
            try:
                label = int(cells["label"])
            except ValueError:
                report.rejected.append((line_no, "label is not an integer"))
                continue
            if label not in (0, 1):
                report.rejected.append((line_no, "label outside {0,1}"))
                continue
            try:
                codes = []
                for test in tests:
                    token = cells[TEST_COLUMNS[test]]
                    if token.strip() == "0":
                        report.notes.append(
                            f"line {line_no}: BI-RADS 0 ({test}) treated as missing"
                        )
                    codes.append(score_code(parse_birads(token)))
            except ValueError as exc:
                report.rejected.append((line_no, str(exc)))
                continue
            raw_values = {name: cells[name] for name in _INT_FEATURES}
            try:
                parsed = {name: float(value) for name, value in raw_values.items()}
            except ValueError:
                report.rejected.append((line_no, "non-numeric feature value"))
                continue
            try:
                vector = np.array(
                    [
                        spec.normalize(parsed[spec.name])
                        for spec in schema.features
                    ],
                    dtype=np.float64,
                )
            except KeyError as exc:
                report.rejected.append((line_no, f"missing feature {exc}"))
                continue
            ids.append(cells["patient_id"])
            feature_rows.append(vector)
            score_rows.append(codes)
            labels.append(label)
            for name in _INT_FEATURES:
                value = parsed[name]
                raw_rows[name].append(
                    int(value) if abs(value - round(value)) < 1e-9 else value
                )
            raw_rows["ethnicity"].append(cells["ethnicity"])
            raw_rows["gender"].append(cells["gender"])

    report.accepted = len(ids)
    ds = Dataset(
        schema=schema,
        tests=tests,
        ids=np.array(ids, dtype=object),
        features=(
            np.vstack(feature_rows)
            if feature_rows
            else np.empty((0, schema.dimension))
        ),
        scores=np.array(score_rows, dtype=np.int8).reshape(len(ids), len(tests)),
        labels=np.array(labels, dtype=np.int8),
        raw={name: np.array(vals, dtype=object) for name, vals in raw_rows.items()},
    )
    return ds, report
