"""Evaluation harness: held-out metrics, Monte Carlo confidence checks,
parameter sweeps, and the two baselines (a single unconstrained tree and a
rule-table guideline stand-in).

Every aggregate here is reproducible from per-record outcomes, and every
Monte Carlo routine is deterministic given its seed list. None of the
numbers is a reproduction of any external cohort; reports label their
provenance as synthetic.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field
from importlib import resources
from typing import Any, Mapping, Sequence

import numpy as np

from .errors import ConfigError, PolicyInfeasibleError
from .model import Bucket, CostConfig, Dataset, sha256_of
from .policy import (
    PartitionedPolicy,
    PolicyConfig,
    build_policy,
    personalization_bound,
)
from .risk import RiskParameters, risk_scores
from .synth import GeneratorConfig, generate
from .tree import (
    Node,
    TreeStats,
    evaluate_tree,
    grow_information_tree,
    prune,
    route_records,
)


# ---------------------------------------------------------------------------
# Policy evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PartitionOutcome:
    partition_id: int
    n: int
    n_pos: int
    fnr: float
    fpr: float
    mean_cost: float
    combined: float

    def to_dict(self) -> dict[str, Any]:
        return {
            "partition_id": self.partition_id,
            "n": self.n,
            "n_pos": self.n_pos,
            "fnr": self.fnr,
            "fpr": self.fpr,
            "mean_cost": self.mean_cost,
            "combined": self.combined,
        }


@dataclass(frozen=True)
class PolicyEvaluation:
    """Per-partition and overall rates of one policy over one dataset."""

    per_partition: tuple[PartitionOutcome, ...]
    overall: PartitionOutcome
    assignments: np.ndarray = field(compare=False, repr=False)
    predicted: np.ndarray = field(compare=False, repr=False)
    costs_per_record: np.ndarray = field(compare=False, repr=False)

    def to_dict(self) -> dict[str, Any]:
        return {
            "per_partition": [p.to_dict() for p in self.per_partition],
            "overall": self.overall.to_dict(),
            "partition_count": len(self.per_partition),
        }


def _rates(y: np.ndarray, predicted: np.ndarray, costs: np.ndarray, gamma: float,
           partition_id: int) -> PartitionOutcome:
    n_pos = int(np.sum(y == 1))
    n_neg = int(np.sum(y == 0))
    fn = int(np.sum((y == 1) & (predicted == 0)))
    fp = int(np.sum((y == 0) & (predicted == 1)))
    fnr = fn / n_pos if n_pos else 0.0
    fpr = fp / n_neg if n_neg else 0.0
    mean_cost = float(costs.mean()) if len(costs) else 0.0
    return PartitionOutcome(
        partition_id=partition_id,
        n=len(y),
        n_pos=n_pos,
        fnr=fnr,
        fpr=fpr,
        mean_cost=mean_cost,
        combined=gamma * fpr + (1.0 - gamma) * mean_cost,
    )


def assign_all(policy: PartitionedPolicy, ds: Dataset) -> np.ndarray:
    """Vectorized partition assignment for every record."""
    from .risk import distances_to_points

    centroids = np.stack([p.centroid for p in policy.partitions])
    d = distances_to_points(
        ds.features,
        centroids,
        policy.config.beta,
        policy.risk,
        policy.config.tau,
    )
    return np.argmin(d, axis=1).astype(np.intp)


def evaluate_policy(policy: PartitionedPolicy, ds: Dataset) -> PolicyEvaluation:
    """Route every record through its matched partition's tree."""
    assignments = assign_all(policy, ds)
    m = len(ds)
    predicted = np.full(m, -1, dtype=np.int8)
    record_costs = np.zeros(m, dtype=np.float64)
    per_partition = []
    for k, partition in enumerate(policy.partitions):
        idx = np.flatnonzero(assignments == k)
        if len(idx):
            labels, path_costs, evaluated = route_records(
                partition.tree, ds, idx, policy.costs
            )
            kept = idx[evaluated]
            predicted[kept] = labels[evaluated]
            record_costs[kept] = path_costs[evaluated]
            y = ds.labels[kept]
            outcome = _rates(
                y,
                predicted[kept],
                record_costs[kept],
                policy.costs.gamma,
                partition.partition_id,
            )
        else:
            outcome = _rates(
                np.empty(0, dtype=np.int8),
                np.empty(0, dtype=np.int8),
                np.empty(0),
                policy.costs.gamma,
                partition.partition_id,
            )
        per_partition.append(outcome)
    evaluated_mask = predicted >= 0
    overall = _rates(
        ds.labels[evaluated_mask],
        predicted[evaluated_mask],
        record_costs[evaluated_mask],
        policy.costs.gamma,
        -1,
    )
    return PolicyEvaluation(
        per_partition=tuple(per_partition),
        overall=overall,
        assignments=assignments,
        predicted=predicted,
        costs_per_record=record_costs,
    )


# ---------------------------------------------------------------------------
# Monte Carlo confidence verification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ConfidenceTrialResult:
    runs: int
    violations: int
    infeasible: int
    fraction: float
    per_run: tuple[dict[str, Any], ...]

    def to_dict(self) -> dict[str, Any]:
        return {
            "runs": self.runs,
            "violations": self.violations,
            "infeasible": self.infeasible,
            "fraction": self.fraction,
        }


def confidence_trial(
    generator_config: GeneratorConfig,
    policy_config: PolicyConfig,
    runs: int,
    base_seed: int = 0,
    test_population: int | None = None,
    costs: CostConfig | None = None,
    risk: RiskParameters | None = None,
) -> ConfidenceTrialResult:
    """Fraction of runs in which any partition's held-out FNR exceeds eta.

    Each run draws fresh train and test sets (seeds base+2r, base+2r+1),
    builds a policy, and evaluates per-partition test FNR. Runs whose build
    is infeasible are counted separately, not as violations; the returned
    fraction divides by the total run count.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    violations = 0
    infeasible = 0
    details = []
    for r in range(runs):
        train = generate(generator_config, seed=base_seed + 2 * r)
        test_cfg = generator_config.with_overrides(population=test_population)
        test = generate(test_cfg, seed=base_seed + 2 * r + 1)
        kwargs = {} if risk is None else {"risk": risk}
        try:
            policy = build_policy(train, policy_config, costs=costs, **kwargs)
        except PolicyInfeasibleError:
            infeasible += 1
            details.append({"run": r, "infeasible": True})
            continue
        evaluation = evaluate_policy(policy, test)
        worst = max((p.fnr for p in evaluation.per_partition), default=0.0)
        violated = worst > policy_config.eta
        violations += int(violated)
        details.append(
            {
                "run": r,
                "infeasible": False,
                "partitions": len(policy.partitions),
                "worst_partition_fnr": worst,
                "violated": violated,
            }
        )
    return ConfidenceTrialResult(
        runs=runs,
        violations=violations,
        infeasible=infeasible,
        fraction=violations / runs,
        per_run=tuple(details),
    )


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------


def sweep_beta(
    betas: Sequence[float],
    generator_config: GeneratorConfig,
    policy_config: PolicyConfig,
    seeds: Sequence[int],
    costs: CostConfig | None = None,
) -> dict[str, Any]:
    """Held-out FNR/FPR per blend weight, and the selected best weight.

    Selection: lowest mean FPR among betas whose mean FNR meets eta; ties
    prefer the smaller beta. Falls back to lowest (FNR, FPR) when no beta
    meets the cap.
    """
    rows = []
    for beta in betas:
        config = PolicyConfig(**{**policy_config.to_dict(), "beta": beta})
        fnrs, fprs = [], []
        for seed in seeds:
            train = generate(generator_config, seed=2 * seed)
            test = generate(generator_config, seed=2 * seed + 1)
            try:
                policy = build_policy(train, config, costs=costs)
            except PolicyInfeasibleError:
                continue
            evaluation = evaluate_policy(policy, test)
            fnrs.append(evaluation.overall.fnr)
            fprs.append(evaluation.overall.fpr)
        rows.append(
            {
                "beta": beta,
                "runs": len(fnrs),
                "mean_fnr": float(np.mean(fnrs)) if fnrs else math.nan,
                "mean_fpr": float(np.mean(fprs)) if fprs else math.nan,
            }
        )
    eligible = [
        row for row in rows if row["runs"] and row["mean_fnr"] <= policy_config.eta
    ]
    pool = eligible if eligible else [row for row in rows if row["runs"]]
    best = min(pool, key=lambda r: (r["mean_fpr"], r["mean_fnr"], r["beta"]))
    return {"rows": rows, "best_beta": best["beta"]}


def sweep_m(
    populations: Sequence[int],
    etas: Sequence[float],
    generator_config: GeneratorConfig,
    policy_config: PolicyConfig,
    seeds: Sequence[int],
    costs: CostConfig | None = None,
) -> dict[str, Any]:
    """Mean partition count per training-set size, one curve per eta.

    Infeasible builds contribute zero partitions and are tallied separately.
    """
    rows = []
    for eta in etas:
        config = PolicyConfig(**{**policy_config.to_dict(), "eta": eta})
        for population in populations:
            gen = generator_config.with_overrides(population=population)
            counts = []
            feasible = 0
            bound_ok = True
            for seed in seeds:
                train = generate(gen, seed=seed)
                try:
                    policy = build_policy(train, config, costs=costs)
                except PolicyInfeasibleError:
                    counts.append(0)
                    continue
                feasible += 1
                counts.append(policy.partition_count)
                if config.strict:
                    cap = personalization_bound(
                        policy.m, policy.sample_size_required
                    )
                    bound_ok = bound_ok and policy.partition_count <= cap
            counts_arr = np.array(counts, dtype=np.float64)
            rows.append(
                {
                    "eta": eta,
                    "m": population,
                    "mean_partitions": float(counts_arr.mean()),
                    "std_error": float(
                        counts_arr.std(ddof=1) / math.sqrt(len(counts_arr))
                    )
                    if len(counts_arr) > 1
                    else 0.0,
                    "feasible_runs": feasible,
                    "runs": len(seeds),
                    "within_personalization_bound": bound_ok,
                }
            )
    return {"rows": rows}


# ---------------------------------------------------------------------------
# Cost versus risk
# ---------------------------------------------------------------------------


def risk_quantile_edges(g: np.ndarray, buckets: int = 5) -> np.ndarray:
    return np.quantile(g, np.linspace(0, 1, buckets + 1)[1:-1])


def cost_vs_risk(
    policy: PartitionedPolicy,
    ds: Dataset,
    buckets: int = 5,
    edges: np.ndarray | None = None,
) -> dict[str, Any]:
    """Mean screening cost per risk-quantile bucket of the dataset."""
    g = risk_scores(ds.features, policy.config.tau, policy.risk)
    if edges is None:
        edges = risk_quantile_edges(g, buckets)
    bucket_of = np.searchsorted(edges, g)
    evaluation = evaluate_policy(policy, ds)
    means, counts = [], []
    for b in range(buckets):
        mask = bucket_of == b
        counts.append(int(mask.sum()))
        means.append(
            float(evaluation.costs_per_record[mask].mean()) if mask.any() else 0.0
        )
    return {
        "edges": [float(e) for e in edges],
        "mean_cost": means,
        "count": counts,
    }


# ---------------------------------------------------------------------------
# Baselines
# ---------------------------------------------------------------------------


def baseline_single_tree(
    ds: Dataset,
    costs: CostConfig,
    delta: float = 0.05,
    min_samples: int = 10,
) -> tuple[Node, TreeStats]:
    """One-size-fits-all tree: pure information-gain splits, majority leaf
    labels, no FNR constraint, pruned with the same pessimistic rule."""
    tree = grow_information_tree(ds, None, min_samples=min_samples)
    tree = prune(tree, delta, max_false_negatives=None)
    return tree, evaluate_tree(tree, ds, None, costs)


def compare_with_single_tree(
    policy: PartitionedPolicy,
    baseline: Node,
    ds: Dataset,
) -> dict[str, Any]:
    """Per-partition FNR/FPR of the policy against the single baseline tree,
    evaluated over the policy's own partition assignment."""
    evaluation = evaluate_policy(policy, ds)
    assignments = evaluation.assignments
    rows = []
    for k, partition in enumerate(policy.partitions):
        idx = np.flatnonzero(assignments == k)
        stats = evaluate_tree(baseline, ds, idx, policy.costs)
        policy_stats = evaluation.per_partition[k]
        rows.append(
            {
                "partition_id": partition.partition_id,
                "policy_fnr": policy_stats.fnr,
                "policy_fpr": policy_stats.fpr,
                "baseline_fnr": stats.fnr,
                "baseline_fpr": stats.fpr,
            }
        )
    baseline_overall = evaluate_tree(baseline, ds, None, policy.costs)
    return {
        "per_partition": rows,
        "policy_overall": evaluation.overall.to_dict(),
        "baseline_overall": baseline_overall.to_dict(),
    }


@dataclass(frozen=True)
class GuidelineRule:
    age_min: float
    age_max: float
    max_risk: float
    tests: tuple[str, ...]


@dataclass(frozen=True)
class GuidelineRules:
    """Ordered age/risk-tier rules; first match wins."""

    rules: tuple[GuidelineRule, ...]

    def __post_init__(self) -> None:
        for age in range(18, 101):
            for risk in np.linspace(0.0, 1.0, 21):
                if self.match(float(age), float(risk)) is None:
                    raise ConfigError(
                        f"guideline rules leave age={age}, risk={risk:.2f} uncovered"
                    )

    def match(self, age: float, risk: float) -> GuidelineRule | None:
        for rule in self.rules:
            if rule.age_min <= age < rule.age_max and risk <= rule.max_risk:
                return rule
        return None

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "GuidelineRules":
        return cls(
            rules=tuple(
                GuidelineRule(
                    age_min=float(r["age_min"]),
                    age_max=float(r["age_max"]),
                    max_risk=float(r.get("max_risk", 1.0)),
                    tests=tuple(r["tests"]),
                )
                for r in data["rules"]
            )
        )


def default_guidelines() -> GuidelineRules:
    text = (
        resources.files("screenwise")
        .joinpath("configs/guidelines_default.json")
        .read_text()
    )
    return GuidelineRules.from_dict(json.loads(text))


def load_guidelines(path: str) -> GuidelineRules:
    with open(path, "r", encoding="utf-8") as handle:
        return GuidelineRules.from_dict(json.load(handle))


def baseline_guideline(
    rules: GuidelineRules,
    ds: Dataset,
    costs: CostConfig,
    risk_params: RiskParameters,
    tau: int,
    edges: np.ndarray | None = None,
    buckets: int = 5,
) -> dict[str, Any]:
    """Cost and accuracy of following the rule table.

    The implied decision is a stand-in: positive iff any prescribed and
    observed test lands in the highest score bucket. Cost charges every
    prescribed test.
    """
    g = risk_scores(ds.features, tau, risk_params)
    ages = np.array(
        [float(v) for v in ds.raw["age"]], dtype=np.float64
    ) if "age" in ds.raw else None
    if ages is None:
        j = ds.schema.names.index("age")
        spec = ds.schema.features[j]
        ages = spec.minimum + ds.features[:, j] * (spec.maximum - spec.minimum)
    test_cols = {t: j for j, t in enumerate(ds.tests)}
    record_costs = np.zeros(len(ds), dtype=np.float64)
    predicted = np.zeros(len(ds), dtype=np.int8)
    for i in range(len(ds)):
        rule = rules.match(float(ages[i]), float(g[i]))
        cost = 0.0
        decision = 0
        for test in rule.tests:
            cost += costs.cost_of(test)
            bucket = ds.buckets[i, test_cols[test]]
            if bucket == Bucket.B3.index:
                decision = 1
        record_costs[i] = cost
        predicted[i] = decision
    outcome = _rates(ds.labels, predicted, record_costs, costs.gamma, -1)
    if edges is None:
        edges = risk_quantile_edges(g, buckets)
    bucket_of = np.searchsorted(edges, g)
    mean_costs = [
        float(record_costs[bucket_of == b].mean())
        if np.any(bucket_of == b)
        else 0.0
        for b in range(buckets)
    ]
    return {
        "fnr": outcome.fnr,
        "fpr": outcome.fpr,
        "mean_cost": outcome.mean_cost,
        "per_bucket_mean_cost": mean_costs,
        "edges": [float(e) for e in edges],
    }


# ---------------------------------------------------------------------------
# Report assembly
# ---------------------------------------------------------------------------


@dataclass
class EvaluationReport:
    """Serializable roll-up of one evaluation run."""

    policy_evaluation: dict[str, Any]
    partition_count: int
    confidence: dict[str, Any] | None = None
    sweeps: dict[str, Any] = field(default_factory=dict)
    baselines: dict[str, Any] = field(default_factory=dict)
    provenance: dict[str, Any] = field(default_factory=dict)

    def to_dict(self) -> dict[str, Any]:
        return {
            "provenance": {"data": "synthetic", **self.provenance},
            "partition_count": self.partition_count,
            "policy_evaluation": self.policy_evaluation,
            "confidence": self.confidence,
            "sweeps": self.sweeps,
            "baselines": self.baselines,
        }


def report_basename(config: Mapping[str, Any], seed_range: tuple[int, int]) -> str:
    digest = sha256_of(dict(config))[:12]
    return f"report_{digest}_s{seed_range[0]}-{seed_range[1]}"


def write_report(
    report: EvaluationReport,
    out_dir: str,
    config: Mapping[str, Any],
    seed_range: tuple[int, int] = (0, 0),
) -> str:
    """Write the JSON report (plus one CSV per sweep curve); returns the
    JSON path. File names encode the config hash and seed range."""
    os.makedirs(out_dir, exist_ok=True)
    base = report_basename(config, seed_range)
    json_path = os.path.join(out_dir, base + ".json")
    with open(json_path, "w", encoding="utf-8") as handle:
        json.dump(report.to_dict(), handle, sort_keys=True, indent=2)
        handle.write("\n")
    for name, sweep in report.sweeps.items():
        rows = sweep.get("rows", [])
        if not rows:
            continue
        csv_path = os.path.join(out_dir, f"{base}_{name}.csv")
        keys = list(rows[0])
        with open(csv_path, "w", encoding="utf-8") as handle:
            handle.write(",".join(keys) + "\n")
            for row in rows:
                handle.write(",".join(str(row[k]) for k in keys) + "\n")
    return json_path
