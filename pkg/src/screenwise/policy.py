"""Partitioned screening policies: offline builder and execution sessions.

The builder works a queue of partitions, starting from the whole training
set. Each partition is created with an already-grown (and pruned) tree; a
two-way split of a partition is accepted only when both children admit trees
whose bounds are certifiable (enough positive records for the Wilson bound,
at least ``min_samples`` records, and in strict mode enough records for the
uniform-convergence requirements). A rejected split freezes the partition
with the tree it already has, so feasibility in hand is never discarded.
The whole construction is deterministic for a fixed dataset and config.
"""

from __future__ import annotations

import json
import math
import uuid
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from . import clustering
from .clustering import Centroid
from .errors import (
    EmptyTrainingSetError,
    PolicyFileError,
    PolicyInfeasibleError,
    SchemaMismatchError,
    SessionFinalError,
    WrongTestError,
)
from .model import (
    BiRadsScore,
    CostConfig,
    Dataset,
    FeatureSchema,
    birads_bucket,
    default_costs,
    sha256_of,
)
from .risk import DEFAULT_BETA, DEFAULT_HORIZON_YEARS, DEFAULT_RISK, RiskParameters
from .tree import (
    FeasibilityVerdict,
    Internal,
    Leaf,
    Node,
    TreeStats,
    count_hypotheses,
    evaluate_tree,
    grow_tree,
    hoeffding_slack,
    max_empirical_fnr,
    min_positives_for_bound,
    prune,
    sample_complexity,
    tree_from_dict,
    tree_to_dict,
    wilson_interval,
)

POLICY_FORMAT_VERSION = 1


@dataclass(frozen=True)
class PolicyConfig:
    """All knobs of one policy build; serialized whole into the policy file."""

    eta: float = 0.1
    delta: float = 0.05
    gamma: float = 0.5
    beta: float = DEFAULT_BETA
    tau: int = DEFAULT_HORIZON_YEARS
    split_precision: float = 1e-4
    epsilon: float = 0.1
    epsilon_cost: float = 0.1
    strict: bool = False
    min_samples: int = 10
    seed: int = 0

    def __post_init__(self) -> None:
        for name in ("eta", "delta", "gamma", "beta", "epsilon", "epsilon_cost"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"{name} outside [0,1]: {value!r}")
        # eta = 1 is the degenerate no-constraint boundary and stays legal.
        for name in ("delta", "epsilon", "epsilon_cost"):
            value = getattr(self, name)
            if value in (0.0, 1.0):
                raise ValueError(f"{name} must lie strictly inside (0,1): {value!r}")
        if self.eta == 0.0:
            raise ValueError("eta must be positive")
        if self.split_precision <= 0:
            raise ValueError("split_precision must be positive")
        if self.min_samples < 1:
            raise ValueError("min_samples must be >= 1")
        if self.tau < 0:
            raise ValueError("tau must be >= 0")

    def to_dict(self) -> dict[str, Any]:
        return {
            "eta": self.eta,
            "delta": self.delta,
            "gamma": self.gamma,
            "beta": self.beta,
            "tau": self.tau,
            "split_precision": self.split_precision,
            "epsilon": self.epsilon,
            "epsilon_cost": self.epsilon_cost,
            "strict": self.strict,
            "min_samples": self.min_samples,
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "PolicyConfig":
        known = {f: data[f] for f in cls.__dataclass_fields__ if f in data}
        return cls(**known)


@dataclass(frozen=True)
class Partition:
    """One patient subgroup: its centroid, training tree, and training stats."""

    partition_id: int
    centroid: np.ndarray
    m_j: int
    n_pos: int
    tree: Node
    stats: TreeStats


@dataclass(frozen=True)
class PartitionedPolicy:
    """The learned screening policy: centroids plus one tree per partition."""

    config: PolicyConfig
    schema: FeatureSchema
    risk: RiskParameters
    costs: CostConfig
    tests: tuple[str, ...]
    partitions: tuple[Partition, ...]
    m: int
    hypothesis_count: int
    sample_size_required: int

    @property
    def partition_count(self) -> int:
        return len(self.partitions)

    def centroids(self) -> list[Centroid]:
        return [
            Centroid(position=p.centroid, member_count=p.m_j) for p in self.partitions
        ]


def personalization_bound(m: int, n_star: int) -> int:
    """Upper bound floor(m / n_star) on the achievable partition count."""
    if m < 1 or n_star < 1:
        raise ValueError("m and n_star must be >= 1")
    return m // n_star


def _effective_fnr_cap(
    config: PolicyConfig, n_pos: int, m_j: int, hypothesis_count: int
) -> float | None:
    """Largest admissible training FNR for a partition, or None if
    unattainable. Strict mode composes the Wilson cap with the tightened
    uniform-convergence target eta - slack(m_j)."""
    if n_pos == 0:
        return math.inf
    cap = max_empirical_fnr(config.eta, config.delta, n_pos)
    if cap is None:
        return None
    if config.strict:
        tightened = config.eta - hoeffding_slack(
            hypothesis_count, config.delta, m_j
        )
        if tightened < 0:
            return None
        cap = min(cap, tightened)
    return cap


def build_policy(
    ds: Dataset,
    config: PolicyConfig,
    costs: CostConfig | None = None,
    risk: RiskParameters = DEFAULT_RISK,
) -> PartitionedPolicy:
    """Learn a partitioned policy from labeled training records.

    Raises PolicyInfeasibleError when even the single root partition admits
    no tree under the bound (in strict mode additionally when the training
    set is smaller than the sample-complexity requirement or the slack
    exceeds eta).
    """
    m = len(ds)
    if m == 0:
        raise EmptyTrainingSetError("no training records")
    if costs is None:
        costs = default_costs(config.gamma)
    if set(costs.tests) != set(ds.tests):
        raise ValueError("cost table must cover exactly the dataset's tests")

    hypothesis_count = count_hypotheses(len(ds.tests))
    n_star = sample_complexity(
        config.epsilon, config.epsilon_cost, config.delta, hypothesis_count
    )
    min_pos = min_positives_for_bound(config.eta, config.delta)

    if config.strict:
        slack = hoeffding_slack(hypothesis_count, config.delta, m)
        if slack >= config.eta:
            threshold = math.ceil(
                (math.log(hypothesis_count) + math.log(4.0 / config.delta))
                / (2.0 * config.eta**2)
            )
            raise PolicyInfeasibleError(
                f"strict mode: uniform-convergence slack {slack:.4f} >= eta "
                f"{config.eta}; needs at least {threshold} training records"
            )
        if m < n_star:
            raise PolicyInfeasibleError(
                f"strict mode: {m} training records < sample complexity {n_star}"
            )

    X = ds.features
    y = ds.labels

    def grow_for(idx: np.ndarray) -> Node | FeasibilityVerdict:
        n_pos = int(np.sum(y[idx] == 1))
        cap = _effective_fnr_cap(config, n_pos, len(idx), hypothesis_count)
        if cap is None:
            return FeasibilityVerdict(
                feasible=False,
                reason="no admissible FNR target for this partition",
                max_allowed_fnr=None,
            )
        tree = grow_tree(
            ds,
            idx,
            config.eta,
            config.delta,
            costs,
            min_samples=config.min_samples,
            max_fnr=cap if config.strict else None,
        )
        if isinstance(tree, FeasibilityVerdict):
            return tree
        budget = cap * n_pos if n_pos else None
        return prune(tree, config.delta, max_false_negatives=budget)

    all_idx = np.arange(m, dtype=np.intp)
    root_tree = grow_for(all_idx)
    if isinstance(root_tree, FeasibilityVerdict):
        raise PolicyInfeasibleError(
            f"no feasible tree for the root partition: {root_tree.reason}"
        )

    @dataclass
    class _Live:
        creation_order: int
        idx: np.ndarray
        centroid: np.ndarray
        tree: Node

    counter = 0
    root = _Live(
        creation_order=counter,
        idx=all_idx,
        centroid=X.mean(axis=0),
        tree=root_tree,
    )
    live: list[_Live] = [root]
    queue: deque[_Live] = deque([root])

    def child_acceptable(idx: np.ndarray) -> bool:
        if len(idx) < config.min_samples:
            return False
        n_pos = int(np.sum(y[idx] == 1))
        # A split must leave both children with certifiable bounds; a child
        # with no positives at all offers no statistical cover either.
        if n_pos < min_pos:
            return False
        if config.strict:
            if len(idx) < n_star:
                return False
            if config.eta - hoeffding_slack(
                hypothesis_count, config.delta, len(idx)
            ) <= 0:
                return False
        return True

    while queue:
        partition = queue.popleft()
        if len(partition.idx) < 2:
            continue
        result = clustering.split(
            X[partition.idx],
            beta=config.beta,
            params=risk,
            tau=config.tau,
            precision=config.split_precision,
        )
        if result.degenerate:
            continue
        children_idx = [
            partition.idx[result.assignments == j] for j in (0, 1)
        ]
        if not all(child_acceptable(idx) for idx in children_idx):
            continue
        trees = [grow_for(idx) for idx in children_idx]
        if any(isinstance(t, FeasibilityVerdict) for t in trees):
            continue
        live.remove(partition)
        for j in (0, 1):
            counter += 1
            child = _Live(
                creation_order=counter,
                idx=children_idx[j],
                centroid=result.centroids[j].position,
                tree=trees[j],
            )
            live.append(child)
            queue.append(child)

    live.sort(key=lambda p: p.creation_order)
    partitions = tuple(
        Partition(
            partition_id=i,
            centroid=p.centroid,
            m_j=len(p.idx),
            n_pos=int(np.sum(y[p.idx] == 1)),
            tree=p.tree,
            stats=evaluate_tree(p.tree, ds, p.idx, costs),
        )
        for i, p in enumerate(live)
    )
    return PartitionedPolicy(
        config=config,
        schema=ds.schema,
        risk=risk,
        costs=costs,
        tests=ds.tests,
        partitions=partitions,
        m=m,
        hypothesis_count=hypothesis_count,
        sample_size_required=n_star,
    )


def match_partition(x: np.ndarray, policy: PartitionedPolicy) -> int:
    """Partition id of the nearest centroid (ties toward the lowest id)."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (policy.schema.dimension,):
        raise SchemaMismatchError(
            f"feature vector has shape {x.shape}, schema wants ({policy.schema.dimension},)"
        )
    index = clustering.assign(
        x,
        policy.centroids(),
        beta=policy.config.beta,
        params=policy.risk,
        tau=policy.config.tau,
    )
    return policy.partitions[index].partition_id


# ---------------------------------------------------------------------------
# Policy file
# ---------------------------------------------------------------------------


def policy_to_dict(policy: PartitionedPolicy) -> dict[str, Any]:
    schema_dict = policy.schema.to_dict()
    risk_dict = policy.risk.to_dict()
    return {
        "format_version": POLICY_FORMAT_VERSION,
        "config": policy.config.to_dict(),
        "costs": policy.costs.to_dict(),
        "tests": list(policy.tests),
        "schema": schema_dict,
        "schema_fingerprint": sha256_of(schema_dict),
        "risk": risk_dict,
        "risk_fingerprint": sha256_of(risk_dict),
        "m": policy.m,
        "hypothesis_count": policy.hypothesis_count,
        "sample_size_required": policy.sample_size_required,
        "partitions": [
            {
                "id": p.partition_id,
                "centroid": [float(v) for v in p.centroid],
                "m_j": p.m_j,
                "n_pos": p.n_pos,
                "stats": p.stats.to_dict(),
                "tree": tree_to_dict(p.tree),
            }
            for p in sorted(policy.partitions, key=lambda p: p.partition_id)
        ],
    }


def policy_from_dict(data: Mapping[str, Any]) -> PartitionedPolicy:
    if data.get("format_version") != POLICY_FORMAT_VERSION:
        raise PolicyFileError(
            f"unsupported policy format: {data.get('format_version')!r}"
        )
    schema = FeatureSchema.from_dict(data["schema"])
    if sha256_of(schema.to_dict()) != data["schema_fingerprint"]:
        raise PolicyFileError("schema fingerprint mismatch")
    risk = RiskParameters.from_dict(data["risk"])
    if sha256_of(risk.to_dict()) != data["risk_fingerprint"]:
        raise PolicyFileError("risk-parameter fingerprint mismatch")
    config = PolicyConfig.from_dict(data["config"])
    costs = CostConfig.from_dict(data["costs"])
    hypothesis_count = int(data["hypothesis_count"])
    partitions = []
    for entry in data["partitions"]:
        stats = TreeStats.from_dict(entry["stats"])
        n_pos = int(entry["n_pos"])
        m_j = int(entry["m_j"])
        cap = _effective_fnr_cap(config, n_pos, m_j, hypothesis_count)
        if cap is None or stats.fnr > min(cap, 1.0) + 1e-9:
            raise PolicyFileError(
                f"partition {entry['id']}: stored training FNR {stats.fnr:.4f} "
                "violates its bound"
            )
        partitions.append(
            Partition(
                partition_id=int(entry["id"]),
                centroid=np.asarray(entry["centroid"], dtype=np.float64),
                m_j=m_j,
                n_pos=n_pos,
                tree=tree_from_dict(entry["tree"]),
                stats=stats,
            )
        )
    return PartitionedPolicy(
        config=config,
        schema=schema,
        risk=risk,
        costs=costs,
        tests=tuple(data["tests"]),
        partitions=tuple(partitions),
        m=int(data["m"]),
        hypothesis_count=hypothesis_count,
        sample_size_required=int(data["sample_size_required"]),
    )


def dump_policy(policy: PartitionedPolicy) -> str:
    """Canonical JSON text; byte-identical for identical builds."""
    return json.dumps(policy_to_dict(policy), sort_keys=True, indent=2) + "\n"


def save_policy(policy: PartitionedPolicy, path: str) -> None:
    with open(path, "w", encoding="utf-8") as handle:
        handle.write(dump_policy(policy))


def load_policy(path: str) -> PartitionedPolicy:
    with open(path, "r", encoding="utf-8") as handle:
        return policy_from_dict(json.load(handle))


# ---------------------------------------------------------------------------
# Execution sessions
# ---------------------------------------------------------------------------

AWAITING = "awaiting_outcome"
FINAL = "final"


@dataclass(frozen=True)
class Session:
    """Execution state for one patient; immutable, advanced by replacement."""

    session_id: str
    features: tuple[float, ...]
    partition_id: int
    history: tuple[tuple[str, BiRadsScore], ...]
    status: str
    pending_test: str | None
    final_label: int | None
    diagnosis_label: int
    diagnosis_interval: tuple[float, float]
    cost: float
    node_path: tuple[int, ...]
    policy: PartitionedPolicy = field(repr=False, compare=False, default=None)  # type: ignore[assignment]

    @property
    def is_final(self) -> bool:
        return self.status == FINAL


def _node_at(tree: Node, path: tuple[int, ...]) -> Node:
    node = tree
    for bucket_index in path:
        assert isinstance(node, Internal)
        node = node.children[bucket_index]
    return node


def _diagnosis(node: Node, delta: float) -> tuple[int, tuple[float, float]]:
    """Current-node assessment: the label a stop here would imply, plus a
    Wilson interval on its training error.

    Internal nodes report their majority label; leaves report their actual
    label (which can differ from the majority under a tight budget). Empty
    leaves have no data: interval (0, 1).
    """
    if node.n == 0:
        label = node.label if isinstance(node, Leaf) else 1
        return label, (0.0, 1.0)
    if isinstance(node, Leaf):
        label = node.label
    else:
        label = 1 if node.pos >= node.neg else 0
    errors = node.pos if label == 0 else node.neg
    return label, wilson_interval(errors / node.n, node.n, delta)


def _session_at(
    session_id: str,
    features: tuple[float, ...],
    partition_id: int,
    history: tuple[tuple[str, BiRadsScore], ...],
    cost: float,
    node_path: tuple[int, ...],
    policy: PartitionedPolicy,
) -> Session:
    partition = policy.partitions[partition_id]
    node = _node_at(partition.tree, node_path)
    label, interval = _diagnosis(node, policy.config.delta)
    if isinstance(node, Leaf):
        status, pending, final = FINAL, None, node.label
    else:
        status, pending, final = AWAITING, node.test, None
    return Session(
        session_id=session_id,
        features=features,
        partition_id=partition_id,
        history=history,
        status=status,
        pending_test=pending,
        final_label=final,
        diagnosis_label=label,
        diagnosis_interval=interval,
        cost=cost,
        node_path=node_path,
        policy=policy,
    )


def start_session(
    x: np.ndarray,
    policy: PartitionedPolicy,
    session_id: str | None = None,
) -> Session:
    """Open a session at the root of the matched partition's tree."""
    x = np.asarray(x, dtype=np.float64)
    partition_id = match_partition(x, policy)
    return _session_at(
        session_id=session_id or uuid.uuid4().hex,
        features=tuple(float(v) for v in x),
        partition_id=partition_id,
        history=(),
        cost=0.0,
        node_path=(),
        policy=policy,
    )


def advance_session(session: Session, test: str, score: BiRadsScore) -> Session:
    """Record one test outcome and descend the matching bucket edge."""
    if session.is_final:
        raise SessionFinalError(
            f"session {session.session_id} already issued its final label"
        )
    if test != session.pending_test:
        raise WrongTestError(
            f"session awaits {session.pending_test!r}, got outcome for {test!r}"
        )
    policy = session.policy
    bucket = birads_bucket(score)
    return _session_at(
        session_id=session.session_id,
        features=session.features,
        partition_id=session.partition_id,
        history=session.history + ((test, score),),
        cost=session.cost + policy.costs.cost_of(test),
        node_path=session.node_path + (bucket.index,),
        policy=policy,
    )


def replay_record(
    policy: PartitionedPolicy, x: np.ndarray, observation, session_id: str = "replay"
) -> tuple[int, float, int]:
    """Run a complete record through the session machine.

    Returns (final label, accumulated cost, partition id); used as the
    record-by-record oracle against batch evaluation.
    """
    session = start_session(x, policy, session_id=session_id)
    while not session.is_final:
        score = observation.score_for(session.pending_test)
        if score is None:
            raise WrongTestError(
                f"replay needs an outcome for {session.pending_test!r}"
            )
        session = advance_session(session, session.pending_test, score)
    return session.final_label, session.cost, session.partition_id
