"""Cost-sensitive screening-test decision trees with a confidence-bounded
false-negative rate.

Induction is greedy. At every node each unused test is scored by the ratio of
its information gain to a blend of the empirical false-positive rate under
its best leaf labeling and the test's monetary cost. Leaf labelings are
chosen by exhaustive enumeration subject to a global false-negative budget:
the tree's training false negatives may never exceed F_max * n_pos, where
F_max is the largest empirical false-negative rate whose Wilson upper
confidence bound (at level 1 - delta, over the partition's n_pos positive
records) still meets the cap eta. A node is split only when the split's
labeling strictly reduces that node's false positives relative to keeping it
a leaf, so trees never pay for tests that cannot change a decision.

Post-pruning is pessimistic: a subtree collapses to its majority leaf when
the leaf's Wilson-bounded error is no worse than the coverage-weighted
Wilson-bounded error of the subtree's leaves, provided the collapse stays
inside the false-negative budget. Subtrees whose leaves all agree collapse
unconditionally (identical predictions at lower cost).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Any, Iterator, Mapping, Sequence

import numpy as np
from scipy.stats import norm

from .errors import (
    EmptyTrainingSetError,
    InvalidProportionError,
    MissingRequiredOutcomeError,
    NoObservedOutcomesError,
    NonPositiveNError,
)
from .model import (
    Bucket,
    CostConfig,
    Dataset,
    ScreeningObservation,
    birads_bucket,
)

_FN_EPS = 1e-9


# ---------------------------------------------------------------------------
# Wilson bounds and sample-complexity arithmetic
# ---------------------------------------------------------------------------


def _z_value(delta: float) -> float:
    if not 0.0 < delta < 1.0:
        raise InvalidProportionError(f"delta outside (0,1): {delta!r}")
    return float(norm.isf(delta))


def wilson_upper(p_hat: float, n: int, delta: float) -> float:
    """One-sided Wilson upper confidence bound on a proportion.

    Returns (p + z^2/2n + z*sqrt(p/n - p^2/n + z^2/4n^2)) / (1 + z^2/n) with
    z the (1 - delta) standard-normal quantile. Tends to p_hat as n grows.
    """
    if not 0.0 <= p_hat <= 1.0:
        raise InvalidProportionError(f"proportion outside [0,1]: {p_hat!r}")
    if n < 1:
        raise NonPositiveNError(f"n must be >= 1: {n!r}")
    z = _z_value(delta)
    z2 = z * z
    center = p_hat + z2 / (2.0 * n)
    margin = z * math.sqrt(p_hat / n - p_hat * p_hat / n + z2 / (4.0 * n * n))
    return (center + margin) / (1.0 + z2 / n)


def wilson_lower(p_hat: float, n: int, delta: float) -> float:
    """One-sided Wilson lower bound (mirror of :func:`wilson_upper`)."""
    if not 0.0 <= p_hat <= 1.0:
        raise InvalidProportionError(f"proportion outside [0,1]: {p_hat!r}")
    if n < 1:
        raise NonPositiveNError(f"n must be >= 1: {n!r}")
    z = _z_value(delta)
    z2 = z * z
    center = p_hat + z2 / (2.0 * n)
    margin = z * math.sqrt(p_hat / n - p_hat * p_hat / n + z2 / (4.0 * n * n))
    return max(0.0, (center - margin) / (1.0 + z2 / n))


def wilson_interval(p_hat: float, n: int, delta: float) -> tuple[float, float]:
    """(lower, upper) Wilson bounds, each one-sided at level 1 - delta."""
    return wilson_lower(p_hat, n, delta), wilson_upper(p_hat, n, delta)


def max_empirical_fnr(eta: float, delta: float, n: int) -> float | None:
    """Largest empirical FNR whose Wilson upper bound still meets ``eta``.

    Closed-form inverse of the upper-bound equation: the defining quadratic
    (F - eta)^2 = z^2 * eta * (1 - eta) / n with F <= eta gives
    F_max = eta - z * sqrt(eta (1 - eta) / n), floored at 0. Returns None
    when even a zero empirical rate fails the bound, i.e. when
    wilson_upper(0, n, delta) > eta, which happens exactly for
    n < z^2 (1 - eta) / eta.
    """
    if not 0.0 < eta <= 1.0:
        raise InvalidProportionError(f"eta outside (0,1]: {eta!r}")
    if n < 1:
        raise NonPositiveNError(f"n must be >= 1: {n!r}")
    z = _z_value(delta)
    if wilson_upper(0.0, n, delta) > eta:
        return None
    return max(0.0, eta - z * math.sqrt(eta * (1.0 - eta) / n))


def min_positives_for_bound(eta: float, delta: float) -> int:
    """Smallest positive count for which the bound is attainable at all.

    This is ceil(z^2 (1 - eta) / eta), adjusted by direct evaluation to be
    robust at the boundary.
    """
    if not 0.0 < eta <= 1.0:
        raise InvalidProportionError(f"eta outside (0,1]: {eta!r}")
    z = _z_value(delta)
    n = max(1, math.ceil(z * z * (1.0 - eta) / eta))
    while n > 1 and wilson_upper(0.0, n - 1, delta) <= eta:
        n -= 1
    while wilson_upper(0.0, n, delta) > eta:
        n += 1
    return n


def count_hypotheses(s: int) -> int:
    """Number of distinct trees over ``s`` test kinds.

    Counts binary-labeled leaves and three-way internal nodes with no test
    reused along any root-to-leaf path: T(0) = 2, T(k) = 2 + k * T(k-1)^3.
    Exact integer arithmetic, no overflow.
    """
    if s < 0:
        raise ValueError(f"test count must be >= 0: {s!r}")
    total = 2
    for k in range(1, s + 1):
        total = 2 + k * total**3
    return total


def sample_complexity(
    epsilon: float, epsilon_cost: float, delta: float, hypothesis_count: int
) -> int:
    """Training-set size sufficient for uniform convergence over a finite
    hypothesis set: ceil(ln(4 |H| / delta) / (2 min(eps, eps_c)^2)).

    Natural logarithm throughout.
    """
    for name, value in (("epsilon", epsilon), ("epsilon_cost", epsilon_cost), ("delta", delta)):
        if not 0.0 < value < 1.0:
            raise InvalidProportionError(f"{name} outside (0,1): {value!r}")
    if hypothesis_count < 1:
        raise NonPositiveNError(f"hypothesis count must be >= 1: {hypothesis_count!r}")
    numerator = math.log(4.0 * hypothesis_count / delta)
    return math.ceil(numerator / (2.0 * min(epsilon, epsilon_cost) ** 2))


def hoeffding_slack(hypothesis_count: int, delta: float, n: int) -> float:
    """Uniform-convergence slack sqrt((ln|H| + ln(4/delta)) / (2n)).

    Strict mode tightens the training FNR target to eta minus this slack;
    the target becomes unattainable whenever the slack reaches eta.
    """
    if n < 1:
        raise NonPositiveNError(f"n must be >= 1: {n!r}")
    if hypothesis_count < 1:
        raise NonPositiveNError(f"hypothesis count must be >= 1: {hypothesis_count!r}")
    if not 0.0 < delta < 1.0:
        raise InvalidProportionError(f"delta outside (0,1): {delta!r}")
    return math.sqrt(
        (math.log(hypothesis_count) + math.log(4.0 / delta)) / (2.0 * n)
    )


# ---------------------------------------------------------------------------
# Tree structure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Leaf:
    """Terminal decision: 0 = regular followup, 1 = biopsy referral.

    Carries the training coverage counts used for confidence reporting.
    """

    label: int
    n: int
    pos: int
    neg: int


@dataclass(frozen=True)
class Internal:
    """A test recommendation with one child per score bucket."""

    test: str
    children: tuple["Node", "Node", "Node"]
    n: int
    pos: int
    neg: int


Node = Leaf | Internal

#: A decision tree is its root node.
DecisionTree = Node


@dataclass(frozen=True)
class FeasibilityVerdict:
    """Returned instead of a tree when no labeling can satisfy the bound."""

    feasible: bool
    reason: str
    max_allowed_fnr: float | None


@dataclass(frozen=True)
class TreeStats:
    """Empirical rates and costs of a tree over a record set."""

    fnr: float
    fpr: float
    mean_cost: float
    combined: float
    n_pos: int
    n_evaluated: int
    n_excluded: int = 0

    def __post_init__(self) -> None:
        for name in ("fnr", "fpr", "mean_cost"):
            value = getattr(self, name)
            if not -1e-12 <= value <= 1.0 + 1e-12:
                raise ValueError(f"{name} outside [0,1]: {value!r}")

    def to_dict(self) -> dict[str, Any]:
        return {
            "fnr": self.fnr,
            "fpr": self.fpr,
            "mean_cost": self.mean_cost,
            "combined": self.combined,
            "n_pos": self.n_pos,
            "n_evaluated": self.n_evaluated,
            "n_excluded": self.n_excluded,
        }

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "TreeStats":
        return cls(
            fnr=float(data["fnr"]),
            fpr=float(data["fpr"]),
            mean_cost=float(data["mean_cost"]),
            combined=float(data["combined"]),
            n_pos=int(data["n_pos"]),
            n_evaluated=int(data["n_evaluated"]),
            n_excluded=int(data.get("n_excluded", 0)),
        )


def tree_depth(node: Node) -> int:
    if isinstance(node, Leaf):
        return 0
    return 1 + max(tree_depth(child) for child in node.children)


def tree_tests(node: Node) -> set[str]:
    if isinstance(node, Leaf):
        return set()
    tests = {node.test}
    for child in node.children:
        tests |= tree_tests(child)
    return tests


def training_false_negatives(node: Node) -> int:
    """False negatives implied by the stored coverage counts."""
    if isinstance(node, Leaf):
        return node.pos if node.label == 0 else 0
    return sum(training_false_negatives(child) for child in node.children)


def training_false_positives(node: Node) -> int:
    if isinstance(node, Leaf):
        return node.neg if node.label == 1 else 0
    return sum(training_false_positives(child) for child in node.children)


def tree_to_dict(node: Node) -> dict[str, Any]:
    """Serialize to the nested policy-file form; round-trips bit-exactly."""
    if isinstance(node, Leaf):
        return {"label": node.label, "n": node.n, "pos": node.pos, "neg": node.neg}
    return {
        "test": node.test,
        "n": node.n,
        "pos": node.pos,
        "neg": node.neg,
        "children": {
            bucket.name: tree_to_dict(child)
            for bucket, child in zip(Bucket, node.children)
        },
    }


def tree_from_dict(data: Mapping[str, Any]) -> Node:
    if "label" in data:
        return Leaf(
            label=int(data["label"]),
            n=int(data["n"]),
            pos=int(data["pos"]),
            neg=int(data["neg"]),
        )
    children = tuple(
        tree_from_dict(data["children"][bucket.name]) for bucket in Bucket
    )
    return Internal(
        test=str(data["test"]),
        children=children,  # type: ignore[arg-type]
        n=int(data["n"]),
        pos=int(data["pos"]),
        neg=int(data["neg"]),
    )


# ---------------------------------------------------------------------------
# Record routing and evaluation
# ---------------------------------------------------------------------------


def path_cost(tree: Node, observation: ScreeningObservation, costs: CostConfig) -> float:
    """Total normalized monetary cost along the realized root-to-leaf path."""
    node = tree
    total = 0.0
    while isinstance(node, Internal):
        score = observation.score_for(node.test)
        if score is None:
            raise MissingRequiredOutcomeError(
                f"observation lacks an outcome for queried test {node.test!r}"
            )
        total += costs.cost_of(node.test)
        node = node.children[birads_bucket(score).index]
    return total


def classify_observation(
    tree: Node, observation: ScreeningObservation, costs: CostConfig
) -> tuple[int, float]:
    """(final label, path cost) for one complete observation."""
    node = tree
    total = 0.0
    while isinstance(node, Internal):
        score = observation.score_for(node.test)
        if score is None:
            raise MissingRequiredOutcomeError(
                f"observation lacks an outcome for queried test {node.test!r}"
            )
        total += costs.cost_of(node.test)
        node = node.children[birads_bucket(score).index]
    return node.label, total


def route_records(
    tree: Node, ds: Dataset, idx: np.ndarray, costs: CostConfig
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized routing of ``idx`` rows through the tree.

    Returns (labels, path costs, evaluated mask) aligned with ``idx``.
    Records missing an outcome for a queried test are excluded (mask False).
    """
    idx = np.asarray(idx, dtype=np.intp)
    labels = np.full(len(idx), -1, dtype=np.int8)
    path_costs = np.zeros(len(idx), dtype=np.float64)
    evaluated = np.ones(len(idx), dtype=bool)
    buckets = ds.buckets
    test_col = {t: j for j, t in enumerate(ds.tests)}

    def walk(node: Node, positions: np.ndarray) -> None:
        if len(positions) == 0:
            return
        if isinstance(node, Leaf):
            labels[positions] = node.label
            return
        col = test_col[node.test]
        b = buckets[idx[positions], col]
        missing = b < 0
        if np.any(missing):
            evaluated[positions[missing]] = False
        kept = positions[~missing]
        path_costs[kept] += costs.cost_of(node.test)
        b_kept = b[~missing]
        for bucket_index, child in enumerate(node.children):
            walk(child, kept[b_kept == bucket_index])

    walk(tree, np.arange(len(idx)))
    return labels, path_costs, evaluated


def evaluate_tree(
    tree: Node, ds: Dataset, idx: np.ndarray | None, costs: CostConfig
) -> TreeStats:
    """Empirical FNR, FPR, mean monetary cost, and combined cost over ``idx``.

    Zero-denominator conventions: FNR is 0 with no positives, FPR is 0 with
    no negatives. Records that lack an outcome for a queried test are
    excluded and counted in ``n_excluded``.
    """
    if idx is None:
        idx = np.arange(len(ds), dtype=np.intp)
    idx = np.asarray(idx, dtype=np.intp)
    predicted, path_costs, evaluated = route_records(tree, ds, idx, costs)
    y = ds.labels[idx]
    keep = evaluated
    y_kept = y[keep]
    predicted_kept = predicted[keep]
    n_pos = int(np.sum(y_kept == 1))
    n_neg = int(np.sum(y_kept == 0))
    fn = int(np.sum((y_kept == 1) & (predicted_kept == 0)))
    fp = int(np.sum((y_kept == 0) & (predicted_kept == 1)))
    fnr = fn / n_pos if n_pos else 0.0
    fpr = fp / n_neg if n_neg else 0.0
    mean_cost = float(path_costs[keep].mean()) if np.any(keep) else 0.0
    combined = costs.gamma * fpr + (1.0 - costs.gamma) * mean_cost
    return TreeStats(
        fnr=fnr,
        fpr=fpr,
        mean_cost=mean_cost,
        combined=combined,
        n_pos=n_pos,
        n_evaluated=int(np.sum(keep)),
        n_excluded=int(np.sum(~keep)),
    )


# ---------------------------------------------------------------------------
# Induction
# ---------------------------------------------------------------------------


def _entropy(pos: int, n: int) -> float:
    if n == 0 or pos == 0 or pos == n:
        return 0.0
    p = pos / n
    return -(p * math.log2(p) + (1.0 - p) * math.log2(1.0 - p))


def _bucket_counts(
    ds: Dataset, idx: np.ndarray, col: int
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(pos, neg) record counts per bucket for one test, observed rows only."""
    b = ds.buckets[idx, col]
    observed = b >= 0
    y = ds.labels[idx][observed]
    b = b[observed].astype(np.intp)
    combined = np.bincount(b * 2 + y, minlength=6)
    neg = combined[0::2].astype(np.int64)
    pos = combined[1::2].astype(np.int64)
    return pos, neg, observed


def information_gain(ds: Dataset, idx: np.ndarray, test: str) -> float:
    """Mutual information (bits) between the test's bucket and the label,
    over records whose outcome for the test is observed."""
    idx = np.asarray(idx, dtype=np.intp)
    col = ds.tests.index(test)
    pos, neg, observed = _bucket_counts(ds, idx, col)
    n_obs = int(pos.sum() + neg.sum())
    if n_obs == 0:
        raise NoObservedOutcomesError(f"no observed outcomes for test {test!r}")
    total_pos = int(pos.sum())
    before = _entropy(total_pos, n_obs)
    after = sum(
        (int(pos[b] + neg[b]) / n_obs) * _entropy(int(pos[b]), int(pos[b] + neg[b]))
        for b in range(3)
        if pos[b] + neg[b] > 0
    )
    return before - after


def _best_labeling(
    pos: np.ndarray,
    neg: np.ndarray,
    majority: int,
    fn_budget: float,
) -> tuple[tuple[int, int, int], int, int] | None:
    """Best bucket labeling under the false-negative budget.

    Enumerates all eight labelings (empty buckets are pinned to the parent's
    majority label), keeps those whose false negatives fit the budget, and
    returns (labels, fn, fp) minimizing false positives; ties prefer more
    1-labels (safer), then the lexicographically smallest tuple.
    """
    best: tuple[int, int, tuple[int, int, int]] | None = None
    empty = [int(pos[b] + neg[b]) == 0 for b in range(3)]
    for l1 in (0, 1):
        for l2 in (0, 1):
            for l3 in (0, 1):
                labels = (l1, l2, l3)
                if any(empty[b] and labels[b] != majority for b in range(3)):
                    continue
                fn = sum(int(pos[b]) for b in range(3) if labels[b] == 0)
                if fn > fn_budget + _FN_EPS:
                    continue
                fp = sum(int(neg[b]) for b in range(3) if labels[b] == 1)
                key = (fp, -sum(labels), labels)
                if best is None or key < best:
                    best = key
    if best is None:
        return None
    fp, neg_ones, labels = best
    fn = sum(int(pos[b]) for b in range(3) if labels[b] == 0)
    return labels, fn, fp


def label_leaves(
    ds: Dataset,
    idx: np.ndarray,
    test: str,
    eta: float,
    delta: float,
    fn_budget: float | None = None,
) -> tuple[tuple[int, int, int], float] | None:
    """Best bucket labeling for one test at the given bound, or None.

    ``fn_budget`` optionally overrides the allowance (in false-negative
    counts); by default it is max_empirical_fnr(eta, delta, n_pos) * n_pos
    over the records in ``idx``. Returns the labeling and its empirical FPR.
    """
    idx = np.asarray(idx, dtype=np.intp)
    col = ds.tests.index(test)
    pos, neg, _ = _bucket_counts(ds, idx, col)
    total_pos = int(pos.sum())
    total_neg = int(neg.sum())
    if total_pos + total_neg == 0:
        raise NoObservedOutcomesError(f"no observed outcomes for test {test!r}")
    if fn_budget is None:
        if total_pos == 0:
            fn_budget = math.inf
        else:
            cap = max_empirical_fnr(eta, delta, total_pos)
            if cap is None:
                return None
            fn_budget = cap * total_pos
    majority = 1 if total_pos >= total_neg else 0
    result = _best_labeling(pos, neg, majority, fn_budget)
    if result is None:
        return None
    labels, _, fp = result
    fpr = fp / total_neg if total_neg else 0.0
    return labels, fpr


@dataclass
class _GrowState:
    allowed_fn: float
    total_fn: float = 0.0


@dataclass(frozen=True)
class _SplitCandidate:
    test: str
    col: int
    labels: tuple[int, int, int]
    fn_per_bucket: tuple[int, int, int]
    fn_total: int
    fp_total: int
    score: float
    cost: float


def _best_split(
    ds: Dataset,
    idx: np.ndarray,
    available: Sequence[str],
    costs: CostConfig,
    budget: float,
    majority: int,
    baseline_fp: int,
) -> _SplitCandidate | None:
    """Best feasible test split at a node, or None when nothing qualifies.

    A test qualifies when it has observed outcomes, strictly positive
    information gain, a labeling inside the budget, and that labeling
    strictly beats ``baseline_fp`` (the node's false positives as a leaf).
    Selection maximizes gain / (gamma * FPR + (1 - gamma) * cost); ties
    prefer the cheaper test, then the fixed test order.
    """
    gamma = costs.gamma
    best_key: tuple[float, float, int] | None = None
    best: _SplitCandidate | None = None
    for order, test in enumerate(ds.tests):
        if test not in available:
            continue
        col = ds.tests.index(test)
        pos, neg, _ = _bucket_counts(ds, idx, col)
        n_obs = int(pos.sum() + neg.sum())
        if n_obs == 0:
            continue
        total_pos = int(pos.sum())
        total_neg = int(neg.sum())
        before = _entropy(total_pos, n_obs)
        after = sum(
            ((pos[b] + neg[b]) / n_obs) * _entropy(int(pos[b]), int(pos[b] + neg[b]))
            for b in range(3)
            if pos[b] + neg[b] > 0
        )
        gain = before - after
        if gain <= 1e-12:
            continue
        labeling = _best_labeling(pos, neg, majority, budget)
        if labeling is None:
            continue
        labels, fn, fp = labeling
        if fp >= baseline_fp:
            continue
        fpr = fp / total_neg if total_neg else 0.0
        cost = costs.cost_of(test)
        denominator = gamma * fpr + (1.0 - gamma) * cost
        score = math.inf if denominator <= 0.0 else gain / denominator
        key = (-score, cost, order)
        if best_key is None or key < best_key:
            best_key = key
            best = _SplitCandidate(
                test=test,
                col=col,
                labels=labels,
                fn_per_bucket=tuple(
                    int(pos[b]) if labels[b] == 0 else 0 for b in range(3)
                ),
                fn_total=fn,
                fp_total=fp,
                score=score,
                cost=cost,
            )
    return best


def grow_tree(
    ds: Dataset,
    idx: np.ndarray | None,
    eta: float,
    delta: float,
    costs: CostConfig,
    tests: Sequence[str] | None = None,
    min_samples: int = 10,
    max_fnr: float | None = None,
) -> Node | FeasibilityVerdict:
    """Grow a bounded cost-sensitive tree over the records in ``idx``.

    Returns a FeasibilityVerdict when the bound itself is unattainable,
    which happens exactly when the positive count is nonzero but below
    ceil(z^2 (1 - eta) / eta) (or when ``max_fnr`` is negative). A record
    set with no positives vacuously satisfies the bound.

    ``max_fnr`` optionally tightens the training FNR target below the
    Wilson-derived maximum (strict mode composes both caps).
    """
    if idx is None:
        idx = np.arange(len(ds), dtype=np.intp)
    idx = np.asarray(idx, dtype=np.intp)
    if len(idx) == 0:
        raise EmptyTrainingSetError("no training records")
    tests = tuple(tests) if tests is not None else ds.tests
    y = ds.labels[idx]
    n_pos = int(np.sum(y == 1))

    if n_pos == 0:
        cap = math.inf
    else:
        cap = max_empirical_fnr(eta, delta, n_pos)
        if cap is None:
            needed = min_positives_for_bound(eta, delta)
            return FeasibilityVerdict(
                feasible=False,
                reason=(
                    f"bound unattainable: {n_pos} positive records, "
                    f"need at least {needed} for eta={eta}, delta={delta}"
                ),
                max_allowed_fnr=None,
            )
        if max_fnr is not None:
            if max_fnr < 0:
                return FeasibilityVerdict(
                    feasible=False,
                    reason=f"tightened FNR target is negative ({max_fnr:.4f})",
                    max_allowed_fnr=None,
                )
            cap = min(cap, max_fnr)

    state = _GrowState(allowed_fn=cap * n_pos if n_pos else math.inf)
    buckets = ds.buckets

    def build(node_idx: np.ndarray, available: tuple[str, ...], provisional: int | None) -> Node:
        n = len(node_idx)
        pos = int(np.sum(ds.labels[node_idx] == 1))
        neg = n - pos
        majority = 1 if pos >= neg else 0

        def leaf(label: int) -> Leaf:
            state.total_fn += pos if label == 0 else 0
            return Leaf(label=label, n=n, pos=pos, neg=neg)

        stopped = n < min_samples or pos == 0 or neg == 0 or not available
        if provisional is not None and stopped:
            return leaf(provisional)

        candidate = None
        if not stopped:
            # A 0-labeled leaf has no false positives, so no split can improve
            # it; 1-labeled (and bare-root) nodes are improvable up to `neg`.
            baseline_fp = 0 if provisional == 0 else neg
            candidate = _best_split(
                ds,
                node_idx,
                available,
                costs,
                budget=state.allowed_fn - state.total_fn,
                majority=majority,
                baseline_fp=baseline_fp,
            )
        if candidate is None:
            if provisional is not None:
                return leaf(provisional)
            # Bare root: lowest-FPR labeling inside the budget.
            label = 0 if pos <= state.allowed_fn - state.total_fn + _FN_EPS else 1
            return leaf(label)

        remaining = tuple(t for t in available if t != candidate.test)
        b = buckets[node_idx, candidate.col]
        state.total_fn += candidate.fn_total
        children: list[Node] = []
        for bucket_index in range(3):
            child_idx = node_idx[b == bucket_index]
            child_label = candidate.labels[bucket_index]
            if len(child_idx) == 0:
                children.append(Leaf(label=child_label, n=0, pos=0, neg=0))
                continue
            state.total_fn -= candidate.fn_per_bucket[bucket_index]
            children.append(build(child_idx, remaining, child_label))
        return Internal(
            test=candidate.test,
            children=tuple(children),  # type: ignore[arg-type]
            n=n,
            pos=pos,
            neg=neg,
        )

    available = tuple(t for t in ds.tests if t in tests)
    return build(idx, available, None)


def grow_information_tree(
    ds: Dataset,
    idx: np.ndarray | None,
    min_samples: int = 10,
) -> Node:
    """Unconstrained baseline: split on maximum information gain alone,
    majority leaf labels, no cost denominator and no FNR budget."""
    if idx is None:
        idx = np.arange(len(ds), dtype=np.intp)
    idx = np.asarray(idx, dtype=np.intp)
    if len(idx) == 0:
        raise EmptyTrainingSetError("no training records")
    buckets = ds.buckets

    def build(node_idx: np.ndarray, available: tuple[str, ...]) -> Node:
        n = len(node_idx)
        pos = int(np.sum(ds.labels[node_idx] == 1))
        neg = n - pos
        majority = 1 if pos >= neg else 0
        if n < min_samples or pos == 0 or neg == 0 or not available:
            return Leaf(label=majority, n=n, pos=pos, neg=neg)
        best = None
        for order, test in enumerate(ds.tests):
            if test not in available:
                continue
            col = ds.tests.index(test)
            bucket_pos, bucket_neg, _ = _bucket_counts(ds, node_idx, col)
            n_obs = int(bucket_pos.sum() + bucket_neg.sum())
            if n_obs == 0:
                continue
            before = _entropy(int(bucket_pos.sum()), n_obs)
            after = sum(
                ((bucket_pos[b] + bucket_neg[b]) / n_obs)
                * _entropy(int(bucket_pos[b]), int(bucket_pos[b] + bucket_neg[b]))
                for b in range(3)
                if bucket_pos[b] + bucket_neg[b] > 0
            )
            gain = before - after
            if gain <= 1e-12:
                continue
            if best is None or (-gain, order) < best[:2]:
                best = (-gain, order, test, col)
        if best is None:
            return Leaf(label=majority, n=n, pos=pos, neg=neg)
        _, _, test, col = best
        remaining = tuple(t for t in available if t != test)
        b = buckets[node_idx, col]
        children = []
        for bucket_index in range(3):
            child_idx = node_idx[b == bucket_index]
            if len(child_idx) == 0:
                children.append(Leaf(label=majority, n=0, pos=0, neg=0))
            else:
                children.append(build(child_idx, remaining))
        return Internal(test=test, children=tuple(children), n=n, pos=pos, neg=neg)

    return build(idx, tuple(ds.tests))


# ---------------------------------------------------------------------------
# Pruning
# ---------------------------------------------------------------------------


def _leaf_error_upper(pos: int, neg: int, label: int, delta: float) -> float:
    n = pos + neg
    if n == 0:
        return 0.0
    errors = pos if label == 0 else neg
    return wilson_upper(errors / n, n, delta)


def pessimistic_error(node: Node, delta: float) -> float:
    """Coverage-weighted Wilson upper bound on the subtree's leaf errors."""
    if isinstance(node, Leaf):
        return _leaf_error_upper(node.pos, node.neg, node.label, delta)
    if node.n == 0:
        return 0.0
    total = 0.0
    for child in node.children:
        if child.n > 0:
            total += (child.n / node.n) * pessimistic_error(child, delta)
    return total


def prune(
    tree: Node,
    delta: float,
    max_false_negatives: float | None = None,
) -> Node:
    """Pessimistic bottom-up pruning.

    Collapses a subtree to its majority-label leaf when the collapsed leaf's
    Wilson-bounded error does not exceed the coverage-weighted Wilson-bounded
    error of the subtree, provided the collapsed tree's training false
    negatives stay within ``max_false_negatives`` (pass None to skip the
    guard, e.g. for unconstrained baseline trees). Subtrees whose leaves all
    share one label always collapse. Deterministic.
    """
    total_fn = training_false_negatives(tree)

    def visit(node: Node) -> Node:
        nonlocal total_fn
        if isinstance(node, Leaf):
            return node
        children = tuple(visit(child) for child in node.children)
        node = Internal(
            test=node.test, children=children, n=node.n, pos=node.pos, neg=node.neg
        )
        if all(isinstance(c, Leaf) for c in children):
            labels = {c.label for c in children}
            if len(labels) == 1:
                # Identical predictions: collapsing changes nothing but cost.
                label = labels.pop()
                return Leaf(label=label, n=node.n, pos=node.pos, neg=node.neg)
        majority = 1 if node.pos >= node.neg else 0
        collapsed_upper = _leaf_error_upper(node.pos, node.neg, majority, delta)
        subtree_upper = pessimistic_error(node, delta)
        if collapsed_upper <= subtree_upper + 1e-12:
            fn_subtree = training_false_negatives(node)
            fn_collapsed = node.pos if majority == 0 else 0
            new_total = total_fn - fn_subtree + fn_collapsed
            if (
                max_false_negatives is None
                or new_total <= max_false_negatives + _FN_EPS
            ):
                total_fn = new_total
                return Leaf(label=majority, n=node.n, pos=node.pos, neg=node.neg)
        return node

    return visit(tree)


# ---------------------------------------------------------------------------
# Exhaustive enumeration (oracle for small test sets)
# ---------------------------------------------------------------------------


def enumerate_trees(tests: Sequence[str]) -> Iterator[Node]:
    """Yield every structurally distinct tree over the given tests.

    Counts match :func:`count_hypotheses`; intended for oracles with at most
    two tests (2002 trees), guarded against accidental explosion.
    """
    if count_hypotheses(len(tests)) > 100_000:
        raise ValueError("enumeration is only supported for small test sets")

    def gen(available: tuple[str, ...]) -> list[Node]:
        trees: list[Node] = [
            Leaf(label=0, n=0, pos=0, neg=0),
            Leaf(label=1, n=0, pos=0, neg=0),
        ]
        for test in available:
            remaining = tuple(t for t in available if t != test)
            subtrees = gen(remaining)
            for c1 in subtrees:
                for c2 in subtrees:
                    for c3 in subtrees:
                        trees.append(
                            Internal(
                                test=test,
                                children=(c1, c2, c3),
                                n=0,
                                pos=0,
                                neg=0,
                            )
                        )
        return trees

    yield from gen(tuple(tests))
