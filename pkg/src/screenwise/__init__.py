"""Personalized screening policies with confidence-bounded false-negative
rates: partition patients by a risk-blended distance, induce one
cost-sensitive test tree per partition under a Wilson-style pessimistic
bound, and execute the result one test outcome at a time."""

from .clustering import Centroid, SplitResult, assign, objective, split
from .errors import (
    ConfigError,
    EmptyTrainingSetError,
    MissingRequiredOutcomeError,
    NonNumericValueError,
    PolicyFileError,
    PolicyInfeasibleError,
    SchemaMismatchError,
    ScreenwiseError,
    SessionFinalError,
    UnknownFeatureError,
    WrongTestError,
)
from .model import (
    BiRadsScore,
    Bucket,
    CostConfig,
    Dataset,
    FeatureSchema,
    FeatureSpec,
    ScreeningObservation,
    TrainingRecord,
    birads_bucket,
    default_costs,
    normalize_features,
    parse_birads,
)
from .policy import (
    PartitionedPolicy,
    Partition,
    PolicyConfig,
    Session,
    advance_session,
    build_policy,
    dump_policy,
    load_policy,
    match_partition,
    personalization_bound,
    replay_record,
    save_policy,
    start_session,
)
from .risk import DEFAULT_RISK, RiskParameters, assess_risk, distance, risk_scores
from .synth import (
    GeneratorConfig,
    default_generator_config,
    default_schema,
    generate,
    load_csv,
    misspecified_generator_config,
    write_csv,
)
from .tree import (
    DecisionTree,
    FeasibilityVerdict,
    Internal,
    Leaf,
    TreeStats,
    count_hypotheses,
    evaluate_tree,
    grow_tree,
    hoeffding_slack,
    information_gain,
    label_leaves,
    max_empirical_fnr,
    min_positives_for_bound,
    path_cost,
    prune,
    sample_complexity,
    wilson_interval,
    wilson_lower,
    wilson_upper,
)

__version__ = "0.1.0"
