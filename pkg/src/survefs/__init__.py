"""survefs: clustering-guided ensemble feature selection for survival data.

The library clusters correlated features, keeps one representative per
cluster, runs bootstrap ensembles of Cox-based feature selectors with
data-driven thresholds, and scores every configuration by predictive
accuracy (C-index) against selection stability (relative weighted
consistency).
"""

from .cluster import (
    ClusterAssignment,
    Dendrogram,
    agglomerate_complete,
    dynamic_tree_cut,
    feature_distance_matrix,
    pick_representatives,
    spearman_matrix,
)
from .cox import (
    CoxModel,
    concordance_index,
    fit_ridge_cox,
    fit_ridge_cox_cv,
    fit_univariate_cox,
    gradient_nlpl,
    neg_log_partial_likelihood,
)
from .data import (
    CvPlan,
    Outcome,
    ProbeSet,
    Schema,
    SurvivalDataset,
    impute,
    load_csv,
    load_schema,
    make_cv_plan,
    make_probes,
    normalize,
)
from .ensemble import (
    AGGREGATORS,
    THRESHOLDS,
    EnsembleConfig,
    EnsembleResult,
    aggregate,
    apply_threshold,
    bootstrap_sample,
    rra_pvalues,
    run_ensemble,
)
from .errors import ConfigError, DataError, SurvefsError
from .pipeline import RunConfig, cluster_features, report, run_experiment
from .selectors import (
    ScoredFeatures,
    fit_elastic_net_cox,
    select_coxboost,
    select_enet,
    select_glmboost,
    select_lasso,
    select_rsf,
    select_uni,
)
from .stability import (
    EvaluationPoint,
    SubsetSystem,
    consensus_features,
    evaluate_configuration,
    relative_weighted_consistency,
)
from .syndata import GroundTruth, SynthSpec, generate

__version__ = "0.1.0"
