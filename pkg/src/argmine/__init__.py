"""argmine: learning defeasible arguments from tabular data.

The package mines small rules with exceptions from weighted case models
built out of discretized data rows, and compares three learners (a
coherence-pruned systematic search, a greedy ordered rule-list learner,
and a CART decision tree) over one shared discretization, prediction and
evaluation pipeline.
"""

from .case_model import (
    Argument,
    Case,
    CaseModel,
    Literal,
    build_case_model,
    is_coherent,
    is_conclusive,
    is_presumptively_valid,
    literals,
)
from .dectree import TreeNode, TreeParams, gini, learn_tree, tree_to_rules, tune_tree
from .discretize import (
    BinningScheme,
    DiscretizationParams,
    apply_scheme,
    dbscan_1d,
    equal_depth_bins,
    equal_width_bins,
    kmeans_1d,
    optimize_scheme,
    silhouette,
)
from .hero import Rule, RuleList, information_gain, learn_hero, learn_hero_multi, max_information_gain
from .inference import (
    AttackGraph,
    EvalReport,
    attack_graph,
    detect_self_attack,
    evaluate,
    grounded_extension,
    predict_rule_list,
    predict_theory,
    preferred_extensions,
)
from .pipeline import ExperimentConfig, load_csv, run_experiment, run_grid, split
from .pruned_search import (
    SearchConfig,
    Theory,
    filter_relevant,
    find_exceptions,
    join_premises,
    learn_pruned,
    merge_same_premise,
    search_arguments,
)

__version__ = "0.1.0"
