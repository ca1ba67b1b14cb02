"""Exact inference, rewrites, and bound checks for information flow trees.

The model: an undirected tree with a correlation rho(e) in [-1, 1] per edge
generates jointly distributed ±1 vertex variables; degree-1 vertices are
the observable leaves. The package computes leaf laws exactly (rational or
float mode), conditions them, rewrites trees without changing the leaf law,
measures conditioning metrics, and stress-tests decay bounds.
"""

from .bounds import (
    ASSERTED_BOUND_FAMILIES,
    CATERPILLAR_DECAY_CONSTANT,
    SCAN_FAMILIES,
    ScanRecord,
    StarSpec,
    caterpillar_decay_constant,
    complete_binary_tree,
    decay_constant_series,
    max_scaled_lhs,
    pair_decay_average,
    parity_counterexample,
    random_depth2_caterpillar,
    random_simple_caterpillar,
    random_tree,
    scan_decay_bound,
    scan_violations,
    sgn,
    star_bound,
    star_expected_center_variance,
)
from .core import (
    DEFAULT_MAX_VARS,
    DEFAULT_MAX_VERTICES,
    InfoFlowTree,
    JointDistribution,
    condition,
    joint_distribution,
    joint_distribution_bruteforce,
    leaf_distribution,
    leaf_distribution_bruteforce,
    require_valid,
    sample,
    sample_batch,
    subtree_event_prob,
    subtree_event_prob_pair,
    validate,
)
from .covariance import (
    CondCovReport,
    OutcomeCovariance,
    PathDecomposition,
    conditional_covariance_bruteforce,
    conditional_covariance_bruteforce_all,
    conditional_covariance_formula,
    conditional_covariance_from_lambdas,
    conditional_covariance_ratio,
    decompose_path,
    event_probability,
    expected_abs_cond_cov,
    path_covariance,
    tree_path,
)
from .errors import (
    CapExceededError,
    FormatError,
    IFTError,
    InvalidTreeError,
    PreconditionError,
    ZeroProbabilityError,
)
from .metrics import (
    MetricSeries,
    avg_conditional_leaf_covariance,
    avg_cov_cond,
    avg_covariance,
    avg_info_cond,
    homogeneous_star_cond_variance,
    metric_series,
    mutual_information,
)
from .transforms import (
    TraceStep,
    TransformTrace,
    apply_step,
    apply_trace,
    check_equivalence,
    contract_unit_subgraph,
    is_caterpillar,
    is_simple_caterpillar,
    merge_degree2,
    negate_internal_vertex,
    normalize_internal_signs,
    prune_dangling_internal,
    spine,
    split_edge,
    split_vertex,
    to_binary,
    to_simple_caterpillar,
)

__version__ = "0.1.0"
