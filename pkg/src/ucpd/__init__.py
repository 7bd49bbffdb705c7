"""Changepoint tests built on weighted two-sample split sums.

The test statistic compares every prefix of an ordered sample against the
matching suffix through a pair kernel, studentizes the resulting path,
and rejects when its weighted supremum exceeds a simulated quantile of
the matching limit process (a Brownian bridge for antisymmetric kernels,
a tied-down two-sided process for symmetric ones).

Quick start::

    import numpy as np
    from ucpd import UStatChangeDetector

    x = np.concatenate([np.zeros(100), np.full(100, 1.5)])
    det = UStatChangeDetector(kernel="diff", grid_size=512, reps=5000).fit(x)
    det.reject_, det.changepoint_, det.p_value_
"""

from .detector import (
    ExperimentReport,
    Scenario,
    TestDecision,
    estimate_changepoint,
    ks_two_sample,
    moment_condition_certified,
    remainder_decay_curve,
    run_test,
    size_power_experiment,
    weighted_path_max,
)
from .distributions import Distribution, make_distribution, parse_distribution
from .errors import (
    BadGrid,
    BadParams,
    DegenerateVariance,
    LawMismatch,
    MissingAnalyticProjection,
    NonpositiveSigma,
    ParseError,
    SampleTooSmall,
    TooFewObservations,
    UcpdError,
    UnknownKernel,
)
from .estimator import UStatChangeDetector
from .kernels import (
    KERNEL_MOMENT_ORDER,
    PROCESS_BRIDGE,
    PROCESS_DAMPED,
    PROCESS_GAMMA,
    PROCESS_NAMES,
    AnalyticProjection,
    Kernel,
    Symmetry,
    SymmetryCheck,
    available_kernels,
    builtin_kernel,
    check_symmetry,
    limit_process_name,
    remainder_kernel,
    with_projection,
)
from .io import (
    classification_record,
    decision_record,
    dump_path_csv,
    experiment_record,
    read_law_cache,
    read_sample,
    read_scenario,
    write_law_cache,
    write_sample,
)
from .limitsim import (
    QUANTILE_LEVELS,
    LimitLaw,
    bridge_path,
    build_limit_law,
    damped_bridge_path,
    gamma_path,
    p_value,
    simulate_wiener,
    weighted_sup,
)
from .uprocess import (
    MATRIX_LIMIT,
    Estimates,
    ProcessPath,
    as_sample,
    estimate,
    jump_grid,
    pair_matrix,
    projection_path,
    standardized_path,
    studentized_path,
    z_path,
)
from .weights import (
    DEFAULT_C_GRID,
    EndpointDecayCheck,
    Summary,
    Verdict,
    WeightClassification,
    WeightFunction,
    builtin_weight,
    classify,
    constant_one,
    endpoint_decay_check,
    finite_threshold,
    loglog_weight,
    parse_weight,
    power_weight,
)

__version__ = "0.1.0"

__all__ = [
    "AnalyticProjection",
    "BadGrid",
    "BadParams",
    "DEFAULT_C_GRID",
    "DegenerateVariance",
    "Distribution",
    "EndpointDecayCheck",
    "Estimates",
    "ExperimentReport",
    "KERNEL_MOMENT_ORDER",
    "Kernel",
    "LawMismatch",
    "LimitLaw",
    "MATRIX_LIMIT",
    "MissingAnalyticProjection",
    "NonpositiveSigma",
    "PROCESS_BRIDGE",
    "PROCESS_DAMPED",
    "PROCESS_GAMMA",
    "PROCESS_NAMES",
    "ParseError",
    "ProcessPath",
    "QUANTILE_LEVELS",
    "SampleTooSmall",
    "Scenario",
    "Summary",
    "Symmetry",
    "SymmetryCheck",
    "TestDecision",
    "TooFewObservations",
    "UStatChangeDetector",
    "UcpdError",
    "UnknownKernel",
    "Verdict",
    "WeightClassification",
    "WeightFunction",
    "as_sample",
    "available_kernels",
    "bridge_path",
    "builtin_kernel",
    "builtin_weight",
    "build_limit_law",
    "check_symmetry",
    "classification_record",
    "classify",
    "constant_one",
    "damped_bridge_path",
    "decision_record",
    "dump_path_csv",
    "endpoint_decay_check",
    "estimate",
    "estimate_changepoint",
    "experiment_record",
    "finite_threshold",
    "gamma_path",
    "jump_grid",
    "ks_two_sample",
    "limit_process_name",
    "loglog_weight",
    "make_distribution",
    "moment_condition_certified",
    "p_value",
    "pair_matrix",
    "parse_distribution",
    "parse_weight",
    "power_weight",
    "projection_path",
    "read_law_cache",
    "read_sample",
    "read_scenario",
    "remainder_decay_curve",
    "remainder_kernel",
    "run_test",
    "simulate_wiener",
    "size_power_experiment",
    "standardized_path",
    "studentized_path",
    "weighted_path_max",
    "weighted_sup",
    "with_projection",
    "write_law_cache",
    "write_sample",
    "z_path",
    "__version__",
]
