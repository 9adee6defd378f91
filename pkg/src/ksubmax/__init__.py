"""Budgeted k-dimensional submodular maximization: solvers plus verification tooling."""

from .core import (
    Instance,
    QueryCounter,
    cost,
    join,
    marginal_density,
    marginal_gain,
    meet,
    precedes,
    subtract,
    support,
    validate_instance,
)
from .oracles import (
    CheckReport,
    ContractedOracle,
    CoverageOracle,
    DisjointCutOracle,
    TabularOracle,
    check_k_submodularity,
    contract,
    extend_with_null_elements,
    generate_instance,
)
from .multilinear import (
    FractionalPoint,
    TransformationPath,
    build_path,
    check_extension_properties,
    eval_exact,
    eval_mc,
    partial_exact,
    verify_path,
)
from .solvers import (
    GreedyTrace,
    RejectionRecord,
    SolverResult,
    best_feasible_singleton,
    brute_force_opt,
    first_rejection_prefix,
    greedy,
    greedy_plus,
    greedy_plus_singleton,
    q_guess_greedy,
    threshold_greedy,
)

__version__ = "0.1.0"
