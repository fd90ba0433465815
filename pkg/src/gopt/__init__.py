"""Graph-native optimization and execution for pattern-relational queries."""

from .cbo import (
    CostWeights,
    cost_expand,
    cost_join,
    finalize_plan,
    greedy_initial,
    lower_bound,
    optimize_pattern,
)
from .errors import GoptError
from .executor import (
    BindingTable,
    brute_force_count,
    brute_force_match,
    count_intermediate,
    execute,
    multiset_equal,
    run_reference,
)
from .glogue import GLogue, build, canonicalize, expand_ratio, get_candidates, get_freq
from .graph import (
    GraphSchema,
    PropertyGraph,
    TypeCounts,
    load_graph,
    load_schema,
    neighbors,
    type_counts,
)
from .ir import (
    LogicalPlan,
    Pattern,
    TypeConstraint,
    match_to_pattern,
    pattern_to_ops,
)
from .parser import parse
from .pipeline import Compiled, compile_query
from .typecheck import (
    INVALID,
    CandidateTypes,
    infer_and_validate,
    naive_unfold_validate,
    schema_nbr_types,
)

__all__ = [
    "BindingTable",
    "CandidateTypes",
    "Compiled",
    "CostWeights",
    "GLogue",
    "GoptError",
    "GraphSchema",
    "INVALID",
    "LogicalPlan",
    "Pattern",
    "PropertyGraph",
    "TypeConstraint",
    "TypeCounts",
    "brute_force_count",
    "brute_force_match",
    "build",
    "canonicalize",
    "compile_query",
    "cost_expand",
    "cost_join",
    "count_intermediate",
    "execute",
    "expand_ratio",
    "finalize_plan",
    "get_candidates",
    "get_freq",
    "greedy_initial",
    "infer_and_validate",
    "load_graph",
    "load_schema",
    "lower_bound",
    "match_to_pattern",
    "multiset_equal",
    "naive_unfold_validate",
    "neighbors",
    "optimize_pattern",
    "parse",
    "pattern_to_ops",
    "run_reference",
    "schema_nbr_types",
    "type_counts",
]
