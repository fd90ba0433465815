"""End-to-end query compilation: parse, rewrite, infer, optimize, finalize."""

from __future__ import annotations

from dataclasses import dataclass, field

from .cbo import CostWeights, finalize_plan, join_vertex_position, optimize_pattern
from .config import Config
from .errors import GoptError
from .glogue import GLogue
from .graph import GraphSchema, TypeCounts
from .ir import LogicalPlan, Pattern, match_to_pattern
from .parser import parse
from .plans import PhysicalPlan
from .rbo import apply_rules
from .typecheck import INVALID, infer_and_validate


@dataclass
class Compiled:
    text: str
    logical: LogicalPlan
    rewritten: LogicalPlan
    rbo_trace: list = field(default_factory=list)
    pattern_raw: Pattern | None = None
    pattern: Pattern | None = None  # None when type validation failed
    invalid: bool = False
    tree: object = None
    cost: float = 0.0
    physical: PhysicalPlan | None = None
    join_position: tuple[int, int] | None = None


def compile_query(
    text: str,
    schema: GraphSchema,
    gl: GLogue,
    low_order: TypeCounts,
    params: dict | None = None,
    config: Config | None = None,
    inference: bool = True,
    use_rbo: bool = True,
    pruning: bool = True,
    edge_distinct: bool = False,
) -> Compiled:
    """Full compilation pipeline; stops after typecheck when invalid.

    Edge-distinct execution needs every edge bound in the output, so that
    mode compiles without the fusion rule.
    """
    config = config or Config()
    logical = parse(text, schema, params)
    out = Compiled(text=text, logical=logical, rewritten=logical)
    if use_rbo:
        from .rbo import DEFAULT_RULES

        rules = DEFAULT_RULES
        if edge_distinct:
            rules = tuple(r for r in DEFAULT_RULES if r.name != "ExpandGetVFusionRule")
        out.rewritten = apply_rules(logical, rules=rules, trace=out.rbo_trace)
    match = out.rewritten.match
    if match is None:
        raise GoptError("query has no MATCH clause")
    out.pattern_raw = match_to_pattern(match, schema)
    if inference:
        refined = infer_and_validate(out.pattern_raw, schema)
        if refined is INVALID:
            out.invalid = True
            return out
        refined.path_groups = dict(out.pattern_raw.path_groups)
        out.pattern = refined
    else:
        out.pattern = out.pattern_raw
    weights = CostWeights(alpha_expand=config.alpha_expand, alpha_join=config.alpha_join)
    out.tree, out.cost = optimize_pattern(
        out.pattern, gl, low_order, weights=weights, pruning=pruning
    )
    out.join_position = join_vertex_position(out.pattern, out.tree)
    meta = {}
    if out.join_position is not None:
        meta["join_vertex_position"] = list(out.join_position)
    out.physical = finalize_plan(
        out.pattern, out.tree, out.rewritten.tail(), out.cost, meta=meta
    )
    return out
