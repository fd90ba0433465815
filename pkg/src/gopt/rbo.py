"""Heuristic rewrite rules and the fixpoint driver.

Three rules, applied in a fixed order until the plan stops changing:
filters sink into the pattern operators they constrain, adjacent
edge-expansion/vertex-fetch pairs fuse when the edge is never used again,
and a projection after the match keeps only aliases the tail still needs
while property columns are narrowed per operator.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

from . import expr as ex
from .errors import GoptError
from .ir import (
    ExpandEdge,
    ExpandFused,
    ExpandPath,
    GetVertex,
    Group,
    LogicalPlan,
    MatchPattern,
    Order,
    Project,
    Scan,
    Select,
)


@dataclass(frozen=True)
class RewriteRule:
    name: str
    condition: object  # plan -> bool
    action: object  # plan -> plan

    def apply(self, plan: LogicalPlan) -> LogicalPlan:
        if self.condition(plan):
            return self.action(plan)
        return plan


def _match_index(plan: LogicalPlan) -> int:
    for i, op in enumerate(plan.ops):
        if isinstance(op, MatchPattern):
            return i
    raise GoptError("plan has no MATCH_PATTERN")


def _producers(match: MatchPattern) -> dict[str, int]:
    """First child producing each alias (vertices, edges, paths)."""
    out: dict[str, int] = {}
    for i, child in enumerate(match.children):
        aliases = [child.alias]
        if isinstance(child, ExpandFused):
            aliases.append(child.edge_alias)
        for a in aliases:
            out.setdefault(a, i)
    return out


def _tail_alias_refs(plan: LogicalPlan) -> set[str]:
    refs: set[str] = set()
    for op in plan.tail():
        if isinstance(op, Select):
            refs |= ex.aliases_of(op.predicate)
        elif isinstance(op, Project):
            for e in op.exprs:
                refs |= ex.aliases_of(e)
        elif isinstance(op, Group):
            for e in op.keys + op.aggregates:
                refs |= ex.aliases_of(e)
        elif isinstance(op, Order):
            for e, _ in op.keys:
                refs |= ex.aliases_of(e)
    return refs


def _tail_prop_refs(plan: LogicalPlan) -> dict[str, set[str]]:
    props: dict[str, set[str]] = {}

    def absorb(expr):
        for alias, names in ex.props_of(expr).items():
            props.setdefault(alias, set()).update(names)

    for op in plan.tail():
        if isinstance(op, Select):
            absorb(op.predicate)
        elif isinstance(op, Project):
            for e in op.exprs:
                absorb(e)
        elif isinstance(op, Group):
            for e in op.keys + op.aggregates:
                absorb(e)
        elif isinstance(op, Order):
            for e, _ in op.keys:
                absorb(e)
    return props


# -- FilterIntoMatchRule -------------------------------------------------


def rule_filter_into_match(plan: LogicalPlan) -> LogicalPlan:
    """Move single-alias conjuncts of a post-match SELECT into the pattern."""
    mi = _match_index(plan)
    ops = list(plan.ops)
    si = mi + 1
    if si >= len(ops) or not isinstance(ops[si], Select):
        return plan
    match = ops[mi]
    producers = _producers(match)
    path_aliases = {
        c.alias for c in match.children if isinstance(c, ExpandPath)
    }
    push: list[tuple[str, object]] = []
    keep: list = []
    for conj in ex.conjuncts(ops[si].predicate):
        refs = ex.aliases_of(conj)
        if len(refs) == 1:
            alias = next(iter(refs))
            if alias in producers and alias not in path_aliases:
                push.append((alias, conj))
                continue
        keep.append(conj)
    if not push:
        return plan
    children = list(match.children)
    for alias, conj in push:
        idx = producers[alias]
        child = children[idx]
        if isinstance(child, ExpandFused) and alias == child.edge_alias:
            child = replace(child, edge_predicate=ex.and_join([child.edge_predicate, conj]))
        else:
            child = replace(child, predicate=ex.and_join([child.predicate, conj]))
        children[idx] = child
    ops[mi] = MatchPattern(children=tuple(children))
    if keep:
        ops[si] = Select(predicate=ex.and_join(keep))
    else:
        del ops[si]
    return LogicalPlan(ops=tuple(ops))


# -- ExpandGetVFusionRule -------------------------------------------------


def rule_expand_getv_fusion(plan: LogicalPlan) -> LogicalPlan:
    """Fuse EXPAND_EDGE + GET_VERTEX when the edge alias is never referenced."""
    mi = _match_index(plan)
    match = plan.ops[mi]
    downstream = _tail_alias_refs(plan)
    children = list(match.children)
    out: list = []
    changed = False
    i = 0
    while i < len(children):
        child = children[i]
        nxt = children[i + 1] if i + 1 < len(children) else None
        if (
            isinstance(child, ExpandEdge)
            and isinstance(nxt, GetVertex)
            and nxt.tag == child.alias
            and child.alias not in downstream
        ):
            out.append(
                ExpandFused(
                    tag=child.tag,
                    edge_alias=child.alias,
                    alias=nxt.alias,
                    edge_types=child.types,
                    types=nxt.types,
                    direction=child.direction,
                    edge_predicate=child.predicate,
                    predicate=nxt.predicate,
                    columns=nxt.columns,
                )
            )
            changed = True
            i += 2
            continue
        out.append(child)
        i += 1
    if not changed:
        return plan
    ops = list(plan.ops)
    ops[mi] = MatchPattern(children=tuple(out))
    return LogicalPlan(ops=tuple(ops))


# -- FieldTrimRule ---------------------------------------------------------


def _pattern_prop_refs(match: MatchPattern) -> dict[str, set[str]]:
    """Properties referenced by predicates already pushed into pattern ops."""
    props: dict[str, set[str]] = {}
    for child in match.children:
        preds = [getattr(child, "predicate", None)]
        if isinstance(child, ExpandFused):
            preds.append(child.edge_predicate)
        for pred in preds:
            if pred is None:
                continue
            for alias, names in ex.props_of(pred).items():
                props.setdefault(alias, set()).update(names)
    return props


def rule_field_trim(plan: LogicalPlan) -> LogicalPlan:
    """Project away dead aliases after the match; narrow COLUMNS per alias."""
    mi = _match_index(plan)
    match = plan.ops[mi]
    producers = _producers(match)
    produced = set(producers)
    live = _tail_alias_refs(plan) & produced
    prop_refs = _tail_prop_refs(plan)
    for alias, names in _pattern_prop_refs(match).items():
        prop_refs.setdefault(alias, set()).update(names)

    children = list(match.children)
    changed = False
    for i, child in enumerate(children):
        if not isinstance(child, (Scan, GetVertex, ExpandEdge, ExpandFused)):
            continue
        needed = prop_refs.get(child.alias)
        if not needed or producers.get(child.alias) != i:
            continue
        if child.columns != frozenset(needed):
            children[i] = replace(child, columns=frozenset(needed))
            changed = True

    ops = list(plan.ops)
    if changed:
        ops[mi] = MatchPattern(children=tuple(children))

    tail = plan.tail()
    want_project = bool(tail) and live and live < produced
    if want_project:
        exprs = tuple(ex.Var(alias=a) for a in sorted(live))
        project = Project(exprs=exprs, names=tuple(sorted(live)))
        insert_at = mi + 1
        while insert_at < len(ops) and isinstance(ops[insert_at], Select):
            insert_at += 1
        already = insert_at < len(ops) and ops[insert_at] == project
        if not already:
            ops.insert(insert_at, project)
            changed = True
    if not changed:
        return plan
    return LogicalPlan(ops=tuple(ops))


DEFAULT_RULES = (
    RewriteRule(
        name="FilterIntoMatchRule",
        condition=lambda plan: any(isinstance(op, Select) for op in plan.ops),
        action=rule_filter_into_match,
    ),
    RewriteRule(
        name="ExpandGetVFusionRule",
        condition=lambda plan: any(
            isinstance(op, MatchPattern)
            and any(isinstance(c, ExpandEdge) for c in op.children)
            for op in plan.ops
        ),
        action=rule_expand_getv_fusion,
    ),
    RewriteRule(
        name="FieldTrimRule",
        condition=lambda plan: True,
        action=rule_field_trim,
    ),
)


def apply_rules(plan: LogicalPlan, rules=DEFAULT_RULES, trace: list | None = None) -> LogicalPlan:
    """Apply each rule to fixpoint in list order, repeating until stable.

    Every action either leaves the plan identical or strictly shrinks a
    measure (select conjuncts, operator count, retained columns), so the
    driver terminates after a bounded number of passes.
    """
    max_passes = len(plan.ops) + len(rules) + 8
    for _ in range(max_passes):
        changed = False
        for rule in rules:
            new_plan = rule.apply(plan)
            if new_plan != plan:
                changed = True
                plan = new_plan
                if trace is not None:
                    trace.append((rule.name, plan.dump()))
        if not changed:
            return plan
    raise GoptError("rewrite driver failed to reach a fixpoint")
