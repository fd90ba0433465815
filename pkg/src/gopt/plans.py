"""Physical plan representation.

A plan is a linear op sequence with stack semantics: scans push a table,
expansions transform the top of the stack, a binary join pops two tables
and pushes the joined one, and relational operators transform the top.
This keeps execution, instrumentation and the JSON form aligned: one
entry per operator, in execution order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

from . import expr as ex
from .graph import Triplet


@dataclass(frozen=True)
class EdgeStep:
    """One edge of a vertex expansion, anchored at an already-bound vertex."""

    edge_alias: str
    anchor: str
    triplets: frozenset[Triplet]
    direction: str  # OUT: anchor is source; IN: anchor is target; BOTH: either
    predicate: object = None
    bind: bool = True


@dataclass(frozen=True)
class PScan:
    alias: str
    types: frozenset[str]
    predicate: object = None
    columns: frozenset | None = None
    est_freq: float = 0.0
    est_cost: float = 0.0

    kind = "SCAN"


@dataclass(frozen=True)
class PExpand:
    """Append one new vertex plus all its edges into the bound prefix.

    SIMPLE with one edge; EXPAND_INTERSECT intersects the adjacency sets
    of two or more edges (the worst-case-optimal step).
    """

    alias: str
    types: frozenset[str]
    edges: tuple[EdgeStep, ...]
    predicate: object = None
    columns: frozenset | None = None
    sigmas: tuple[float, ...] = ()
    est_freq: float = 0.0
    est_cost: float = 0.0

    @property
    def kind(self) -> str:
        return "EXPAND_INTERSECT" if len(self.edges) >= 2 else "EXPAND_SIMPLE"


@dataclass(frozen=True)
class PJoin:
    keys: tuple[str, ...]
    est_freq: float = 0.0
    est_cost: float = 0.0

    kind = "JOIN"


@dataclass(frozen=True)
class PSelect:
    predicate: object

    kind = "SELECT"


@dataclass(frozen=True)
class PProject:
    exprs: tuple
    names: tuple[str, ...]

    kind = "PROJECT"


@dataclass(frozen=True)
class PGroup:
    keys: tuple
    aggregates: tuple
    key_names: tuple[str, ...]
    agg_names: tuple[str, ...]

    kind = "GROUP"


@dataclass(frozen=True)
class POrder:
    keys: tuple  # of (expr, "ASC"|"DESC")
    limit_hint: int | None = None

    kind = "ORDER"


@dataclass(frozen=True)
class PLimit:
    n: int

    kind = "LIMIT"


PATTERN_OPS = (PScan, PExpand, PJoin)


@dataclass(frozen=True)
class PhysicalPlan:
    ops: tuple
    total_cost: float = 0.0
    meta: tuple = ()  # sorted (key, value) pairs; e.g. join vertex position

    def meta_dict(self) -> dict:
        return dict(self.meta)

    def pattern_ops(self):
        return [op for op in self.ops if isinstance(op, PATTERN_OPS)]


def _triplet_str(t: Triplet) -> str:
    return f"{t[0]}-{t[1]}->{t[2]}"


def _op_params(op) -> dict:
    if isinstance(op, PScan):
        out = {"alias": op.alias, "types": sorted(op.types)}
        if op.predicate is not None:
            out["predicate"] = ex.to_text(op.predicate)
        if op.columns is not None:
            out["columns"] = sorted(op.columns)
        return out
    if isinstance(op, PExpand):
        out = {
            "alias": op.alias,
            "types": sorted(op.types),
            "edges": [
                {
                    "edge_alias": e.edge_alias,
                    "anchor": e.anchor,
                    "types": sorted(_triplet_str(t) for t in e.triplets),
                    "direction": e.direction,
                    **({"predicate": ex.to_text(e.predicate)} if e.predicate else {}),
                    "bind": e.bind,
                }
                for e in op.edges
            ],
            "sigmas": list(op.sigmas),
        }
        if op.predicate is not None:
            out["predicate"] = ex.to_text(op.predicate)
        if op.columns is not None:
            out["columns"] = sorted(op.columns)
        return out
    if isinstance(op, PJoin):
        return {"keys": list(op.keys)}
    if isinstance(op, PSelect):
        return {"predicate": ex.to_text(op.predicate)}
    if isinstance(op, PProject):
        return {"exprs": [ex.to_text(e) for e in op.exprs], "names": list(op.names)}
    if isinstance(op, PGroup):
        return {
            "keys": [ex.to_text(k) for k in op.keys],
            "aggregates": [ex.to_text(a) for a in op.aggregates],
        }
    if isinstance(op, POrder):
        out = {"keys": [f"{ex.to_text(e)} {d}" for e, d in op.keys]}
        if op.limit_hint is not None:
            out["limit_hint"] = op.limit_hint
        return out
    if isinstance(op, PLimit):
        return {"n": op.n}
    raise TypeError(f"unknown physical op {op!r}")


def plan_to_obj(plan: PhysicalPlan) -> dict:
    ops = []
    for op in plan.ops:
        entry = {"kind": op.kind, "params": _op_params(op)}
        if isinstance(op, PATTERN_OPS):
            entry["est_freq"] = float(op.est_freq)
            entry["est_cost"] = float(op.est_cost)
        ops.append(entry)
    obj = {"ops": ops, "total_cost": float(plan.total_cost)}
    obj.update(plan.meta_dict())
    return obj


def plan_to_json(plan: PhysicalPlan) -> str:
    """Byte-stable JSON form of the plan."""
    return json.dumps(plan_to_obj(plan), sort_keys=True, indent=2)


def dump_physical(plan: PhysicalPlan) -> str:
    lines = []
    for op in plan.ops:
        params = _op_params(op)
        rendered = ", ".join(f"{k}={json.dumps(v, sort_keys=True)}" for k, v in params.items())
        extra = ""
        if isinstance(op, PATTERN_OPS):
            extra = f"  [freq={op.est_freq:g} cost={op.est_cost:g}]"
        lines.append(f"{op.kind}({rendered}){extra}")
    if plan.meta:
        lines.append("meta: " + json.dumps(plan.meta_dict(), sort_keys=True))
    lines.append(f"total_cost: {plan.total_cost:g}")
    return "\n".join(lines)
