"""Unified intermediate representation.

Holds the value model shared by graph and relational operators, the type
constraints attached to pattern elements, the logical operator set, the
plan container, and the pattern-graph structure with conversions between
the MATCH composite and the pattern form.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

from . import expr as ex
from .errors import BindingError, PatternError
from .graph import GraphSchema, Triplet

# ---------------------------------------------------------------------------
# Values
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VertexVal:
    id: int
    type: str
    properties: dict

    def render(self) -> str:
        return f"{self.type}[{self.id}]"


@dataclass(frozen=True)
class EdgeVal:
    id: int
    src_id: int
    dst_id: int
    type: Triplet
    properties: dict

    def render(self) -> str:
        return f"{self.type[1]}[{self.src_id}->{self.dst_id}]"


@dataclass(frozen=True)
class PathVal:
    """Alternating vertex/edge sequence; length is the edge count."""

    elements: tuple
    length: int

    def __post_init__(self):
        if not self.elements or len(self.elements) % 2 == 0:
            raise ValueError("path must be a non-empty alternating v/e/v sequence")
        if not isinstance(self.elements[0], VertexVal) or not isinstance(
            self.elements[-1], VertexVal
        ):
            raise ValueError("path must start and end with a vertex")
        if self.length != len(self.elements) // 2:
            raise ValueError("path length must equal its edge count")

    def render(self) -> str:
        return "~".join(e.render() for e in self.elements)


# ---------------------------------------------------------------------------
# Type constraints
# ---------------------------------------------------------------------------

BASIC = "BASIC"
UNION = "UNION"
ALL = "ALL"


@dataclass(frozen=True)
class TypeConstraint:
    """Set of admissible basic types for one pattern element.

    ``members`` holds vertex type names for vertex constraints and edge
    triplets for edge constraints. An ALL constraint with empty members is
    unresolved; binding against a schema makes membership explicit.
    """

    kind: str
    members: frozenset
    element: str = "V"  # V | E

    def __post_init__(self):
        if self.kind == BASIC and len(self.members) != 1:
            raise PatternError("BASIC constraint must have exactly one member")
        if self.kind == UNION and len(self.members) < 2:
            raise PatternError("UNION constraint must have at least two members")

    @staticmethod
    def basic(member, element="V") -> TypeConstraint:
        return TypeConstraint(BASIC, frozenset((member,)), element)

    @staticmethod
    def union_of(members, element="V") -> TypeConstraint:
        members = frozenset(members)
        kind = BASIC if len(members) == 1 else UNION
        return TypeConstraint(kind, members, element)

    @staticmethod
    def all_unresolved(element="V") -> TypeConstraint:
        return TypeConstraint(ALL, frozenset(), element)

    @property
    def is_resolved(self) -> bool:
        return self.kind != ALL or bool(self.members)

    @property
    def is_basic(self) -> bool:
        return len(self.members) == 1

    def resolve(self, schema: GraphSchema) -> TypeConstraint:
        if self.kind != ALL or self.members:
            return self
        members = schema.vertex_type_names if self.element == "V" else frozenset(schema.triplets)
        return TypeConstraint(ALL, frozenset(members), self.element)

    def with_members(self, members) -> TypeConstraint:
        members = frozenset(members)
        if members == self.members:
            return self
        kind = BASIC if len(members) == 1 else UNION
        return TypeConstraint(kind, members, self.element)

    def intersect(self, other: TypeConstraint) -> TypeConstraint:
        if self.element != other.element:
            raise PatternError("cannot intersect vertex and edge constraints")
        if self.kind == ALL and other.kind == ALL:
            return self
        members = self.members & other.members
        if self.kind == ALL:
            return other.with_members(members)
        return self.with_members(members)

    def render(self) -> str:
        if self.kind == ALL:
            return "ALL"
        if self.element == "V":
            return "|".join(sorted(self.members))
        return "|".join(sorted(f"{s}-{l}->{d}" for s, l, d in self.members))


# ---------------------------------------------------------------------------
# Logical operators
# ---------------------------------------------------------------------------


def _extras(predicate, columns) -> str:
    parts = []
    if predicate is not None:
        parts.append(f", predicate={ex.to_text(predicate)}")
    if columns is not None:
        parts.append(", columns={" + ", ".join(sorted(columns)) + "}")
    return "".join(parts)


@dataclass(frozen=True)
class Scan:
    alias: str
    types: TypeConstraint
    opt: str = "V"  # V | E
    predicate: object = None
    columns: frozenset | None = None

    def dump(self) -> str:
        return (
            f"SCAN(alias={self.alias}, types={self.types.render()}, opt={self.opt}"
            f"{_extras(self.predicate, self.columns)})"
        )


@dataclass(frozen=True)
class ExpandEdge:
    tag: str
    alias: str
    types: TypeConstraint
    direction: str  # OUT | IN | BOTH
    predicate: object = None
    columns: frozenset | None = None

    def dump(self) -> str:
        return (
            f"EXPAND_EDGE(tag={self.tag}, alias={self.alias}, "
            f"types={self.types.render()}, dir={self.direction}"
            f"{_extras(self.predicate, self.columns)})"
        )


@dataclass(frozen=True)
class GetVertex:
    tag: str
    alias: str
    types: TypeConstraint
    opt: str  # SOURCE | TARGET | OTHER
    predicate: object = None
    columns: frozenset | None = None

    def dump(self) -> str:
        return (
            f"GET_VERTEX(tag={self.tag}, alias={self.alias}, "
            f"types={self.types.render()}, opt={self.opt}"
            f"{_extras(self.predicate, self.columns)})"
        )


@dataclass(frozen=True)
class ExpandFused:
    """EXPAND_EDGE + GET_VERTEX collapsed into one vertex-producing hop."""

    tag: str
    edge_alias: str
    alias: str
    edge_types: TypeConstraint
    types: TypeConstraint
    direction: str
    edge_predicate: object = None
    predicate: object = None
    columns: frozenset | None = None

    def dump(self) -> str:
        extras = ""
        if self.edge_predicate is not None:
            extras += f", edge_predicate={ex.to_text(self.edge_predicate)}"
        return (
            f"EXPAND(tag={self.tag}, alias={self.alias}, "
            f"edge_types={self.edge_types.render()}, types={self.types.render()}, "
            f"dir={self.direction}{extras}{_extras(self.predicate, self.columns)})"
        )


@dataclass(frozen=True)
class ExpandPath:
    tag: str
    alias: str
    types: TypeConstraint
    direction: str
    hops: int

    def __post_init__(self):
        if not isinstance(self.hops, int) or self.hops < 1:
            raise PatternError("hop count must be a positive integer")

    def dump(self) -> str:
        return (
            f"EXPAND_PATH(tag={self.tag}, alias={self.alias}, "
            f"types={self.types.render()}, dir={self.direction}, hops={self.hops})"
        )


@dataclass(frozen=True)
class MatchPattern:
    children: tuple

    def dump(self) -> str:
        lines = ["MATCH_PATTERN"]
        lines.extend("  " + child.dump() for child in self.children)
        return "\n".join(lines)


@dataclass(frozen=True)
class Select:
    predicate: object

    def dump(self) -> str:
        return f"SELECT(predicate={ex.to_text(self.predicate)})"


@dataclass(frozen=True)
class Project:
    exprs: tuple
    names: tuple

    def dump(self) -> str:
        items = ", ".join(ex.to_text(e) for e in self.exprs)
        return f"PROJECT(exprs=[{items}])"


@dataclass(frozen=True)
class Join:
    keys: tuple

    def dump(self) -> str:
        return f"JOIN(keys=[{', '.join(self.keys)}])"


@dataclass(frozen=True)
class Group:
    keys: tuple
    aggregates: tuple

    def dump(self) -> str:
        keys = ", ".join(ex.to_text(k) for k in self.keys)
        aggs = ", ".join(ex.to_text(a) for a in self.aggregates)
        return f"GROUP(keys=[{keys}], aggs=[{aggs}])"


@dataclass(frozen=True)
class Order:
    keys: tuple  # of (expr, "ASC"|"DESC")
    limit_hint: int | None = None

    def dump(self) -> str:
        keys = ", ".join(f"{ex.to_text(e)} {d}" for e, d in self.keys)
        hint = f", limit_hint={self.limit_hint}" if self.limit_hint is not None else ""
        return f"ORDER(keys=[{keys}]{hint})"


@dataclass(frozen=True)
class Limit:
    n: int

    def dump(self) -> str:
        return f"LIMIT({self.n})"


GRAPH_OPS = (Scan, ExpandEdge, GetVertex, ExpandFused, ExpandPath)
RELATIONAL_OPS = (Select, Project, Join, Group, Order, Limit)


@dataclass(frozen=True)
class LogicalPlan:
    """Operator chain with a single sink; the MATCH composite comes first."""

    ops: tuple

    def dump(self) -> str:
        return "\n".join(op.dump() for op in self.ops)

    @property
    def match(self) -> MatchPattern | None:
        for op in self.ops:
            if isinstance(op, MatchPattern):
                return op
        return None

    def tail(self) -> tuple:
        return tuple(op for op in self.ops if not isinstance(op, MatchPattern))

    def replace_ops(self, ops) -> LogicalPlan:
        return LogicalPlan(ops=tuple(ops))


# ---------------------------------------------------------------------------
# Pattern graph
# ---------------------------------------------------------------------------


@dataclass
class PatternVertex:
    alias: str
    constraint: TypeConstraint
    predicate: object = None
    columns: frozenset | None = None


@dataclass
class PatternEdge:
    alias: str
    src: str
    dst: str
    constraint: TypeConstraint
    predicate: object = None
    hops: int = 1
    both: bool = False  # undirected: matches either orientation
    bind: bool = True  # False once fusion drops the edge from the output
    columns: frozenset | None = None

    def other(self, alias: str) -> str:
        return self.dst if alias == self.src else self.src


@dataclass
class Pattern:
    """Connected query pattern: aliased, constrained vertices and edges."""

    vertices: dict[str, PatternVertex] = field(default_factory=dict)
    edges: dict[str, PatternEdge] = field(default_factory=dict)
    path_groups: dict[str, tuple[str, ...]] = field(default_factory=dict)

    def copy(self) -> Pattern:
        return Pattern(
            vertices={a: replace(v) for a, v in self.vertices.items()},
            edges={a: replace(e) for a, e in self.edges.items()},
            path_groups=dict(self.path_groups),
        )

    def incident(self, vertex_alias: str) -> list[PatternEdge]:
        return [
            e
            for _, e in sorted(self.edges.items())
            if vertex_alias in (e.src, e.dst)
        ]

    def neighbor_aliases(self, vertex_alias: str) -> list[str]:
        seen, out = set(), []
        for e in self.incident(vertex_alias):
            other = e.other(vertex_alias)
            if other not in seen:
                seen.add(other)
                out.append(other)
        return out

    def is_connected(self) -> bool:
        if not self.vertices:
            return False
        start = next(iter(sorted(self.vertices)))
        seen = {start}
        stack = [start]
        while stack:
            for nbr in self.neighbor_aliases(stack.pop()):
                if nbr not in seen:
                    seen.add(nbr)
                    stack.append(nbr)
        return len(seen) == len(self.vertices)

    def validate(self):
        for e in self.edges.values():
            if e.src not in self.vertices or e.dst not in self.vertices:
                raise PatternError(f"edge {e.alias} references a missing vertex")
        if not self.is_connected():
            raise PatternError("pattern is not connected")

    def restrict(self, vertex_aliases, edge_aliases) -> Pattern:
        """Sub-pattern on the given alias sets (used by the plan search)."""
        return Pattern(
            vertices={a: self.vertices[a] for a in sorted(vertex_aliases)},
            edges={a: self.edges[a] for a in sorted(edge_aliases)},
        )

    def key(self) -> tuple[frozenset, frozenset]:
        return frozenset(self.vertices), frozenset(self.edges)

    def is_basic(self) -> bool:
        return all(v.constraint.is_basic for v in self.vertices.values()) and all(
            e.constraint.is_basic for e in self.edges.values()
        )

    def render(self) -> str:
        vs = "; ".join(
            f"{a}:{v.constraint.render()}" for a, v in sorted(self.vertices.items())
        )
        es = "; ".join(
            f"{a}:{e.src}-[{e.constraint.render()}]-{'' if e.both else '>'}{e.dst}"
            for a, e in sorted(self.edges.items())
        )
        return f"Pattern({vs} || {es})"


# ---------------------------------------------------------------------------
# MATCH_PATTERN <-> Pattern conversion
# ---------------------------------------------------------------------------


def _merge_vertex(p: Pattern, alias: str, constraint: TypeConstraint, predicate):
    if alias in p.edges:
        raise PatternError(f"alias {alias!r} is used for both a vertex and an edge")
    if alias in p.vertices:
        v = p.vertices[alias]
        if not (v.constraint.members & constraint.members):
            raise PatternError(f"conflicting type constraints for alias {alias!r}")
        v.constraint = v.constraint.intersect(constraint)
        v.predicate = ex.and_join([v.predicate, predicate])
    else:
        p.vertices[alias] = PatternVertex(alias=alias, constraint=constraint, predicate=predicate)


def _add_edge(p: Pattern, edge: PatternEdge):
    if edge.alias in p.vertices:
        raise PatternError(f"alias {edge.alias!r} is used for both a vertex and an edge")
    if edge.alias in p.edges:
        raise PatternError(f"duplicate edge alias {edge.alias!r}")
    if edge.src == edge.dst:
        raise PatternError("self-loop pattern edges are not supported")
    p.edges[edge.alias] = edge


def match_to_pattern(m: MatchPattern, schema: GraphSchema) -> Pattern:
    """Interpret the MATCH composite as a pattern graph.

    Vertex-producing operators become pattern vertices, edge-producing ones
    become pattern edges; repeated aliases merge by constraint intersection
    and multi-hop expansions lower to per-hop edges over synthesized
    internal aliases.
    """
    p = Pattern()
    pending_edge = None  # (anchor, ExpandEdge) waiting for its GET_VERTEX
    pending_path = None
    last_alias = None

    def resolve_tag(tag: str) -> str:
        if tag == "":
            if last_alias is None:
                raise BindingError("empty tag with no previous operator")
            return last_alias
        return tag

    for op in m.children:
        if isinstance(op, Scan):
            if pending_edge or pending_path:
                raise PatternError("dangling edge expansion without GET_VERTEX")
            types = op.types.resolve(schema)
            if op.opt == "V":
                _merge_vertex(p, op.alias, types, op.predicate)
            else:
                src, dst = f"{op.alias}.src", f"{op.alias}.dst"
                _merge_vertex(p, src, TypeConstraint.all_unresolved("V").resolve(schema), None)
                _merge_vertex(p, dst, TypeConstraint.all_unresolved("V").resolve(schema), None)
                _add_edge(
                    p,
                    PatternEdge(
                        alias=op.alias, src=src, dst=dst, constraint=types, predicate=op.predicate
                    ),
                )
            last_alias = op.alias
        elif isinstance(op, ExpandEdge):
            if pending_edge or pending_path:
                raise PatternError("dangling edge expansion without GET_VERTEX")
            anchor = resolve_tag(op.tag)
            if anchor not in p.vertices:
                raise BindingError(f"EXPAND_EDGE tag {anchor!r} is not a bound vertex alias")
            pending_edge = (anchor, op)
            last_alias = op.alias
        elif isinstance(op, GetVertex):
            vtypes = op.types.resolve(schema)
            if pending_edge is not None:
                anchor, eop = pending_edge
                if resolve_tag(op.tag) != eop.alias:
                    raise BindingError("GET_VERTEX tag must name the preceding edge")
                _check_expand_getv(eop.direction, op.opt)
                _merge_vertex(p, op.alias, vtypes, op.predicate)
                src, dst = (anchor, op.alias) if eop.direction != "IN" else (op.alias, anchor)
                _add_edge(
                    p,
                    PatternEdge(
                        alias=eop.alias,
                        src=src,
                        dst=dst,
                        constraint=eop.types.resolve(schema),
                        predicate=eop.predicate,
                        both=eop.direction == "BOTH",
                    ),
                )
                pending_edge = None
            elif pending_path is not None:
                anchor, pop_ = pending_path
                if resolve_tag(op.tag) != pop_.alias:
                    raise BindingError("GET_VERTEX tag must name the preceding path")
                _merge_vertex(p, op.alias, vtypes, op.predicate)
                _lower_path(p, schema, anchor, pop_, op.alias)
                pending_path = None
            else:
                # re-anchoring an existing or fresh vertex without an edge
                _merge_vertex(p, op.alias, vtypes, op.predicate)
            last_alias = op.alias
        elif isinstance(op, ExpandFused):
            if pending_edge or pending_path:
                raise PatternError("dangling edge expansion without GET_VERTEX")
            anchor = resolve_tag(op.tag)
            if anchor not in p.vertices:
                raise BindingError(f"EXPAND tag {anchor!r} is not a bound vertex alias")
            _merge_vertex(p, op.alias, op.types.resolve(schema), op.predicate)
            src, dst = (anchor, op.alias) if op.direction != "IN" else (op.alias, anchor)
            _add_edge(
                p,
                PatternEdge(
                    alias=op.edge_alias,
                    src=src,
                    dst=dst,
                    constraint=op.edge_types.resolve(schema),
                    predicate=op.edge_predicate,
                    both=op.direction == "BOTH",
                    bind=False,
                ),
            )
            last_alias = op.alias
        elif isinstance(op, ExpandPath):
            if pending_edge or pending_path:
                raise PatternError("dangling edge expansion without GET_VERTEX")
            anchor = resolve_tag(op.tag)
            if anchor not in p.vertices:
                raise BindingError(f"EXPAND_PATH tag {anchor!r} is not a bound vertex alias")
            pending_path = (anchor, op)
            last_alias = op.alias
        else:
            raise PatternError(f"operator {type(op).__name__} is not valid inside MATCH_PATTERN")
    if pending_edge or pending_path:
        raise PatternError("dangling edge expansion without GET_VERTEX")
    p.validate()
    return p


def _check_expand_getv(direction: str, opt: str):
    ok = {("OUT", "TARGET"), ("IN", "SOURCE"), ("BOTH", "OTHER")}
    if (direction, opt) not in ok:
        raise PatternError(f"EXPAND_EDGE dir={direction} cannot pair with GET_VERTEX opt={opt}")


def _lower_path(p: Pattern, schema: GraphSchema, anchor: str, op: ExpandPath, target: str):
    """Lower a fixed-hop path expansion to per-hop edges and inner vertices."""
    etypes = op.types.resolve(schema)
    all_v = TypeConstraint.all_unresolved("V").resolve(schema)
    group = [anchor]
    prev = anchor
    for hop in range(1, op.hops + 1):
        e_alias = f"{op.alias}.e{hop}"
        v_alias = target if hop == op.hops else f"{op.alias}.v{hop}"
        if hop < op.hops:
            _merge_vertex(p, v_alias, all_v, None)
        src, dst = (prev, v_alias) if op.direction != "IN" else (v_alias, prev)
        _add_edge(
            p,
            PatternEdge(
                alias=e_alias,
                src=src,
                dst=dst,
                constraint=etypes,
                both=op.direction == "BOTH",
            ),
        )
        group.extend([e_alias, v_alias])
        prev = v_alias
    p.path_groups[op.alias] = tuple(group)


def pattern_to_ops(p: Pattern, order: list[str]) -> list:
    """Emit the MATCH composite back from a pattern along a traversal order.

    Every vertex after the first must have a pattern neighbor earlier in the
    order. Round-trips through match_to_pattern up to pattern isomorphism.
    """
    if sorted(order) != sorted(p.vertices):
        raise PatternError("order must visit every pattern vertex exactly once")
    visited: set[str] = set()
    emitted_edges: set[str] = set()
    ops: list = []
    for i, alias in enumerate(order):
        v = p.vertices[alias]
        if i == 0:
            ops.append(
                Scan(alias=alias, types=v.constraint, opt="V", predicate=v.predicate)
            )
        else:
            connecting = [
                e for e in p.incident(alias) if e.other(alias) in visited and e.alias not in emitted_edges
            ]
            if not connecting:
                raise PatternError(f"vertex {alias!r} has no previously visited neighbor")
            for j, e in enumerate(connecting):
                anchor = e.other(alias)
                if e.both:
                    direction, opt = "BOTH", "OTHER"
                elif e.src == anchor:
                    direction, opt = "OUT", "TARGET"
                else:
                    direction, opt = "IN", "SOURCE"
                ops.append(
                    ExpandEdge(
                        tag=anchor,
                        alias=e.alias,
                        types=e.constraint,
                        direction=direction,
                        predicate=e.predicate,
                    )
                )
                ops.append(
                    GetVertex(
                        tag=e.alias,
                        alias=alias,
                        types=v.constraint,
                        opt=opt,
                        predicate=v.predicate if j == 0 else None,
                    )
                )
                emitted_edges.add(e.alias)
        visited.add(alias)
    # closing edges between already-visited vertices (cycles)
    for e_alias, e in sorted(p.edges.items()):
        if e_alias in emitted_edges:
            continue
        anchor, other = e.src, e.dst
        if e.both:
            direction, opt = "BOTH", "OTHER"
        else:
            direction, opt = "OUT", "TARGET"
        ops.append(
            ExpandEdge(
                tag=anchor, alias=e.alias, types=e.constraint, direction=direction,
                predicate=e.predicate,
            )
        )
        ops.append(
            GetVertex(tag=e.alias, alias=other, types=p.vertices[other].constraint, opt=opt)
        )
    return ops


