"""Recursive-descent parser for the Cypher-like query subset.

Produces a LogicalPlan whose MATCH clauses become one MATCH_PATTERN
composite followed by the relational tail. Type names are validated
against the schema at parse time; supertype macros from the schema expand
to unions.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from . import expr as ex
from .errors import BindingError, QuerySyntaxError
from .graph import GraphSchema
from .ir import (
    ExpandEdge,
    ExpandPath,
    GetVertex,
    Group,
    Limit,
    LogicalPlan,
    MatchPattern,
    Order,
    Project,
    Scan,
    Select,
    TypeConstraint,
)

KEYWORDS = {
    "MATCH", "WHERE", "RETURN", "ORDER", "BY", "ASC", "DESC", "LIMIT",
    "AND", "OR", "NOT", "IN", "COUNT", "TRUE", "FALSE", "NULL", "AS",
}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<float>\d+\.\d+)
  | (?P<int>\d+)
  | (?P<string>"(?:[^"\\]|\\.)*"|'(?:[^'\\]|\\.)*')
  | (?P<param>\$[A-Za-z_][A-Za-z0-9_]*)
  | (?P<name>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<punct><-|->|<=|>=|<>|!=|[()\[\],:|.\-=<>*;])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True)
class Token:
    kind: str  # float | int | string | param | name | keyword | punct | eof
    text: str
    pos: int


def tokenize(text: str) -> list[Token]:
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            raise QuerySyntaxError(f"unexpected character {text[pos]!r}", position=pos)
        kind = m.lastgroup
        value = m.group()
        if kind != "ws":
            if kind == "name" and value.upper() in KEYWORDS:
                tokens.append(Token("keyword", value.upper(), pos))
            else:
                tokens.append(Token(kind, value, pos))
        pos = m.end()
    tokens.append(Token("eof", "", len(text)))
    return tokens


def _unquote(raw: str) -> str:
    body = raw[1:-1]
    return re.sub(r"\\(.)", r"\1", body)


class _Parser:
    def __init__(self, text: str, schema: GraphSchema, params: dict | None):
        self.tokens = tokenize(text)
        self.i = 0
        self.schema = schema
        self.params = params or {}
        self.synth = 0
        self.vertex_aliases: set[str] = set()
        self.edge_aliases: set[str] = set()
        self.path_aliases: set[str] = set()
        self.known_types: dict[str, TypeConstraint] = {}

    # -- token helpers --------------------------------------------------

    def peek(self) -> Token:
        return self.tokens[self.i]

    def next(self) -> Token:
        tok = self.tokens[self.i]
        self.i += 1
        return tok

    def at(self, kind: str, text: str | None = None) -> bool:
        tok = self.peek()
        return tok.kind == kind and (text is None or tok.text == text)

    def accept(self, kind: str, text: str | None = None) -> Token | None:
        if self.at(kind, text):
            return self.next()
        return None

    def expect(self, kind: str, text: str | None = None) -> Token:
        tok = self.peek()
        if not self.at(kind, text):
            raise QuerySyntaxError(
                f"unexpected token {tok.text!r}",
                position=tok.pos,
                expected=[text or kind],
            )
        return self.next()

    def fresh(self, prefix: str) -> str:
        alias = f"_{prefix}{self.synth}"
        self.synth += 1
        return alias

    # -- constraints ----------------------------------------------------

    def vertex_constraint(self, names: list[str]) -> TypeConstraint:
        if not names:
            return TypeConstraint.all_unresolved("V").resolve(self.schema)
        members: set[str] = set()
        for name in names:
            expansion = self.schema.supertype_members(name)
            if expansion is not None:
                members.update(expansion)
            elif name in self.schema.vertex_type_names:
                members.add(name)
            else:
                raise BindingError(f"unknown vertex type {name!r}")
        return TypeConstraint.union_of(members, "V")

    def edge_constraint(self, labels: list[str]) -> TypeConstraint:
        if not labels:
            return TypeConstraint.all_unresolved("E").resolve(self.schema)
        members = set()
        for label in labels:
            triplets = self.schema.triplets_with_label(label)
            if not triplets:
                raise BindingError(f"unknown edge type {label!r}")
            members.update(triplets)
        return TypeConstraint.union_of(members, "E")

    # -- MATCH ----------------------------------------------------------

    def parse_query(self) -> LogicalPlan:
        children: list = []
        while self.accept("keyword", "MATCH"):
            children.extend(self.parse_part())
            while self.accept("punct", ","):
                children.extend(self.parse_part())
        if not children:
            raise QuerySyntaxError("query must begin with MATCH", position=self.peek().pos)
        ops: list = [MatchPattern(children=tuple(children))]
        if self.accept("keyword", "WHERE"):
            ops.append(Select(predicate=self.parse_or()))
        if self.accept("keyword", "RETURN"):
            ops.append(self.parse_return())
        if self.accept("keyword", "ORDER"):
            self.expect("keyword", "BY")
            ops.append(self.parse_order())
        if self.accept("keyword", "LIMIT"):
            n = int(self.expect("int").text)
            ops.append(Limit(n=n))
            order = next((op for op in ops if isinstance(op, Order)), None)
            if order is not None:
                ops[ops.index(order)] = Order(keys=order.keys, limit_hint=n)
        self.accept("punct", ";")
        self.expect("eof")
        plan = LogicalPlan(ops=tuple(ops))
        self.check_alias_refs(plan)
        return plan

    def parse_part(self) -> list:
        ops: list = []
        alias, types, predicate = self.parse_node()
        ops.append(Scan(alias=alias, types=types, opt="V", predicate=predicate))
        prev = alias
        while self.at("punct", "-") or self.at("punct", "<-"):
            edge = self.parse_edge_body()
            nxt_alias, nxt_types, nxt_pred = self.parse_node()
            ops.extend(self.emit_edge(prev, edge, nxt_alias, nxt_types, nxt_pred))
            prev = nxt_alias
        return ops

    def parse_node(self):
        self.expect("punct", "(")
        alias = None
        names: list[str] = []
        tok = self.peek()
        if tok.kind == "name":
            alias = self.next().text
        if self.accept("punct", ":"):
            names.append(self.expect("name").text)
            while self.accept("punct", "|"):
                names.append(self.expect("name").text)
        self.expect("punct", ")")
        if alias is None:
            alias = self.fresh("v")
        if alias in self.edge_aliases:
            raise BindingError(f"alias {alias!r} already names an edge")
        self.vertex_aliases.add(alias)
        types = self.vertex_constraint(names)
        prior = self.known_types.get(alias)
        self.known_types[alias] = types if prior is None else prior.intersect(types)
        return alias, types, None

    def parse_edge_body(self):
        """Parse ``-[...]->``, ``<-[...]-`` or ``-[...]-`` between two nodes."""
        if self.accept("punct", "<-"):
            head = "IN"
        else:
            self.expect("punct", "-")
            head = None
        self.expect("punct", "[")
        alias = None
        labels: list[str] = []
        hops = 1
        if self.peek().kind == "name":
            alias = self.next().text
        if self.accept("punct", ":"):
            if self.peek().kind == "name":
                labels.append(self.next().text)
                while self.accept("punct", "|"):
                    labels.append(self.expect("name").text)
        if self.accept("punct", "*"):
            hops = self.parse_hops()
        self.expect("punct", "]")
        if head == "IN":
            self.expect("punct", "-")
            direction = "IN"
        elif self.accept("punct", "->"):
            direction = "OUT"
        else:
            self.expect("punct", "-")
            direction = "UNDIRECTED"
        if alias is None:
            alias = self.fresh("e")
        if alias in self.vertex_aliases or alias in self.edge_aliases:
            raise BindingError(f"duplicate edge alias {alias!r}")
        self.edge_aliases.add(alias)
        return alias, labels, hops, direction

    def parse_hops(self) -> int:
        tok = self.peek()
        if tok.kind == "int":
            hops = int(self.next().text)
        elif tok.kind == "param":
            name = self.next().text[1:]
            if name not in self.params:
                raise BindingError(f"hop parameter ${name} must be bound at parse time")
            hops = self.params[name]
        else:
            raise QuerySyntaxError(
                "hop count must be an integer or parameter", position=tok.pos
            )
        if not isinstance(hops, int) or hops < 1:
            raise BindingError(f"hop count must be a positive integer, got {hops!r}")
        return hops

    def emit_edge(self, prev, edge, nxt_alias, nxt_types, nxt_pred) -> list:
        alias, labels, hops, direction = edge
        etypes = self.edge_constraint(labels)
        prev_types = self.known_types.get(prev)
        if direction == "UNDIRECTED":
            direction = self.resolve_undirected(etypes, prev_types, nxt_types, hops)
        opt = {"OUT": "TARGET", "IN": "SOURCE", "BOTH": "OTHER"}[direction]
        if hops == 1:
            return [
                ExpandEdge(tag=prev, alias=alias, types=etypes, direction=direction),
                GetVertex(tag=alias, alias=nxt_alias, types=nxt_types, opt=opt,
                          predicate=nxt_pred),
            ]
        self.path_aliases.add(alias)
        return [
            ExpandPath(tag=prev, alias=alias, types=etypes, direction=direction, hops=hops),
            GetVertex(tag=alias, alias=nxt_alias, types=nxt_types, opt=opt,
                      predicate=nxt_pred),
        ]

    def resolve_undirected(self, etypes, prev_types, nxt_types, hops) -> str:
        """Pick OUT/IN when only one orientation is schema-admissible, else BOTH."""
        if hops > 1:
            return "BOTH"
        src_ok = prev_types.members if prev_types else self.schema.vertex_type_names
        dst_ok = nxt_types.members if nxt_types else self.schema.vertex_type_names
        fwd = any(t[0] in src_ok and t[2] in dst_ok for t in etypes.members)
        bwd = any(t[0] in dst_ok and t[2] in src_ok for t in etypes.members)
        if fwd and bwd:
            return "BOTH"
        if fwd:
            return "OUT"
        if bwd:
            return "IN"
        raise BindingError("undirected edge has no schema-admissible orientation")

    # -- relational tail -------------------------------------------------

    def parse_return(self):
        items = [self.parse_or()]
        while self.accept("punct", ","):
            items.append(self.parse_or())
        keys, aggs = [], []
        for item in items:
            (aggs if ex.contains_count(item) else keys).append(item)
        if aggs:
            return Group(keys=tuple(keys), aggregates=tuple(aggs))
        return Project(exprs=tuple(keys), names=tuple(ex.to_text(k) for k in keys))

    def parse_order(self) -> Order:
        keys = []
        while True:
            e = self.parse_or()
            direction = "ASC"
            if self.accept("keyword", "DESC"):
                direction = "DESC"
            elif self.accept("keyword", "ASC"):
                direction = "ASC"
            keys.append((e, direction))
            if not self.accept("punct", ","):
                break
        return Order(keys=tuple(keys))

    # -- expressions ----------------------------------------------------

    def parse_or(self):
        items = [self.parse_and()]
        while self.accept("keyword", "OR"):
            items.append(self.parse_and())
        return items[0] if len(items) == 1 else ex.Or(items=tuple(items))

    def parse_and(self):
        items = [self.parse_not()]
        while self.accept("keyword", "AND"):
            items.append(self.parse_not())
        return items[0] if len(items) == 1 else ex.And(items=tuple(items))

    def parse_not(self):
        if self.accept("keyword", "NOT"):
            return ex.Not(item=self.parse_not())
        return self.parse_cmp()

    def parse_cmp(self):
        left = self.parse_primary()
        tok = self.peek()
        if tok.kind == "punct" and tok.text in ("=", "<>", "!=", "<", "<=", ">", ">="):
            op = self.next().text
            if op == "!=":
                op = "<>"
            return ex.Cmp(op=op, left=left, right=self.parse_primary())
        if self.accept("keyword", "IN"):
            return ex.Cmp(op="IN", left=left, right=self.parse_primary())
        return left

    def parse_primary(self):
        tok = self.peek()
        if tok.kind == "int":
            return ex.Lit(value=int(self.next().text))
        if tok.kind == "float":
            return ex.Lit(value=float(self.next().text))
        if tok.kind == "string":
            return ex.Lit(value=_unquote(self.next().text))
        if tok.kind == "param":
            return ex.Param(name=self.next().text[1:])
        if self.accept("keyword", "TRUE"):
            return ex.Lit(value=True)
        if self.accept("keyword", "FALSE"):
            return ex.Lit(value=False)
        if self.accept("keyword", "NULL"):
            return ex.Lit(value=None)
        if self.accept("keyword", "COUNT"):
            self.expect("punct", "(")
            if self.accept("punct", "*"):
                arg = None
            else:
                arg = self.parse_or()
            self.expect("punct", ")")
            return ex.Count(arg=arg)
        if self.accept("punct", "("):
            inner = self.parse_or()
            self.expect("punct", ")")
            return inner
        if self.accept("punct", "["):
            items = []
            if not self.at("punct", "]"):
                items.append(self.parse_primary())
                while self.accept("punct", ","):
                    items.append(self.parse_primary())
            self.expect("punct", "]")
            return ex.ListLit(items=tuple(items))
        if tok.kind == "name":
            name = self.next().text
            if self.accept("punct", "."):
                prop = self.expect("name").text
                return ex.Prop(alias=name, name=prop)
            return ex.Var(alias=name)
        raise QuerySyntaxError(
            f"unexpected token {tok.text!r} in expression",
            position=tok.pos,
            expected=["literal", "alias", "count", "("],
        )

    # -- validation -------------------------------------------------------

    def check_alias_refs(self, plan: LogicalPlan):
        known = self.vertex_aliases | self.edge_aliases
        for op in plan.tail():
            refs = set()
            if isinstance(op, Select):
                refs = ex.aliases_of(op.predicate)
            elif isinstance(op, Project):
                for e in op.exprs:
                    refs |= ex.aliases_of(e)
            elif isinstance(op, Group):
                for e in op.keys + op.aggregates:
                    refs |= ex.aliases_of(e)
            elif isinstance(op, Order):
                for e, _ in op.keys:
                    refs |= ex.aliases_of(e)
            unknown = refs - known
            if unknown:
                raise BindingError(
                    f"unknown alias(es) {sorted(unknown)} referenced in WHERE/RETURN"
                )


def parse(text: str, schema: GraphSchema, params: dict | None = None) -> LogicalPlan:
    """Parse a query into a logical plan, validating names against the schema.

    ``params`` is only needed when the query uses a parameterized hop count
    such as ``-[p:*$k]-``; predicate parameters stay symbolic until execution.
    """
    return _Parser(text, schema, params).parse_query()


def parse_param_value(text: str):
    """Parse a CLI ``--param name=value`` literal (scalar or list)."""
    tokens = tokenize(text)

    def scalar(tok: Token):
        if tok.kind == "int":
            return int(tok.text)
        if tok.kind == "float":
            return float(tok.text)
        if tok.kind == "string":
            return _unquote(tok.text)
        if tok.kind == "keyword" and tok.text in ("TRUE", "FALSE"):
            return tok.text == "TRUE"
        if tok.kind == "name":
            return tok.text
        raise QuerySyntaxError(f"cannot parse parameter value {text!r}", position=tok.pos)

    if tokens[0].kind == "punct" and tokens[0].text == "[":
        items = []
        i = 1
        while tokens[i].text != "]":
            items.append(scalar(tokens[i]))
            i += 1
            if tokens[i].text == ",":
                i += 1
        return items
    return scalar(tokens[0])
