"""Predicate and projection expressions over pattern aliases.

The expression language is the minimal closure of what queries need:
property access ``alias.prop``, bare alias references, literals, list
literals, ``$param`` placeholders, comparisons, ``IN``, boolean
connectives and the ``count(...)`` aggregate.
"""

from __future__ import annotations

from dataclasses import dataclass

from .errors import ExecutionError


@dataclass(frozen=True)
class Prop:
    alias: str
    name: str


@dataclass(frozen=True)
class Var:
    alias: str


@dataclass(frozen=True)
class Lit:
    value: object


@dataclass(frozen=True)
class ListLit:
    items: tuple


@dataclass(frozen=True)
class Param:
    name: str


@dataclass(frozen=True)
class Cmp:
    op: str
    left: object
    right: object


@dataclass(frozen=True)
class And:
    items: tuple


@dataclass(frozen=True)
class Or:
    items: tuple


@dataclass(frozen=True)
class Not:
    item: object


@dataclass(frozen=True)
class Count:
    arg: object  # Var/Prop, or None for count(*)


@dataclass(frozen=True)
class PathRef:
    """Assembles a path value from the aliases of a lowered multi-hop edge."""

    alias: str
    elements: tuple[str, ...]  # alternating vertex/edge aliases


def aliases_of(expr) -> frozenset[str]:
    """All pattern aliases referenced by the expression."""
    if isinstance(expr, (Prop, Var)):
        return frozenset((expr.alias,))
    if isinstance(expr, Cmp):
        return aliases_of(expr.left) | aliases_of(expr.right)
    if isinstance(expr, (And, Or)):
        out = frozenset()
        for item in expr.items:
            out |= aliases_of(item)
        return out
    if isinstance(expr, Not):
        return aliases_of(expr.item)
    if isinstance(expr, Count):
        return aliases_of(expr.arg) if expr.arg is not None else frozenset()
    if isinstance(expr, PathRef):
        return frozenset(expr.elements)
    return frozenset()


def props_of(expr) -> dict[str, frozenset[str]]:
    """Per-alias property names referenced by the expression."""
    out: dict[str, set[str]] = {}

    def walk(e):
        if isinstance(e, Prop):
            out.setdefault(e.alias, set()).add(e.name)
        elif isinstance(e, Cmp):
            walk(e.left)
            walk(e.right)
        elif isinstance(e, (And, Or)):
            for item in e.items:
                walk(item)
        elif isinstance(e, Not):
            walk(e.item)
        elif isinstance(e, Count) and e.arg is not None:
            walk(e.arg)

    walk(expr)
    return {a: frozenset(s) for a, s in out.items()}


def conjuncts(expr) -> list:
    """Flatten nested ANDs into a conjunct list."""
    if expr is None:
        return []
    if isinstance(expr, And):
        out = []
        for item in expr.items:
            out.extend(conjuncts(item))
        return out
    return [expr]


def and_join(items) -> object | None:
    items = [it for it in items if it is not None]
    if not items:
        return None
    if len(items) == 1:
        return items[0]
    return And(items=tuple(items))


def contains_count(expr) -> bool:
    if isinstance(expr, Count):
        return True
    if isinstance(expr, Cmp):
        return contains_count(expr.left) or contains_count(expr.right)
    if isinstance(expr, (And, Or)):
        return any(contains_count(i) for i in expr.items)
    if isinstance(expr, Not):
        return contains_count(expr.item)
    return False


def to_text(expr) -> str:
    """Deterministic textual form; used for dumps and output column names."""
    if isinstance(expr, Prop):
        return f"{expr.alias}.{expr.name}"
    if isinstance(expr, Var):
        return expr.alias
    if isinstance(expr, Lit):
        if isinstance(expr.value, str):
            return '"' + expr.value + '"'
        if isinstance(expr.value, bool):
            return "true" if expr.value else "false"
        return str(expr.value)
    if isinstance(expr, ListLit):
        return "[" + ", ".join(to_text(i) for i in expr.items) + "]"
    if isinstance(expr, Param):
        return "$" + expr.name
    if isinstance(expr, Cmp):
        return f"{to_text(expr.left)} {expr.op} {to_text(expr.right)}"
    if isinstance(expr, And):
        return " AND ".join(_paren(i) for i in expr.items)
    if isinstance(expr, Or):
        return " OR ".join(_paren(i) for i in expr.items)
    if isinstance(expr, Not):
        return "NOT " + _paren(expr.item)
    if isinstance(expr, Count):
        return "count(" + (to_text(expr.arg) if expr.arg is not None else "*") + ")"
    if isinstance(expr, PathRef):
        return expr.alias
    raise TypeError(f"unknown expression {expr!r}")


def _paren(expr) -> str:
    text = to_text(expr)
    if isinstance(expr, (And, Or)):
        return "(" + text + ")"
    return text


_NUMERIC = (int, float)


def _kind(value) -> str:
    if isinstance(value, bool):
        return "boolean"
    if isinstance(value, _NUMERIC):
        return "numeric"
    if isinstance(value, str):
        return "string"
    if isinstance(value, (list, tuple)):
        return "list"
    return type(value).__name__


def _eq(a, b, strict: bool) -> bool:
    if a is None or b is None:
        return False
    ka, kb = _kind(a), _kind(b)
    if ka != kb:
        if strict:
            raise ExecutionError(f"predicate type mismatch: comparing {ka} to {kb}")
        return False
    return a == b


class Env:
    """Row evaluation environment: alias -> raw cell, with graph lookups."""

    __slots__ = ("cells", "kinds", "graph", "params")

    def __init__(self, cells: dict, kinds: dict, graph, params=None):
        self.cells = cells
        self.kinds = kinds
        self.graph = graph
        self.params = params or {}

    def prop(self, alias: str, name: str):
        if alias not in self.cells:
            raise ExecutionError(f"unknown alias {alias!r} in expression")
        cell = self.cells[alias]
        kind = self.kinds.get(alias, "primitive")
        if kind == "vertex":
            return self.graph.vprops[cell].get(name)
        if kind == "edge":
            if name == "id":
                return cell
            return self.graph.eprops[cell].get(name)
        if kind == "path" and name == "length":
            return len(cell) // 2
        raise ExecutionError(f"cannot read property {name!r} of a {kind} value")


def eval_expr(expr, env: Env):
    """Evaluate a non-aggregate expression against one row."""
    if isinstance(expr, Lit):
        return expr.value
    if isinstance(expr, ListLit):
        return [eval_expr(i, env) for i in expr.items]
    if isinstance(expr, Param):
        if expr.name not in env.params:
            raise ExecutionError(f"unbound parameter ${expr.name}")
        return env.params[expr.name]
    if isinstance(expr, Prop):
        return env.prop(expr.alias, expr.name)
    if isinstance(expr, Var):
        if expr.alias not in env.cells:
            raise ExecutionError(f"unknown alias {expr.alias!r} in expression")
        return env.cells[expr.alias]
    if isinstance(expr, Cmp):
        return _eval_cmp(expr, env)
    if isinstance(expr, And):
        return all(eval_expr(i, env) is True for i in expr.items)
    if isinstance(expr, Or):
        return any(eval_expr(i, env) is True for i in expr.items)
    if isinstance(expr, Not):
        return eval_expr(expr.item, env) is not True
    if isinstance(expr, Count):
        raise ExecutionError("count(...) is only valid in RETURN")
    raise ExecutionError(f"cannot evaluate expression {expr!r}")


def _eval_cmp(expr: Cmp, env: Env):
    left = eval_expr(expr.left, env)
    right = eval_expr(expr.right, env)
    op = expr.op
    if op == "IN":
        if right is None:
            return False
        if not isinstance(right, (list, tuple)):
            raise ExecutionError("right side of IN must be a list")
        return any(_eq(left, item, strict=False) for item in right)
    if op == "=":
        return _eq(left, right, strict=True)
    if op == "<>":
        if left is None or right is None:
            return False
        return not _eq(left, right, strict=True)
    if left is None or right is None:
        return False
    if _kind(left) != _kind(right) or _kind(left) not in ("numeric", "string"):
        raise ExecutionError(
            f"predicate type mismatch: comparing {_kind(left)} to {_kind(right)} with {op}"
        )
    if op == "<":
        return left < right
    if op == "<=":
        return left <= right
    if op == ">":
        return left > right
    if op == ">=":
        return left >= right
    raise ExecutionError(f"unknown comparison {op!r}")
