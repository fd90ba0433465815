"""Plan execution over the property graph.

Also houses the brute-force homomorphism matcher, which doubles as the
correctness oracle and the counting engine behind the statistics
catalogue. Matching is homomorphic: pattern vertices may map to the same
data vertex and edges are not required to be distinct unless the
edge-distinct flag is set.
"""

from __future__ import annotations

import heapq
import itertools
from collections import Counter
from dataclasses import dataclass

from . import expr as ex
from .errors import ExecutionError, GuardError
from .graph import PropertyGraph
from .ir import Group, Limit, Order, Pattern, Project, Select
from .plans import (
    EdgeStep,
    PExpand,
    PGroup,
    PJoin,
    PLimit,
    POrder,
    PProject,
    PScan,
    PSelect,
    PhysicalPlan,
)

MAX_PATTERN_VERTICES = 6
MAX_GRAPH_VERTICES = 10**4


@dataclass
class BindingTable:
    """Columnar multiset of rows; cells hold internal ids or primitives."""

    columns: tuple[tuple[str, str], ...]  # (alias/name, kind)
    rows: list[tuple]

    def index(self, name: str) -> int:
        for i, (n, _) in enumerate(self.columns):
            if n == name:
                return i
        raise KeyError(name)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(n for n, _ in self.columns)

    def kinds(self) -> dict[str, str]:
        return dict(self.columns)

    def env(self, row, graph, params=None) -> ex.Env:
        return ex.Env(dict(zip(self.names, row)), self.kinds(), graph, params)

    def project(self, names) -> BindingTable:
        idx = [self.index(n) for n in names]
        cols = tuple(self.columns[i] for i in idx)
        return BindingTable(cols, [tuple(r[i] for i in idx) for r in self.rows])

    def multiset(self, names=None) -> Counter:
        if names is None:
            names = self.names
        idx = [self.index(n) for n in names]
        return Counter(tuple(r[i] for i in idx) for r in self.rows)


def multiset_equal(a: BindingTable, b: BindingTable, names=None) -> bool:
    """Compare two tables as multisets over shared (or given) columns."""
    if names is None:
        names = sorted(set(a.names) & set(b.names))
    return a.multiset(names) == b.multiset(names)


# ---------------------------------------------------------------------------
# Brute-force homomorphism matcher (oracle)
# ---------------------------------------------------------------------------


def _matcher_order(p: Pattern, g: PropertyGraph) -> list[str]:
    counts = {
        a: sum(len(g.by_type.get(t, ())) for t in v.constraint.members)
        for a, v in p.vertices.items()
    }
    start = min(sorted(p.vertices), key=lambda a: (counts[a], a))
    order = [start]
    seen = {start}
    while len(order) < len(p.vertices):
        frontier = [
            a
            for a in sorted(p.vertices)
            if a not in seen and any(e.other(a) in seen for e in p.incident(a))
        ]
        if not frontier:
            raise ExecutionError("pattern is not connected")
        nxt = max(
            frontier,
            key=lambda a: (
                sum(1 for e in p.incident(a) if e.other(a) in seen),
                -counts[a],
                a,
            ),
        )
        order.append(nxt)
        seen.add(nxt)
    return order


def _edge_matches(g, e, src_vid: int, dst_vid: int) -> list[int]:
    """Data edges that realize pattern edge e between two bound vertices."""
    out = [
        eid
        for eid in g.edge_ids(src_vid, "OUT", e.constraint.members)
        if g.edst[eid] == dst_vid
    ]
    if e.both and src_vid != dst_vid:
        out.extend(
            eid
            for eid in g.edge_ids(dst_vid, "OUT", e.constraint.members)
            if g.edst[eid] == src_vid
        )
    if e.both and src_vid == dst_vid:
        pass  # self loop: both orientations coincide
    out.sort()
    return out


class _CountCapped(Exception):
    pass


def brute_force_match(
    p: Pattern,
    g: PropertyGraph,
    params: dict | None = None,
    edge_distinct: bool = False,
    materialize: bool = True,
    count_cap: int | None = None,
    work_cap: int | None = None,
):
    """Enumerate all homomorphisms of the pattern; one row per mapping.

    Rows bind every pattern vertex and every pattern edge, so the row
    count is the pattern frequency. With ``materialize=False`` only the
    count is returned; ``count_cap`` aborts enumeration early once
    exceeded and returns cap + 1; ``work_cap`` bounds candidate visits
    and raises GuardError beyond it.
    """
    if len(p.vertices) > MAX_PATTERN_VERTICES:
        raise GuardError(f"pattern has more than {MAX_PATTERN_VERTICES} vertices")
    if g.num_vertices > MAX_GRAPH_VERTICES:
        raise GuardError(f"graph has more than {MAX_GRAPH_VERTICES} vertices")
    params = params or {}
    order = _matcher_order(p, g)
    v_cols = sorted(p.vertices)
    e_cols = sorted(p.edges)
    kinds = {a: "vertex" for a in v_cols} | {a: "edge" for a in e_cols}

    # per-step: (alias, anchor edges to already-bound vertices, self loops)
    steps = []
    bound: set[str] = set()
    for alias in order:
        anchors = [e for e in p.incident(alias) if e.other(alias) in bound]
        loops = [e for e in p.incident(alias) if e.src == e.dst == alias]
        steps.append((alias, anchors, loops))
        bound.add(alias)

    cells: dict[str, int] = {}
    rows: list[tuple] = []
    count = 0
    work = 0

    def spend():
        nonlocal work
        work += 1
        if work_cap is not None and work > work_cap:
            raise GuardError(f"matcher work exceeds {work_cap} candidate visits")

    def vertex_ok(alias: str, vid: int) -> bool:
        v = p.vertices[alias]
        if g.vtype[vid] not in v.constraint.members:
            return False
        if v.predicate is not None:
            env = ex.Env({**cells, alias: vid}, kinds, g, params)
            if ex.eval_expr(v.predicate, env) is not True:
                return False
        return True

    def edge_pred_ok(e, eid: int) -> bool:
        if e.predicate is None:
            return True
        env = ex.Env({**cells, e.alias: eid}, kinds, g, params)
        return ex.eval_expr(e.predicate, env) is True

    def candidates(alias: str, anchors):
        """(vid, first-edge eid or None) pairs for the next vertex."""
        if not anchors:
            for vid in g.vertices_of_types(p.vertices[alias].constraint.members):
                yield vid, None
            return
        e = anchors[0]
        other_vid = cells[e.other(alias)]
        if e.src == e.dst:  # self loop used as anchor: alias already bound
            raise ExecutionError("self loop cannot anchor a new vertex")
        if e.both:
            eids = set(g.edge_ids(other_vid, "OUT", e.constraint.members))
            eids |= set(g.edge_ids(other_vid, "IN", e.constraint.members))
            for eid in sorted(eids):
                yield (g.edst[eid] if g.esrc[eid] == other_vid else g.esrc[eid]), eid
        elif e.src == alias:
            for eid in g.edge_ids(other_vid, "IN", e.constraint.members):
                yield g.esrc[eid], eid
        else:
            for eid in g.edge_ids(other_vid, "OUT", e.constraint.members):
                yield g.edst[eid], eid

    def emit():
        nonlocal count
        if edge_distinct:
            eids = [cells[a] for a in e_cols]
            if len(set(eids)) != len(eids):
                return
        count += 1
        if count_cap is not None and count > count_cap:
            raise _CountCapped
        if materialize:
            rows.append(tuple(cells[a] for a in v_cols) + tuple(cells[a] for a in e_cols))

    def step(k: int):
        if k == len(steps):
            emit()
            return
        alias, anchors, loops = steps[k]
        for vid, first_eid in candidates(alias, anchors):
            spend()
            if not vertex_ok(alias, vid):
                continue
            cells[alias] = vid
            if first_eid is not None and not edge_pred_ok(anchors[0], first_eid):
                del cells[alias]
                continue
            if first_eid is not None:
                cells[anchors[0].alias] = first_eid
            remaining = anchors[1:] + loops
            option_lists = []
            ok = True
            for e in remaining:
                if e.src == e.dst:
                    eids = _edge_matches(g, e, vid, vid)
                else:
                    svid = vid if e.src == alias else cells[e.src]
                    dvid = vid if e.dst == alias else cells[e.dst]
                    eids = _edge_matches(g, e, svid, dvid)
                eids = [eid for eid in eids if edge_pred_ok(e, eid)]
                if not eids:
                    ok = False
                    break
                option_lists.append(eids)
            if ok:
                for combo in itertools.product(*option_lists):
                    for e, eid in zip(remaining, combo):
                        cells[e.alias] = eid
                    step(k + 1)
                for e in remaining:
                    cells.pop(e.alias, None)
            if first_eid is not None:
                cells.pop(anchors[0].alias, None)
            del cells[alias]

    if p.vertices:
        try:
            step(0)
        except _CountCapped:
            pass
    if not materialize:
        return count
    columns = tuple((a, "vertex") for a in v_cols) + tuple((a, "edge") for a in e_cols)
    return BindingTable(columns, rows)


def brute_force_count(
    p: Pattern, g: PropertyGraph, count_cap: int | None = None, work_cap: int | None = None
) -> int:
    """Homomorphism count via the same traversal, without materializing."""
    return brute_force_match(
        p, g, materialize=False, count_cap=count_cap, work_cap=work_cap
    )


# ---------------------------------------------------------------------------
# Physical execution
# ---------------------------------------------------------------------------


_KIND_RANK = {"numeric": 0, "string": 1, "boolean": 2}


def order_token(value):
    """Total-order token: numeric < string < boolean < graph values; null last."""
    if value is None:
        return (4, 0)
    if isinstance(value, bool):
        return (2, value)
    if isinstance(value, (int, float)):
        return (0, value)
    if isinstance(value, str):
        return (1, value)
    return (3, str(type(value).__name__), tuple(value) if isinstance(value, tuple) else value)


class _Desc:
    __slots__ = ("t",)

    def __init__(self, t):
        self.t = t

    def __lt__(self, other):
        return other.t < self.t

    def __eq__(self, other):
        return self.t == other.t


def _exec_scan(op: PScan, g, params):
    rows = []
    for vid in g.vertices_of_types(op.types):
        if op.predicate is not None:
            env = ex.Env({op.alias: vid}, {op.alias: "vertex"}, g, params)
            if ex.eval_expr(op.predicate, env) is not True:
                continue
        rows.append((vid,))
    return BindingTable(((op.alias, "vertex"),), rows)


def _step_candidates(g, step: EdgeStep, anchor_vid: int):
    """(eid, candidate vid) pairs for one expansion edge."""
    if step.direction == "OUT":
        return [(eid, g.edst[eid]) for eid in g.edge_ids(anchor_vid, "OUT", step.triplets)]
    if step.direction == "IN":
        return [(eid, g.esrc[eid]) for eid in g.edge_ids(anchor_vid, "IN", step.triplets)]
    eids = set(g.edge_ids(anchor_vid, "OUT", step.triplets))
    eids |= set(g.edge_ids(anchor_vid, "IN", step.triplets))
    return [
        (eid, g.edst[eid] if g.esrc[eid] == anchor_vid else g.esrc[eid])
        for eid in sorted(eids)
    ]


def _exec_expand(op: PExpand, table: BindingTable, g, params):
    kinds = table.kinds() | {op.alias: "vertex"}
    for e in op.edges:
        kinds[e.edge_alias] = "edge"
    names = table.names
    anchor_idx = [table.index(e.anchor) for e in op.edges]
    new_cols = list(table.columns) + [(op.alias, "vertex")]
    for e in op.edges:
        if e.bind:
            new_cols.append((e.edge_alias, "edge"))
    types = op.types
    out_rows = []

    def vertex_ok(row, vid):
        if g.vtype[vid] not in types:
            return False
        if op.predicate is None:
            return True
        env = ex.Env(dict(zip(names, row)) | {op.alias: vid}, kinds, g, params)
        return ex.eval_expr(op.predicate, env) is True

    def edge_ok(row, step, eid):
        if step.predicate is None:
            return True
        env = ex.Env(dict(zip(names, row)) | {step.edge_alias: eid}, kinds, g, params)
        return ex.eval_expr(step.predicate, env) is True

    for row in table.rows:
        first = op.edges[0]
        cands: dict[int, list[list[int]]] = {}
        for eid, vid in _step_candidates(g, first, row[anchor_idx[0]]):
            cands.setdefault(vid, [[]])[0].append(eid)
        # intersect with each additional edge's adjacency (worst-case-optimal step)
        for i, step_ in enumerate(op.edges[1:], start=1):
            nxt: dict[int, list[int]] = {}
            for eid, vid in _step_candidates(g, step_, row[anchor_idx[i]]):
                if vid in cands:
                    nxt.setdefault(vid, []).append(eid)
            cands = {vid: cands[vid] + [eids] for vid, eids in nxt.items()}
        for vid in sorted(cands):
            if not vertex_ok(row, vid):
                continue
            lists = []
            ok = True
            for step_, eids in zip(op.edges, cands[vid]):
                eids = [eid for eid in eids if edge_ok(row, step_, eid)]
                if not eids:
                    ok = False
                    break
                lists.append(eids)
            if not ok:
                continue
            for combo in itertools.product(*lists):
                new_row = row + (vid,)
                for step_, eid in zip(op.edges, combo):
                    if step_.bind:
                        new_row += (eid,)
                out_rows.append(new_row)
    return BindingTable(tuple(new_cols), out_rows)


def _exec_join(op: PJoin, left: BindingTable, right: BindingTable):
    lidx = [left.index(k) for k in op.keys]
    ridx = [right.index(k) for k in op.keys]
    right_only = [i for i, (n, _) in enumerate(right.columns) if n not in set(left.names)]
    cols = left.columns + tuple(right.columns[i] for i in right_only)
    table: dict[tuple, list[tuple]] = {}
    for row in left.rows:
        table.setdefault(tuple(row[i] for i in lidx), []).append(row)
    out = []
    for rrow in right.rows:
        key = tuple(rrow[i] for i in ridx)
        for lrow in table.get(key, ()):
            out.append(lrow + tuple(rrow[i] for i in right_only))
    return BindingTable(cols, out)


def _resolve_key(table: BindingTable, expr, row, g, params):
    """ORDER keys may name an output column textually or evaluate over aliases."""
    text = ex.to_text(expr)
    if text in table.names:
        return row[table.index(text)]
    return ex.eval_expr(expr, table.env(row, g, params))


def _exec_order(op: POrder, table: BindingTable, g, params):
    def sort_key(row):
        toks = []
        for expr, direction in op.keys:
            tok = order_token(_resolve_key(table, expr, row, g, params))
            toks.append(_Desc(tok) if direction == "DESC" else tok)
        return tuple(toks)

    if op.limit_hint is not None:
        rows = heapq.nsmallest(op.limit_hint, table.rows, key=sort_key)
    else:
        rows = sorted(table.rows, key=sort_key)
    return BindingTable(table.columns, list(rows))


def _exec_group(op: PGroup, table: BindingTable, g, params):
    groups: dict[tuple, list[int]] = {}
    for row in table.rows:
        env = table.env(row, g, params)
        key = tuple(ex.eval_expr(k, env) for k in op.keys)
        counts = groups.setdefault(key, [0] * len(op.aggregates))
        for i, agg in enumerate(op.aggregates):
            if agg.arg is None:
                counts[i] += 1
            else:
                if ex.eval_expr(agg.arg, env) is not None:
                    counts[i] += 1
    if not op.keys and not groups:
        groups[()] = [0] * len(op.aggregates)
    cols = tuple((n, "primitive") for n in op.key_names + op.agg_names)
    rows = [
        key + tuple(counts)
        for key, counts in sorted(
            groups.items(), key=lambda kv: tuple(order_token(v) for v in kv[0])
        )
    ]
    return BindingTable(cols, rows)


def _exec_project(op: PProject, table: BindingTable, g, params):
    kinds = table.kinds()
    cols = []
    for expr, name in zip(op.exprs, op.names):
        if isinstance(expr, ex.Var) and kinds.get(expr.alias) in ("vertex", "edge", "path"):
            cols.append((name, kinds[expr.alias]))
        elif isinstance(expr, ex.PathRef):
            cols.append((name, "path"))
        else:
            cols.append((name, "primitive"))
    rows = []
    for row in table.rows:
        env = table.env(row, g, params)
        cells = []
        for expr in op.exprs:
            if isinstance(expr, ex.PathRef):
                cells.append(tuple(env.cells[a] for a in expr.elements))
            else:
                cells.append(ex.eval_expr(expr, env))
        rows.append(tuple(cells))
    return BindingTable(tuple(cols), rows)


def _edge_distinct_filter(table: BindingTable) -> BindingTable:
    eidx = [i for i, (_, kind) in enumerate(table.columns) if kind == "edge"]
    if len(eidx) < 2:
        return table
    rows = [
        r for r in table.rows if len({r[i] for i in eidx}) == len(eidx)
    ]
    return BindingTable(table.columns, rows)


def execute(
    plan: PhysicalPlan,
    g: PropertyGraph,
    params: dict | None = None,
    edge_distinct: bool = False,
    counters: list | None = None,
    deadline_seconds: float | None = None,
) -> BindingTable:
    """Run the plan; counters, when given, collect (label, rows_out) per op."""
    import time

    params = params or {}
    deadline = time.monotonic() + deadline_seconds if deadline_seconds else None
    stack: list[BindingTable] = []
    last_pattern_idx = max(
        (i for i, op in enumerate(plan.ops) if isinstance(op, (PScan, PExpand, PJoin))),
        default=-1,
    )
    for i, op in enumerate(plan.ops):
        if isinstance(op, PScan):
            stack.append(_exec_scan(op, g, params))
            label = f"SCAN({op.alias})"
        elif isinstance(op, PExpand):
            stack.append(_exec_expand(op, stack.pop(), g, params))
            label = f"{op.kind}({op.alias})"
        elif isinstance(op, PJoin):
            right = stack.pop()
            left = stack.pop()
            stack.append(_exec_join(op, left, right))
            label = f"JOIN({','.join(op.keys)})"
        elif isinstance(op, PSelect):
            table = stack.pop()
            rows = [
                r
                for r in table.rows
                if ex.eval_expr(op.predicate, table.env(r, g, params)) is True
            ]
            stack.append(BindingTable(table.columns, rows))
            label = "SELECT"
        elif isinstance(op, PProject):
            stack.append(_exec_project(op, stack.pop(), g, params))
            label = "PROJECT"
        elif isinstance(op, PGroup):
            stack.append(_exec_group(op, stack.pop(), g, params))
            label = "GROUP"
        elif isinstance(op, POrder):
            stack.append(_exec_order(op, stack.pop(), g, params))
            label = "ORDER"
        elif isinstance(op, PLimit):
            table = stack.pop()
            stack.append(BindingTable(table.columns, table.rows[: op.n]))
            label = "LIMIT"
        else:
            raise ExecutionError(f"unknown physical operator {op!r}")
        if edge_distinct and i == last_pattern_idx:
            stack.append(_edge_distinct_filter(stack.pop()))
        if counters is not None:
            counters.append((label, len(stack[-1].rows)))
        if deadline is not None and time.monotonic() > deadline:
            raise ExecutionError("wall-clock guard exceeded")
    if len(stack) != 1:
        raise ExecutionError("malformed plan: stack does not reduce to one table")
    return stack[0]


def count_intermediate(plan: PhysicalPlan, g: PropertyGraph, params: dict | None = None):
    """Execute with instrumentation; rows-out per operator plus the total."""
    counters: list = []
    table = execute(plan, g, params, counters=counters)
    total = sum(c for _, c in counters)
    return table, counters, total


# ---------------------------------------------------------------------------
# Reference evaluation (independent of the physical operators)
# ---------------------------------------------------------------------------


def run_reference(
    pattern: Pattern,
    tail_ops,
    g: PropertyGraph,
    params: dict | None = None,
    edge_distinct: bool = False,
) -> BindingTable:
    """Oracle pipeline: brute-force matching plus naive relational steps.

    Deliberately separate from the physical operator implementations so
    optimized plans are checked against an independent route.
    """
    params = params or {}
    table = brute_force_match(pattern, g, params, edge_distinct=edge_distinct)
    for op in tail_ops:
        if isinstance(op, Select):
            table = BindingTable(
                table.columns,
                [
                    r
                    for r in table.rows
                    if ex.eval_expr(op.predicate, table.env(r, g, params)) is True
                ],
            )
        elif isinstance(op, Project):
            cols, rows = [], []
            kinds = table.kinds()
            for expr, name in zip(op.exprs, op.names):
                if isinstance(expr, ex.Var) and kinds.get(expr.alias) in (
                    "vertex",
                    "edge",
                    "path",
                ):
                    cols.append((name, kinds[expr.alias]))
                elif isinstance(expr, ex.PathRef):
                    cols.append((name, "path"))
                else:
                    cols.append((name, "primitive"))
            for r in table.rows:
                env = table.env(r, g, params)
                cells = []
                for expr in op.exprs:
                    if isinstance(expr, ex.PathRef):
                        cells.append(tuple(env.cells[a] for a in expr.elements))
                    else:
                        cells.append(ex.eval_expr(expr, env))
                rows.append(tuple(cells))
            table = BindingTable(tuple(cols), rows)
        elif isinstance(op, Group):
            acc: dict[tuple, list[int]] = {}
            for r in table.rows:
                env = table.env(r, g, params)
                key = tuple(ex.eval_expr(k, env) for k in op.keys)
                slot = acc.setdefault(key, [0] * len(op.aggregates))
                for i, agg in enumerate(op.aggregates):
                    if agg.arg is None or ex.eval_expr(agg.arg, env) is not None:
                        slot[i] += 1
            if not op.keys and not acc:
                acc[()] = [0] * len(op.aggregates)
            names = tuple(ex.to_text(k) for k in op.keys) + tuple(
                ex.to_text(a) for a in op.aggregates
            )
            cols = tuple((n, "primitive") for n in names)
            rows = [k + tuple(v) for k, v in acc.items()]
            rows.sort(key=lambda r: tuple(order_token(v) for v in r[: len(op.keys)]))
            table = BindingTable(cols, rows)
        elif isinstance(op, Order):
            for expr, direction in reversed(op.keys):
                table.rows.sort(
                    key=lambda r: order_token(_resolve_key(table, expr, r, g, params)),
                    reverse=direction == "DESC",
                )
        elif isinstance(op, Limit):
            table = BindingTable(table.columns, table.rows[: op.n])
        else:
            raise ExecutionError(f"reference runner cannot handle {op!r}")
    return table


# ---------------------------------------------------------------------------
# Output rendering
# ---------------------------------------------------------------------------


def _cell_to_value(cell, kind, g):
    if kind == "vertex":
        return g.vertex_value(cell)
    if kind == "edge":
        return g.edge_value(cell)
    if kind == "path":
        elems = tuple(
            g.vertex_value(c) if i % 2 == 0 else g.edge_value(c)
            for i, c in enumerate(cell)
        )
        from .ir import PathVal

        return PathVal(elements=elems, length=len(cell) // 2)
    return cell


def render_cell(cell, kind, g) -> str:
    value = _cell_to_value(cell, kind, g)
    if kind in ("vertex", "edge", "path"):
        return value.render()
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    return str(value)


def table_to_csv(table: BindingTable, g: PropertyGraph) -> str:
    import csv as _csv
    import io

    buf = io.StringIO()
    writer = _csv.writer(buf, lineterminator="\n")
    writer.writerow(table.names)
    for row in table.rows:
        writer.writerow(
            [render_cell(c, k, g) for c, (_, k) in zip(row, table.columns)]
        )
    return buf.getvalue()


def table_to_json_rows(table: BindingTable, g: PropertyGraph) -> list[dict]:
    out = []
    for row in table.rows:
        obj = {}
        for cell, (name, kind) in zip(row, table.columns):
            if kind in ("vertex", "edge", "path"):
                obj[name] = render_cell(cell, kind, g)
            else:
                obj[name] = cell
        out.append(obj)
    return out
