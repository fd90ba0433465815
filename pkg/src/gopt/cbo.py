"""Cost-based pattern optimizer and physical plan assembly.

Implements the cost model (join cost is the sum of input frequencies,
expand cost is the source frequency times the summed expand ratios), a
greedy construction for the initial bound, and the memoized top-down
branch-and-bound search over expand/join decompositions. Every
frequency lookup goes through the statistics catalogue so estimates are
shared and deterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

from . import expr as ex
from .errors import GoptError
from .glogue import (
    ExpandCand,
    GLogue,
    JoinCand,
    canonicalize,
    expand_candidates,
    extension_sigmas,
    get_candidates,
    get_freq,
    join_candidates,
)
from .graph import TypeCounts
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


@dataclass(frozen=True)
class CostWeights:
    alpha_expand: float = 1.0
    alpha_join: float = 1.0


def cost_join(f1: float, f2: float, alpha: float = 1.0) -> float:
    """Binary join walks both input mapping sets once."""
    return alpha * (f1 + f2)


def cost_expand(f_s: float, sigmas, alpha: float = 1.0) -> float:
    """Expansion walks the source mappings once per appended edge ratio."""
    return alpha * f_s * sum(sigmas)


# -- plan trees ---------------------------------------------------------


@dataclass(frozen=True)
class ScanStep:
    alias: str
    est_freq: float
    est_cost: float


@dataclass(frozen=True)
class ExpandStep:
    child: object
    new_vertex: str
    edge_aliases: tuple[str, ...]
    sigmas: tuple[float, ...]
    est_freq: float
    est_cost: float


@dataclass(frozen=True)
class JoinStep:
    left: object
    right: object
    keys: tuple[str, ...]
    est_freq: float
    est_cost: float


@dataclass(frozen=True)
class PlanEntry:
    tree: object
    cost: float
    freq: float


class _Ctx:
    """Per-search caches over one pattern's sub-patterns."""

    def __init__(self, pattern: Pattern, gl: GLogue, low_order: TypeCounts,
                 weights: CostWeights):
        self.pattern = pattern
        self.gl = gl
        self.low_order = low_order
        self.weights = weights
        self._freqs: dict = {}
        self._codes: dict = {}

    def freq(self, sub: Pattern) -> float:
        key = sub.key()
        if key not in self._freqs:
            self._freqs[key] = get_freq(self.gl, sub, self.low_order)
        return self._freqs[key]

    def code(self, sub: Pattern) -> bytes:
        key = sub.key()
        if key not in self._codes:
            self._codes[key] = canonicalize(sub)
        return self._codes[key]

    def vertex_freq(self, alias: str) -> float:
        return float(
            sum(
                self.low_order.vertices.get(t, 0)
                for t in self.pattern.vertices[alias].constraint.members
            )
        )

    def single_vertex(self, alias: str) -> Pattern:
        return self.pattern.restrict({alias}, set())

    def single_edge(self, edge_alias: str) -> Pattern:
        e = self.pattern.edges[edge_alias]
        return self.pattern.restrict({e.src, e.dst}, {edge_alias})


def _seed_entries(ctx: _Ctx) -> dict:
    """Size-1 and single-edge sub-patterns, costed by their type frequencies."""
    planmap: dict = {}
    for alias in sorted(ctx.pattern.vertices):
        sub = ctx.single_vertex(alias)
        f = ctx.freq(sub)
        planmap[sub.key()] = PlanEntry(
            tree=ScanStep(alias=alias, est_freq=f, est_cost=f), cost=f, freq=f
        )
    for e_alias in sorted(ctx.pattern.edges):
        e = ctx.pattern.edges[e_alias]
        if e.src == e.dst:
            continue  # single-vertex loop patterns are not seeded
        sub = ctx.single_edge(e_alias)
        f = ctx.freq(sub)
        scan_alias = min((e.src, e.dst), key=lambda a: (ctx.vertex_freq(a), a))
        other = e.dst if scan_alias == e.src else e.src
        sigmas = extension_sigmas(sub, other, (e_alias,), ctx.low_order)
        tree = ExpandStep(
            child=ScanStep(alias=scan_alias, est_freq=ctx.vertex_freq(scan_alias), est_cost=0.0),
            new_vertex=other,
            edge_aliases=(e_alias,),
            sigmas=sigmas,
            est_freq=f,
            est_cost=f,
        )
        planmap[sub.key()] = PlanEntry(tree=tree, cost=f, freq=f)
    return planmap


def _expand_through(ctx: _Ctx, sub: Pattern, cand: ExpandCand, entry: PlanEntry):
    sigmas = extension_sigmas(sub, cand.new_vertex, cand.edge_aliases, ctx.low_order)
    op_cost = cost_expand(entry.freq, sigmas, ctx.weights.alpha_expand)
    f = ctx.freq(sub)
    cost = entry.cost + f + op_cost
    tree = ExpandStep(
        child=entry.tree,
        new_vertex=cand.new_vertex,
        edge_aliases=cand.edge_aliases,
        sigmas=sigmas,
        est_freq=f,
        est_cost=f + op_cost,
    )
    return tree, cost


def _join_keys(sub: Pattern, cand: JoinCand) -> tuple[str, ...]:
    common_v = set(cand.left.vertices) & set(cand.right.vertices)
    common_e = {
        a
        for a in set(cand.left.edges) & set(cand.right.edges)
        if sub.edges[a].bind
    }
    return tuple(sorted(common_v) + sorted(common_e))


def _join_through(ctx: _Ctx, sub: Pattern, cand: JoinCand, left: PlanEntry, right: PlanEntry):
    op_cost = cost_join(left.freq, right.freq, ctx.weights.alpha_join)
    f = ctx.freq(sub)
    cost = left.cost + right.cost + f + op_cost
    tree = JoinStep(
        left=left.tree,
        right=right.tree,
        keys=_join_keys(sub, cand),
        est_freq=f,
        est_cost=f + op_cost,
    )
    return tree, cost


def lower_bound(ctx: _Ctx, planmap: dict, cand) -> float:
    """Admissible bound on any completion through this candidate."""
    if isinstance(cand, ExpandCand):
        src = cand.source
        f_src = ctx.freq(src)
        sigmas = extension_sigmas(
            ctx.pattern.restrict(
                set(src.vertices) | {cand.new_vertex},
                set(src.edges) | set(cand.edge_aliases),
            ),
            cand.new_vertex,
            cand.edge_aliases,
            ctx.low_order,
        )
        bound = f_src + cost_expand(f_src, sigmas, ctx.weights.alpha_expand)
        entry = planmap.get(src.key())
        if entry is not None:
            bound = max(bound, entry.cost)
        return bound
    f1, f2 = ctx.freq(cand.left), ctx.freq(cand.right)
    bound = 0.0
    for side, f in ((cand.left, f1), (cand.right, f2)):
        entry = planmap.get(side.key())
        bound += entry.cost if entry is not None else f
    return bound + cost_join(f1, f2, ctx.weights.alpha_join)


def _ordered_candidates(ctx: _Ctx, sub: Pattern):
    """Expand before Join, then by canonical code of the source pattern(s)."""
    expands = sorted(
        expand_candidates(sub), key=lambda c: (ctx.code(c.source), c.new_vertex)
    )
    joins = sorted(
        join_candidates(sub), key=lambda c: (ctx.code(c.left), ctx.code(c.right))
    )
    return expands + joins


def optimize_pattern(
    p: Pattern,
    gl: GLogue,
    low_order: TypeCounts,
    weights: CostWeights | None = None,
    pruning: bool = True,
):
    """Top-down search per the graph optimizer algorithm; returns (tree, cost).

    The greedy solution seeds the incumbent bound; sub-pattern optima are
    memoized in a plan map; branches whose lower bound reaches the
    incumbent are pruned. Disabling pruning never changes the cost.
    """
    weights = weights or CostWeights()
    ctx = _Ctx(p, gl, low_order, weights)
    greedy_tree, greedy_cost = greedy_initial(p, gl, low_order, weights)
    planmap = _seed_entries(ctx)
    cost_star = greedy_cost
    visited: set = set()

    def search(sub: Pattern):
        key = sub.key()
        if key in planmap or key in visited:
            return
        visited.add(key)
        best: PlanEntry | None = None
        for cand in _ordered_candidates(ctx, sub):
            if pruning and lower_bound(ctx, planmap, cand) >= cost_star:
                continue
            if isinstance(cand, ExpandCand):
                search(cand.source)
                entry = planmap.get(cand.source.key())
                if entry is None:
                    continue
                tree, cost = _expand_through(ctx, sub, cand, entry)
            else:
                search(cand.left)
                search(cand.right)
                left = planmap.get(cand.left.key())
                right = planmap.get(cand.right.key())
                if left is None or right is None:
                    continue
                tree, cost = _join_through(ctx, sub, cand, left, right)
            if best is None or cost < best.cost:
                best = PlanEntry(tree=tree, cost=cost, freq=ctx.freq(sub))
        if best is not None:
            planmap[key] = best

    search(p)
    entry = planmap.get(p.key())
    if entry is not None and entry.cost <= greedy_cost:
        return entry.tree, entry.cost
    return greedy_tree, greedy_cost


def greedy_initial(
    p: Pattern,
    gl: GLogue,
    low_order: TypeCounts,
    weights: CostWeights | None = None,
):
    """Cheapest-step construction from the rarest vertex; upper bounds the optimum."""
    weights = weights or CostWeights()
    ctx = _Ctx(p, gl, low_order, weights)
    start = min(sorted(p.vertices), key=lambda a: (ctx.vertex_freq(a), a))
    cur_v = {start}
    cur_e: set = set()
    f_start = ctx.vertex_freq(start)
    tree: object = ScanStep(alias=start, est_freq=f_start, est_cost=f_start)
    total = f_start
    cur_freq = f_start
    while cur_e != set(p.edges) or cur_v != set(p.vertices):
        options = []
        for v in sorted(set(p.vertices) - cur_v):
            edges = tuple(
                sorted(
                    e.alias
                    for e in p.incident(v)
                    if e.other(v) in cur_v or e.src == e.dst
                )
            )
            if not edges:
                continue
            newp = p.restrict(cur_v | {v}, cur_e | set(edges))
            sigmas = extension_sigmas(newp, v, edges, low_order)
            f_new = ctx.freq(newp)
            delta = f_new + cost_expand(cur_freq, sigmas, weights.alpha_expand)
            options.append(
                (delta, 0, v, ("expand", v, edges, sigmas, f_new, newp))
            )
        for e_alias in sorted(set(p.edges) - cur_e):
            e = p.edges[e_alias]
            if e.src not in cur_v and e.dst not in cur_v:
                continue
            side = ctx.single_edge(e_alias)
            f_side = ctx.freq(side)
            newp = p.restrict(cur_v | {e.src, e.dst}, cur_e | {e_alias})
            f_new = ctx.freq(newp)
            delta = f_side + f_new + cost_join(cur_freq, f_side, weights.alpha_join)
            options.append((delta, 1, e_alias, ("join", e_alias, side, f_side, f_new, newp)))
        if not options:
            raise GoptError("greedy construction cannot extend the pattern")
        options.sort(key=lambda o: (o[0], o[1], o[2]))
        _, _, _, action = options[0]
        if action[0] == "expand":
            _, v, edges, sigmas, f_new, newp = action
            step_cost = f_new + cost_expand(cur_freq, sigmas, weights.alpha_expand)
            tree = ExpandStep(
                child=tree, new_vertex=v, edge_aliases=edges, sigmas=sigmas,
                est_freq=f_new, est_cost=step_cost,
            )
            total += step_cost
            cur_v |= {v}
            cur_e |= set(edges)
        else:
            _, e_alias, side, f_side, f_new, newp = action
            e = p.edges[e_alias]
            scan_alias = min((e.src, e.dst), key=lambda a: (ctx.vertex_freq(a), a))
            other = e.dst if scan_alias == e.src else e.src
            side_tree = ExpandStep(
                child=ScanStep(alias=scan_alias, est_freq=ctx.vertex_freq(scan_alias),
                               est_cost=0.0),
                new_vertex=other,
                edge_aliases=(e_alias,),
                sigmas=extension_sigmas(side, other, (e_alias,), low_order),
                est_freq=f_side,
                est_cost=f_side,
            )
            shared_v = {e.src, e.dst} & cur_v
            keys = tuple(sorted(shared_v))
            op_cost = cost_join(cur_freq, f_side, weights.alpha_join)
            tree = JoinStep(
                left=tree, right=side_tree, keys=keys,
                est_freq=f_new, est_cost=f_new + op_cost,
            )
            total += f_side + f_new + op_cost
            cur_v |= {e.src, e.dst}
            cur_e |= {e_alias}
        cur_freq = ctx.freq(p.restrict(cur_v, cur_e))
    return tree, total


def tree_from_order(
    p: Pattern,
    order: list[str],
    gl: GLogue,
    low_order: TypeCounts,
    weights: CostWeights | None = None,
):
    """Expansion-only plan following a fixed vertex order (forced plans)."""
    weights = weights or CostWeights()
    ctx = _Ctx(p, gl, low_order, weights)
    start = order[0]
    cur_v = {start}
    cur_e: set = set()
    f = ctx.vertex_freq(start)
    tree: object = ScanStep(alias=start, est_freq=f, est_cost=f)
    total = f
    cur_freq = f
    for v in order[1:]:
        edges = tuple(
            sorted(e.alias for e in p.incident(v) if e.other(v) in cur_v or e.src == e.dst)
        )
        if not edges:
            raise GoptError(f"order visits {v!r} before any of its neighbors")
        newp = p.restrict(cur_v | {v}, cur_e | set(edges))
        sigmas = extension_sigmas(newp, v, edges, low_order)
        f_new = ctx.freq(newp)
        step_cost = f_new + cost_expand(cur_freq, sigmas, weights.alpha_expand)
        tree = ExpandStep(
            child=tree, new_vertex=v, edge_aliases=edges, sigmas=sigmas,
            est_freq=f_new, est_cost=step_cost,
        )
        total += step_cost
        cur_v |= {v}
        cur_e |= set(edges)
        cur_freq = f_new
    if cur_e != set(p.edges):
        raise GoptError("expansion-only order does not cover every edge")
    return tree, total


def random_plan(p, gl, low_order, rng, weights: CostWeights | None = None):
    """Uniform random valid plan: random candidate at every decomposition."""
    weights = weights or CostWeights()
    ctx = _Ctx(p, gl, low_order, weights)

    def rp(sub: Pattern):
        f = ctx.freq(sub)
        if len(sub.vertices) == 1 and not sub.edges:
            alias = next(iter(sub.vertices))
            return ScanStep(alias=alias, est_freq=f, est_cost=f), f
        if len(sub.vertices) == 2 and len(sub.edges) == 1:
            e = next(iter(sub.edges.values()))
            scan_alias = rng.choice(sorted((e.src, e.dst)))
            other = e.dst if scan_alias == e.src else e.src
            tree = ExpandStep(
                child=ScanStep(alias=scan_alias, est_freq=ctx.vertex_freq(scan_alias),
                               est_cost=0.0),
                new_vertex=other,
                edge_aliases=(e.alias,),
                sigmas=extension_sigmas(sub, other, (e.alias,), low_order),
                est_freq=f,
                est_cost=f,
            )
            return tree, f
        cands = get_candidates(gl, sub)
        cand = cands[rng.randrange(len(cands))]
        if isinstance(cand, ExpandCand):
            child, child_cost = rp(cand.source)
            entry = PlanEntry(tree=child, cost=child_cost, freq=ctx.freq(cand.source))
            tree, cost = _expand_through(ctx, sub, cand, entry)
            return tree, cost
        lt, lc = rp(cand.left)
        rt, rc = rp(cand.right)
        left = PlanEntry(tree=lt, cost=lc, freq=ctx.freq(cand.left))
        right = PlanEntry(tree=rt, cost=rc, freq=ctx.freq(cand.right))
        tree, cost = _join_through(ctx, sub, cand, left, right)
        return tree, cost

    return rp(p)


def enumerate_plans(p, gl, low_order, weights: CostWeights | None = None, cap: int = 2000):
    """All plan trees for small patterns; used by bench --plans all."""
    weights = weights or CostWeights()
    ctx = _Ctx(p, gl, low_order, weights)
    memo: dict = {}

    def plans(sub: Pattern):
        key = sub.key()
        if key in memo:
            return memo[key]
        out = []
        f = ctx.freq(sub)
        if len(sub.vertices) == 1 and not sub.edges:
            alias = next(iter(sub.vertices))
            out = [(ScanStep(alias=alias, est_freq=f, est_cost=f), f)]
        elif len(sub.vertices) == 2 and len(sub.edges) == 1:
            e = next(iter(sub.edges.values()))
            for scan_alias in sorted((e.src, e.dst)):
                other = e.dst if scan_alias == e.src else e.src
                tree = ExpandStep(
                    child=ScanStep(alias=scan_alias, est_freq=ctx.vertex_freq(scan_alias),
                                   est_cost=0.0),
                    new_vertex=other,
                    edge_aliases=(e.alias,),
                    sigmas=extension_sigmas(sub, other, (e.alias,), low_order),
                    est_freq=f,
                    est_cost=f,
                )
                out.append((tree, f))
        else:
            for cand in _ordered_candidates(ctx, sub):
                if isinstance(cand, ExpandCand):
                    for child, child_cost in plans(cand.source):
                        entry = PlanEntry(child, child_cost, ctx.freq(cand.source))
                        out.append(_expand_through(ctx, sub, cand, entry))
                        if len(out) > cap:
                            raise GoptError(f"plan enumeration exceeds cap {cap}")
                else:
                    for lt, lc in plans(cand.left):
                        for rt, rc in plans(cand.right):
                            left = PlanEntry(lt, lc, ctx.freq(cand.left))
                            right = PlanEntry(rt, rc, ctx.freq(cand.right))
                            out.append(_join_through(ctx, sub, cand, left, right))
                            if len(out) > cap:
                                raise GoptError(f"plan enumeration exceeds cap {cap}")
        memo[key] = out
        return out

    return plans(p)


# -- physical assembly --------------------------------------------------


def _edge_step(p: Pattern, new_vertex: str, e_alias: str) -> EdgeStep:
    e = p.edges[e_alias]
    anchor = e.other(new_vertex)
    if e.both:
        direction = "BOTH"
    elif e.src == anchor:
        direction = "OUT"
    else:
        direction = "IN"
    return EdgeStep(
        edge_alias=e_alias,
        anchor=anchor,
        triplets=frozenset(e.constraint.members),
        direction=direction,
        predicate=e.predicate,
        bind=e.bind,
    )


def tree_to_ops(tree, p: Pattern) -> list:
    """Linearize the plan tree into stack-ordered physical pattern ops."""
    ops: list = []

    def walk(node):
        if isinstance(node, ScanStep):
            v = p.vertices[node.alias]
            ops.append(
                PScan(
                    alias=node.alias,
                    types=frozenset(v.constraint.members),
                    predicate=v.predicate,
                    columns=v.columns,
                    est_freq=node.est_freq,
                    est_cost=node.est_cost,
                )
            )
        elif isinstance(node, ExpandStep):
            walk(node.child)
            v = p.vertices[node.new_vertex]
            ops.append(
                PExpand(
                    alias=node.new_vertex,
                    types=frozenset(v.constraint.members),
                    edges=tuple(_edge_step(p, node.new_vertex, a) for a in node.edge_aliases),
                    predicate=v.predicate,
                    columns=v.columns,
                    sigmas=node.sigmas,
                    est_freq=node.est_freq,
                    est_cost=node.est_cost,
                )
            )
        elif isinstance(node, JoinStep):
            walk(node.left)
            walk(node.right)
            ops.append(
                PJoin(keys=node.keys, est_freq=node.est_freq, est_cost=node.est_cost)
            )
        else:
            raise GoptError(f"unknown plan tree node {node!r}")

    walk(tree)
    return ops


_TAIL_PRECEDENCE = {Select: 0, Project: 1, Group: 2, Order: 3, Limit: 4}


def _resolve_exprs(expr, path_groups: dict):
    if isinstance(expr, ex.Var) and expr.alias in path_groups:
        return ex.PathRef(alias=expr.alias, elements=path_groups[expr.alias])
    if isinstance(expr, ex.Cmp):
        return ex.Cmp(
            op=expr.op,
            left=_resolve_exprs(expr.left, path_groups),
            right=_resolve_exprs(expr.right, path_groups),
        )
    if isinstance(expr, ex.And):
        return ex.And(items=tuple(_resolve_exprs(i, path_groups) for i in expr.items))
    if isinstance(expr, ex.Or):
        return ex.Or(items=tuple(_resolve_exprs(i, path_groups) for i in expr.items))
    if isinstance(expr, ex.Not):
        return ex.Not(item=_resolve_exprs(expr.item, path_groups))
    if isinstance(expr, ex.Count) and expr.arg is not None:
        return ex.Count(arg=_resolve_exprs(expr.arg, path_groups))
    return expr


def finalize_plan(
    p: Pattern,
    tree,
    tail_ops,
    total_cost: float,
    meta: dict | None = None,
) -> PhysicalPlan:
    """Append the relational tail in dependency order onto the pattern plan."""
    ops = tree_to_ops(tree, p)
    ordered = sorted(tail_ops, key=lambda op: _TAIL_PRECEDENCE[type(op)])
    pg = p.path_groups
    for op in ordered:
        if isinstance(op, Select):
            ops.append(PSelect(predicate=_resolve_exprs(op.predicate, pg)))
        elif isinstance(op, Project):
            ops.append(
                PProject(
                    exprs=tuple(_resolve_exprs(e, pg) for e in op.exprs),
                    names=op.names,
                )
            )
        elif isinstance(op, Group):
            ops.append(
                PGroup(
                    keys=tuple(_resolve_exprs(k, pg) for k in op.keys),
                    aggregates=tuple(_resolve_exprs(a, pg) for a in op.aggregates),
                    key_names=tuple(ex.to_text(k) for k in op.keys),
                    agg_names=tuple(ex.to_text(a) for a in op.aggregates),
                )
            )
        elif isinstance(op, Order):
            ops.append(
                POrder(
                    keys=tuple((_resolve_exprs(e, pg), d) for e, d in op.keys),
                    limit_hint=op.limit_hint,
                )
            )
        elif isinstance(op, Limit):
            ops.append(PLimit(n=op.n))
        else:
            raise GoptError(f"cannot finalize operator {op!r}")
    meta_items = tuple(sorted((meta or {}).items()))
    return PhysicalPlan(ops=tuple(ops), total_cost=total_cost, meta=meta_items)


# -- path plan helpers (s-t hop queries) ---------------------------------


def path_chain(p: Pattern) -> list[str] | None:
    """Vertex order along a pattern that is a simple path, else None."""
    degree = {a: 0 for a in p.vertices}
    for e in p.edges.values():
        degree[e.src] += 1
        degree[e.dst] += 1
    ends = sorted(a for a, d in degree.items() if d == 1)
    if len(ends) != 2 or any(d > 2 for d in degree.values()):
        return None
    if len(p.edges) != len(p.vertices) - 1:
        return None
    if len(p.path_groups) == 1:
        group = next(iter(p.path_groups.values()))
        chain = list(group[0::2])
        if sorted(chain) == sorted(p.vertices):
            return chain
    chain = [ends[0]]
    used: set = set()
    while len(chain) < len(p.vertices):
        prev = chain[-1]
        nxt = [e for e in p.incident(prev) if e.alias not in used]
        if len(nxt) != 1:
            return None
        used.add(nxt[0].alias)
        chain.append(nxt[0].other(prev))
    return chain


def _topmost_join(tree):
    if isinstance(tree, JoinStep):
        return tree
    if isinstance(tree, ExpandStep):
        return _topmost_join(tree.child)
    return None


def join_vertex_position(p: Pattern, tree) -> tuple[int, int] | None:
    """(left hops, right hops) of the topmost join on a path pattern.

    Expansion-only plans report (k, 0) or (0, k) by their scan endpoint.
    """
    chain = path_chain(p)
    if chain is None:
        return None
    pos = {a: i for i, a in enumerate(chain)}
    k = len(p.edges)
    join = _topmost_join(tree)
    if join is not None:
        vertex_keys = sorted(pos[a] for a in join.keys if a in pos)
        if not vertex_keys:
            return None
        return (vertex_keys[0], k - vertex_keys[-1])
    node = tree
    while isinstance(node, ExpandStep):
        node = node.child
    if isinstance(node, ScanStep) and node.alias in pos:
        i = pos[node.alias]
        return (k, 0) if i == 0 else (0, k)
    return None
