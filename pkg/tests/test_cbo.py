"""Cost-based optimizer: cost model, greedy bound, search optimality, pruning."""

import random

import pytest

from _oracles import min_plan_cost
from gopt.cbo import (
    CostWeights,
    ExpandStep,
    JoinStep,
    ScanStep,
    cost_expand,
    cost_join,
    finalize_plan,
    greedy_initial,
    join_vertex_position,
    optimize_pattern,
    random_plan,
    tree_from_order,
)
from gopt.datagen import random_graph, random_pattern_valid, random_schema
from gopt.glogue import build, get_freq
from gopt.graph import type_counts
from gopt.ir import Pattern, PatternEdge, PatternVertex, TypeConstraint
from gopt.typecheck import INVALID, infer_and_validate

TC = TypeConstraint
K = ("Person", "Knows", "Person")
P = ("Person", "Purchases", "Product")
L = ("Person", "LocatedIn", "Place")
R = ("Product", "ProducedIn", "Place")


def mk_pattern(vertices, edges):
    p = Pattern()
    for alias, members in vertices:
        p.vertices[alias] = PatternVertex(alias, TC.union_of(members, "V"))
    for alias, src, dst, members in edges:
        p.edges[alias] = PatternEdge(alias, src, dst, TC.union_of(members, "E"))
    return p


def fig_triangle():
    return mk_pattern(
        [("v1", {"Person"}), ("v2", {"Person", "Product"}), ("v3", {"Place"})],
        [
            ("e1", "v1", "v2", {K, P}),
            ("e2", "v2", "v3", {L, R}),
            ("e3", "v1", "v3", {L}),
        ],
    )


def test_cost_formulas():
    assert cost_join(70, 30) == 100
    assert cost_join(0, 5) == 5
    assert cost_expand(70, [1.0, 0.2]) == pytest.approx(84.0)
    assert cost_expand(70, []) == 0
    assert cost_expand(0, [2.0]) == 0
    assert cost_join(70, 30, alpha=2.0) == 200
    assert cost_expand(10, [1.0], alpha=0.5) == 5.0


def test_single_vertex_base_case(marketplace_stats):
    gl, lo = marketplace_stats
    p = mk_pattern([("a", {"Person"})], [])
    tree, cost = optimize_pattern(p, gl, lo)
    assert isinstance(tree, ScanStep) and cost == 10.0


def test_triangle_optimum_matches_enumerator(marketplace_stats):
    gl, lo = marketplace_stats
    tri = fig_triangle()
    tree, cost = optimize_pattern(tri, gl, lo)
    # frozen from the independent plan enumerator on the fixed fixture
    assert cost == pytest.approx(96.0)
    assert cost == pytest.approx(min_plan_cost(tri, gl, lo))


def test_greedy_dominates_optimum(marketplace_stats):
    gl, lo = marketplace_stats
    tri = fig_triangle()
    _, greedy_cost = greedy_initial(tri, gl, lo)
    _, best = optimize_pattern(tri, gl, lo)
    assert greedy_cost >= best


def test_greedy_single_edge_shape(marketplace_stats):
    gl, lo = marketplace_stats
    p = mk_pattern([("a", {"Person"}), ("b", {"Place"})], [("e", "a", "b", {L})])
    tree, cost = greedy_initial(p, gl, lo)
    assert isinstance(tree, ExpandStep) and isinstance(tree.child, ScanStep)
    assert tree.child.alias == "b"  # rarer endpoint first


def test_greedy_clique_covers_each_edge_once(marketplace_stats):
    gl, lo = marketplace_stats
    clique = mk_pattern(
        [(f"v{i}", {"Person"}) for i in range(4)],
        [
            (f"e{i}{j}", f"v{i}", f"v{j}", {K})
            for i in range(4)
            for j in range(i + 1, 4)
        ],
    )
    tree, cost = greedy_initial(clique, gl, lo)
    covered = []

    def walk(node):
        if isinstance(node, ExpandStep):
            covered.extend(node.edge_aliases)
            walk(node.child)
        elif isinstance(node, JoinStep):
            walk(node.left)
            walk(node.right)

    walk(tree)
    assert sorted(covered) == sorted(clique.edges)


def test_lower_bound_prunes_correct_branches(marketplace_stats):
    from gopt.cbo import _Ctx, lower_bound
    from gopt.glogue import expand_candidates

    gl, lo = marketplace_stats
    tri = fig_triangle()
    ctx = _Ctx(tri, gl, lo, CostWeights())
    cands = expand_candidates(tri)
    for cand in cands:
        bound = lower_bound(ctx, {}, cand)
        f_src = get_freq(gl, cand.source, lo)
        assert bound >= f_src
    # with a solved source in the plan map, the bound takes the larger value
    from gopt.cbo import PlanEntry

    cand = cands[0]
    entry = PlanEntry(tree=None, cost=10**9, freq=get_freq(gl, cand.source, lo))
    bound = lower_bound(ctx, {cand.source.key(): entry}, cand)
    assert bound == 10**9


def test_pruning_soundness_and_optimality_random():
    """Pruned and unpruned searches agree with the exhaustive enumerator."""
    rng = random.Random(123)
    done = 0
    while done < 200:
        schema = random_schema(rng)
        n = rng.randrange(10, 40)
        g = random_graph(rng, schema, n_vertices=n, n_edges=min(3 * n, 160))
        gl = build(g, schema, k=3)
        lo = type_counts(g)
        per_graph = 0
        while per_graph < 8 and done < 200:
            p = random_pattern_valid(rng, schema, max_vertices=4)
            if p is None:
                break
            per_graph += 1
            refined = infer_and_validate(p, schema)
            if refined is INVALID:
                continue
            _, pruned_cost = optimize_pattern(refined, gl, lo, pruning=True)
            _, full_cost = optimize_pattern(refined, gl, lo, pruning=False)
            oracle = min_plan_cost(refined, gl, lo)
            assert pruned_cost == pytest.approx(full_cost), refined.render()
            assert full_cost == pytest.approx(oracle), refined.render()
            done += 1


def test_random_plan_valid_and_costed(marketplace_stats):
    gl, lo = marketplace_stats
    tri = fig_triangle()
    rng = random.Random(4)
    _, best = optimize_pattern(tri, gl, lo)
    for _ in range(10):
        tree, cost = random_plan(tri, gl, lo, rng)
        assert cost >= best - 1e-9
        covered = []

        def walk(node):
            if isinstance(node, ExpandStep):
                covered.extend(node.edge_aliases)
                walk(node.child)
            elif isinstance(node, JoinStep):
                walk(node.left)
                walk(node.right)

        walk(tree)
        assert set(covered) | set() <= set(tri.edges)


def _doubled(gl, lo):
    import copy

    gl2 = copy.deepcopy(gl)
    for code in gl2.freq:
        gl2.freq[code] = gl2.freq[code] * 2
    lo2 = copy.deepcopy(lo)
    lo2.vertices = {k: v * 2 for k, v in lo2.vertices.items()}
    lo2.edges = {k: v * 2 for k, v in lo2.edges.items()}
    return gl2, lo2


def test_uniform_scaling_preserves_order_of_matching_profiles(transfer_stats):
    """Same-degree-profile plans keep their cost order under uniform scaling.

    Two expansion-only plans over an acyclic path have identical term-degree
    profiles (all degree one: no closing edges), so doubling every
    frequency doubles both costs exactly and cannot flip their order.
    """
    gl, lo = transfer_stats
    T = ("PERSON", "TRANSFER", "PERSON")
    p = Pattern()
    for i in range(4):
        p.vertices[f"v{i}"] = PatternVertex(f"v{i}", TC.basic("PERSON"))
    for i in range(3):
        p.edges[f"e{i}"] = PatternEdge(f"e{i}", f"v{i}", f"v{i+1}", TC.basic(T, "E"))
    _, fwd = tree_from_order(p, ["v0", "v1", "v2", "v3"], gl, lo)
    _, mid = tree_from_order(p, ["v1", "v0", "v2", "v3"], gl, lo)
    gl2, lo2 = _doubled(gl, lo)
    _, fwd2 = tree_from_order(p, ["v0", "v1", "v2", "v3"], gl2, lo2)
    _, mid2 = tree_from_order(p, ["v1", "v0", "v2", "v3"], gl2, lo2)
    assert fwd2 == pytest.approx(2 * fwd)
    assert mid2 == pytest.approx(2 * mid)
    assert (fwd <= mid) == (fwd2 <= mid2)


def test_uniform_scaling_argmin_probe(marketplace_stats, capsys):
    """Empirical report on the fixture: scale factor and argmin stability.

    Closing-edge terms are degree zero in a uniform frequency scaling, so
    the headline factor-in-[2,4] claim need not hold plan-wide; reported
    only.
    """
    gl, lo = marketplace_stats
    tri = fig_triangle()
    tree1, cost1 = optimize_pattern(tri, gl, lo)
    gl2, lo2 = _doubled(gl, lo)
    tree2, cost2 = optimize_pattern(tri, gl2, lo2)

    def shape(node):
        if isinstance(node, ScanStep):
            return ("scan", node.alias)
        if isinstance(node, ExpandStep):
            return ("expand", node.new_vertex, node.edge_aliases, shape(node.child))
        return ("join", node.keys, shape(node.left), shape(node.right))

    print(
        f"uniform-scaling probe: factor={cost2 / cost1:.3f} "
        f"argmin_preserved={shape(tree1) == shape(tree2)}"
    )
    assert cost2 > cost1  # direction is safe to assert: scaling never cheapens


def test_alpha_weights_change_costs(marketplace_stats):
    gl, lo = marketplace_stats
    tri = fig_triangle()
    _, c1 = optimize_pattern(tri, gl, lo, weights=CostWeights(1.0, 1.0))
    _, c2 = optimize_pattern(tri, gl, lo, weights=CostWeights(2.0, 2.0))
    assert c2 > c1


def test_finalize_orders_relational_tail(marketplace_stats):
    from gopt.ir import Group, Limit, Order, Select
    from gopt import expr as ex

    gl, lo = marketplace_stats
    tri = fig_triangle()
    tree, cost = optimize_pattern(tri, gl, lo)
    tail = (
        Order(keys=((ex.Count(arg=ex.Var("v2")), "DESC"),), limit_hint=5),
        Limit(n=5),
        Group(keys=(ex.Prop("v2", "name"),), aggregates=(ex.Count(arg=ex.Var("v2")),)),
        Select(predicate=ex.Cmp(op="=", left=ex.Prop("v3", "name"), right=ex.Lit("China"))),
    )
    plan = finalize_plan(tri, tree, tail, cost)
    kinds = [op.kind for op in plan.ops if op.kind in ("SELECT", "GROUP", "ORDER", "LIMIT")]
    assert kinds == ["SELECT", "GROUP", "ORDER", "LIMIT"]


def test_join_vertex_position_path(transfer, transfer_stats):
    schema, g = transfer
    gl, lo = transfer_stats
    T = ("PERSON", "TRANSFER", "PERSON")
    p = Pattern()
    for i in range(5):
        p.vertices[f"v{i}"] = PatternVertex(f"v{i}", TC.basic("PERSON"))
    for i in range(4):
        p.edges[f"e{i}"] = PatternEdge(
            f"e{i}", f"v{i}", f"v{i+1}", TC.basic(T, "E"), both=True
        )
    tree, cost = optimize_pattern(p, gl, lo)
    pos = join_vertex_position(p, tree)
    assert pos is not None and sum(pos) == 4
    forced, forced_cost = tree_from_order(p, ["v0", "v1", "v2", "v3", "v4"], gl, lo)
    assert join_vertex_position(p, forced) == (4, 0)
    reverse, _ = tree_from_order(p, ["v4", "v3", "v2", "v1", "v0"], gl, lo)
    assert join_vertex_position(p, reverse) == (0, 4)
    # the average transfer degree is above two: a join plan must win
    assert isinstance(tree, JoinStep) or any(
        isinstance(n, JoinStep) for n in _all_nodes(tree)
    )
    assert cost < forced_cost


def _all_nodes(tree):
    out = [tree]
    if isinstance(tree, ExpandStep):
        out += _all_nodes(tree.child)
    elif isinstance(tree, JoinStep):
        out += _all_nodes(tree.left) + _all_nodes(tree.right)
    return out
