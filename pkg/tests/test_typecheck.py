"""Type inference: worklist refinement against the unfold-enumerate oracle."""

import random

import pytest

from gopt.datagen import (
    marketplace_schema,
    random_pattern_any,
    random_pattern_valid,
    random_schema,
)
from gopt.errors import GuardError
from gopt.ir import Pattern, PatternEdge, PatternVertex, TypeConstraint
from gopt.typecheck import (
    INVALID,
    infer_and_validate,
    naive_unfold_validate,
    schema_nbr_types,
)

TC = TypeConstraint
K = ("Person", "Knows", "Person")
P = ("Person", "Purchases", "Product")
L = ("Person", "LocatedIn", "Place")
R = ("Product", "ProducedIn", "Place")


@pytest.fixture(scope="module")
def schema():
    return marketplace_schema()


def make_triangle(schema, v1=None, v2=None, v3=None):
    """(v1)-e1->(v2), (v2)-e2->(v3), (v1)-e3->(v3) with given vertex members."""
    p = Pattern()
    all_v = TC.all_unresolved("V").resolve(schema)
    all_e = TC.all_unresolved("E").resolve(schema)

    def vc(members):
        return all_v if members is None else TC.union_of(members, "V")

    p.vertices["v1"] = PatternVertex("v1", vc(v1))
    p.vertices["v2"] = PatternVertex("v2", vc(v2))
    p.vertices["v3"] = PatternVertex("v3", vc(v3))
    p.edges["e1"] = PatternEdge("e1", "v1", "v2", all_e)
    p.edges["e2"] = PatternEdge("e2", "v2", "v3", all_e)
    p.edges["e3"] = PatternEdge("e3", "v1", "v3", all_e)
    return p


def test_schema_nbr_types_place(schema):
    cand = schema_nbr_types(schema, "Place")
    assert cand.in_edge == {L, R}
    assert cand.in_vertex == {"Person", "Product"}
    assert cand.out_edge == frozenset() and cand.out_vertex == frozenset()


def test_schema_nbr_types_person(schema):
    cand = schema_nbr_types(schema, "Person")
    assert cand.out_vertex == {"Person", "Product", "Place"}
    assert cand.out_edge == {K, P, L}
    assert cand.in_vertex == {"Person"}
    assert cand.in_edge == {K}


def test_schema_nbr_types_isolated():
    from gopt.datagen import _schema

    s = _schema([("A", []), ("B", [])], [("A", "x", "A", [])])
    cand = schema_nbr_types(s, "B")
    assert cand.is_empty()


def test_triangle_inference_matches_known_refinement(schema):
    p = make_triangle(schema, v3={"Place"})
    refined = infer_and_validate(p, schema)
    assert refined is not INVALID
    assert refined.vertices["v1"].constraint.members == {"Person"}
    assert refined.vertices["v2"].constraint.members == {"Person", "Product"}
    assert refined.vertices["v3"].constraint.members == {"Place"}
    assert refined.edges["e1"].constraint.members == {K, P}
    assert refined.edges["e2"].constraint.members == {L, R}
    assert refined.edges["e3"].constraint.members == {L}


def test_invalid_assignment_rejected(schema):
    # Product -> Place has no edge to close the triangle onto the Place vertex
    p = make_triangle(schema, v1={"Product"}, v2={"Place"}, v3={"Place"})
    assert infer_and_validate(p, schema) is INVALID


def test_inference_does_not_mutate_input(schema):
    p = make_triangle(schema, v3={"Place"})
    before = p.vertices["v1"].constraint.members
    infer_and_validate(p, schema)
    assert p.vertices["v1"].constraint.members == before


def test_unfold_oracle_triangle(schema):
    p = make_triangle(schema, v3={"Place"})
    assignments = naive_unfold_validate(p, schema)
    vertex_assignments = {
        (a["v1"], a["v2"], a["v3"]) for a in assignments
    }
    assert vertex_assignments == {
        ("Person", "Person", "Place"),
        ("Person", "Product", "Place"),
    }


def test_unfold_oracle_single_vertex(schema):
    p = Pattern()
    p.vertices["a"] = PatternVertex("a", TC.all_unresolved("V").resolve(schema))
    assert len(naive_unfold_validate(p, schema)) == 3


def test_unfold_oracle_fixed_invalid(schema):
    p = make_triangle(schema, v1={"Product"}, v2={"Place"}, v3={"Place"})
    assert naive_unfold_validate(p, schema) == []


def test_unfold_guard():
    rng = random.Random(0)
    s = random_schema(rng, max_vertex_types=5, max_triplets=8)
    p = Pattern()
    big = TC.union_of(s.vertex_type_names) if len(s.vertex_type_names) > 1 else None
    for i in range(9):
        p.vertices[f"v{i}"] = PatternVertex(f"v{i}", big or TC.basic(next(iter(s.vertex_type_names))))
    for i in range(1, 9):
        p.edges[f"e{i}"] = PatternEdge(
            f"e{i}", "v0", f"v{i}", TC.union_of(set(s.triplets), "E")
            if len(s.triplets) > 1 else TC.basic(s.triplets[0], "E")
        )
    if len(s.vertex_type_names) ** 9 * max(len(s.triplets), 1) ** 8 > 10**6:
        with pytest.raises(GuardError):
            naive_unfold_validate(p, s)


def _oracle_union(p, assignments):
    keys = list(p.vertices) + list(p.edges)
    return {k: {a[k] for a in assignments} for k in keys}


def _check_against_oracle(p, schema):
    refined = infer_and_validate(p, schema)
    try:
        assignments = naive_unfold_validate(p, schema)
    except GuardError:
        return False  # outside the oracle's combinatorial precondition
    if refined is INVALID:
        assert assignments == [], "INVALID but the oracle found assignments"
        return True
    assert assignments != [], "validated but the oracle found nothing"
    union = _oracle_union(p, assignments)
    for alias, v in refined.vertices.items():
        assert v.constraint.members == union[alias], f"vertex {alias} not tight"
        assert v.constraint.members <= p.vertices[alias].constraint.members
    for alias, e in refined.edges.items():
        assert e.constraint.members == union[alias], f"edge {alias} not tight"
        assert e.constraint.members <= p.edges[alias].constraint.members
    return True


def test_oracle_tightness_random():
    """Refined constraints equal the per-position oracle union; INVALID iff empty."""
    rng = random.Random(2026)
    done = 0
    while done < 500:
        schema = random_schema(rng)
        if done % 2 == 0:
            p = random_pattern_valid(rng, schema, max_vertices=4)
            if p is None:
                continue
        else:
            p = random_pattern_any(rng, schema, max_vertices=4)
        if _check_against_oracle(p, schema):
            done += 1


def test_fixpoint_and_monotonicity(schema):
    rng = random.Random(7)
    done = 0
    while done < 60:
        s = random_schema(rng)
        p = random_pattern_valid(rng, s, max_vertices=4)
        if p is None:
            continue
        refined = infer_and_validate(p, s)
        if refined is INVALID:
            continue
        again = infer_and_validate(refined, s)
        assert again is not INVALID
        for alias in refined.vertices:
            assert (
                again.vertices[alias].constraint.members
                == refined.vertices[alias].constraint.members
            )
        for alias in refined.edges:
            assert (
                again.edges[alias].constraint.members
                == refined.edges[alias].constraint.members
            )
        done += 1


def test_undirected_edges_infer_both_orientations(schema):
    p = Pattern()
    p.vertices["a"] = PatternVertex("a", TC.all_unresolved("V").resolve(schema))
    p.vertices["b"] = PatternVertex("b", TC.basic("Place"))
    p.edges["e"] = PatternEdge(
        "e", "a", "b", TC.all_unresolved("E").resolve(schema), both=True
    )
    refined = infer_and_validate(p, schema)
    assert refined is not INVALID
    # Place has only incoming triplets, so the undirected edge can only be
    # realized with b as the target
    assert refined.vertices["a"].constraint.members == {"Person", "Product"}
    assert refined.edges["e"].constraint.members == {L, R}
