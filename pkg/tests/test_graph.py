"""Graph store, schema loading and ingestion."""

import json

import pytest

from gopt.datagen import (
    MARKETPLACE_COUNTS,
    schema_to_obj,
    write_graph_files,
)
from gopt.errors import GraphLoadError, SchemaError
from gopt.graph import load_graph, load_schema, neighbors, type_counts


def write_schema(tmp_path, obj):
    path = tmp_path / "schema.json"
    path.write_text(json.dumps(obj))
    return path


MARKETPLACE_OBJ = {
    "vertex_types": [
        {"name": "Person", "properties": [{"name": "name", "type": "String"}]},
        {"name": "Product", "properties": []},
        {"name": "Place", "properties": [{"name": "name", "type": "String"}]},
    ],
    "edge_types": [
        {"src": "Person", "label": "Knows", "dst": "Person", "properties": []},
        {"src": "Person", "label": "Purchases", "dst": "Product", "properties": []},
        {"src": "Person", "label": "LocatedIn", "dst": "Place", "properties": []},
        {"src": "Product", "label": "ProducedIn", "dst": "Place", "properties": []},
    ],
}


def test_load_schema_marketplace(tmp_path):
    schema = load_schema(write_schema(tmp_path, MARKETPLACE_OBJ))
    assert schema.vertex_type_names == {"Person", "Product", "Place"}
    assert len(schema.triplets) == 4
    assert ("Person", "Knows", "Person") in schema.triplets


def test_load_schema_edgeless(tmp_path):
    schema = load_schema(write_schema(tmp_path, {"vertex_types": [{"name": "A"}]}))
    assert schema.vertex_type_names == {"A"}
    assert schema.triplets == ()


def test_load_schema_dangling_reference(tmp_path):
    obj = {
        "vertex_types": [{"name": "A"}],
        "edge_types": [{"src": "A", "label": "x", "dst": "Ghost"}],
    }
    with pytest.raises(SchemaError, match="Ghost"):
        load_schema(write_schema(tmp_path, obj))


def test_load_schema_duplicate_names(tmp_path):
    obj = {"vertex_types": [{"name": "A"}, {"name": "A"}]}
    with pytest.raises(SchemaError, match="duplicate"):
        load_schema(write_schema(tmp_path, obj))


def write_graph(tmp_path, vertices, edges):
    vp = tmp_path / "vertices.csv"
    ep = tmp_path / "edges.csv"
    vp.write_text("id,label,properties\n" + "".join(f"{i},{l},\"{p}\"\n" for i, l, p in vertices))
    ep.write_text("src,dst,label,properties\n" + "".join(f"{s},{d},{l},\n" for s, d, l in edges))
    return vp, ep


@pytest.fixture
def small_files(tmp_path):
    schema = load_schema(write_schema(tmp_path, MARKETPLACE_OBJ))
    vertices = [(i, "Person", "{}") for i in range(5)]
    vertices += [(i, "Product", "{}") for i in range(5, 8)]
    vertices += [(i, "Place", "{}") for i in range(8, 10)]
    edges = [(0, 1, "Knows"), (1, 2, "Knows"), (2, 0, "Knows"), (3, 4, "Knows")]
    vp, ep = write_graph(tmp_path, vertices, edges)
    return schema, vp, ep


def test_load_graph_counts(small_files):
    schema, vp, ep = small_files
    g = load_graph(schema, vp, ep)
    assert g.num_vertices == 10
    assert g.num_edges == 4


def test_load_graph_missing_endpoint(tmp_path):
    schema = load_schema(write_schema(tmp_path, MARKETPLACE_OBJ))
    vp, ep = write_graph(tmp_path, [(1, "Person", "{}")], [(99, 1, "Knows")])
    with pytest.raises(GraphLoadError, match="missing vertex id 99"):
        load_graph(schema, vp, ep)


def test_load_graph_schema_violation(tmp_path):
    schema = load_schema(write_schema(tmp_path, MARKETPLACE_OBJ))
    vertices = [(1, "Person", "{}"), (2, "Product", "{}")]
    vp, ep = write_graph(tmp_path, vertices, [(1, 2, "Knows")])
    with pytest.raises(GraphLoadError, match="not declared"):
        load_graph(schema, vp, ep)


def test_neighbors_directions_and_filter(small_files):
    schema, vp, ep = small_files
    g = load_graph(schema, vp, ep)
    v0 = g.vertex_by_external(0)
    out = neighbors(g, v0, "OUT")
    assert [g.ext_ids[v] for _, v in out] == [1]
    inn = neighbors(g, v0, "IN")
    assert [g.ext_ids[v] for _, v in inn] == [2]
    assert neighbors(g, g.vertex_by_external(9), "OUT") == []
    with pytest.raises(GraphLoadError):
        neighbors(g, 99, "OUT")


def test_neighbors_type_filter(marketplace):
    # derived by hand: person p's OUT edges split into Knows vs others
    schema, g = marketplace
    knows = {("Person", "Knows", "Person")}
    for v in g.by_type["Person"]:
        pairs = neighbors(g, v, "OUT", knows)
        assert all(g.etriplet[eid] == ("Person", "Knows", "Person") for eid, _ in pairs)
        all_out = neighbors(g, v, "OUT")
        rest = [e for e, _ in all_out if g.etriplet[e][1] != "Knows"]
        assert len(pairs) + len(rest) == len(all_out)


def test_adjacency_edge_set_bijection(marketplace):
    schema, g = marketplace
    via_out = {
        eid for v in range(g.num_vertices) for eid, _ in neighbors(g, v, "OUT")
    }
    via_in = {
        eid for v in range(g.num_vertices) for eid, _ in neighbors(g, v, "IN")
    }
    assert via_out == via_in == set(range(g.num_edges))


def test_type_counts_marketplace(marketplace):
    schema, g = marketplace
    counts = type_counts(g)
    assert counts.vertices == {
        "Person": MARKETPLACE_COUNTS["Person"],
        "Product": MARKETPLACE_COUNTS["Product"],
        "Place": MARKETPLACE_COUNTS["Place"],
    }
    by_label = {t[1]: c for t, c in counts.edges.items()}
    assert by_label == {
        "Knows": MARKETPLACE_COUNTS["Knows"],
        "Purchases": MARKETPLACE_COUNTS["Purchases"],
        "LocatedIn": MARKETPLACE_COUNTS["LocatedIn"],
        "ProducedIn": MARKETPLACE_COUNTS["ProducedIn"],
    }
    assert counts.vertex_total() == g.num_vertices
    assert counts.edge_total() == g.num_edges


def test_type_counts_degenerate(tmp_path):
    schema = load_schema(write_schema(tmp_path, MARKETPLACE_OBJ))
    vp, ep = write_graph(tmp_path, [], [])
    g = load_graph(schema, vp, ep)
    counts = type_counts(g)
    assert all(c == 0 for c in counts.vertices.values())
    assert all(c == 0 for c in counts.edges.values())
    one_each = [(0, "Person", "{}"), (1, "Product", "{}"), (2, "Place", "{}")]
    vp, ep = write_graph(tmp_path, one_each, [])
    counts = type_counts(load_graph(schema, vp, ep))
    assert set(counts.vertices.values()) == {1}
    assert all(c == 0 for c in counts.edges.values())


def test_loading_is_idempotent(tmp_path, marketplace):
    schema, g = marketplace
    paths = write_graph_files(schema, g, tmp_path / "out")
    s1 = load_schema(paths["schema"])
    g1 = load_graph(s1, paths["vertices"], paths["edges"])
    g2 = load_graph(s1, paths["vertices"], paths["edges"])
    assert g1.vtype == g2.vtype == g.vtype
    assert g1.etriplet == g2.etriplet == g.etriplet
    assert g1.esrc == g2.esrc and g1.edst == g2.edst
    assert g1.vprops == g2.vprops


def test_external_id_exposed_as_property(marketplace):
    schema, g = marketplace
    assert g.vprops[g.vertex_by_external(12)]["id"] == 12


def test_schema_roundtrip(tmp_path, social):
    schema, _ = social
    path = tmp_path / "schema.json"
    path.write_text(json.dumps(schema_to_obj(schema)))
    loaded = load_schema(path)
    assert loaded.vertex_type_names == schema.vertex_type_names
    assert set(loaded.triplets) == set(schema.triplets)
    assert loaded.supertype_members("MESSAGE") == ("COMMENT", "POST")
