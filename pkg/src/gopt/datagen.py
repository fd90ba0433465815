"""Synthetic fixtures and random generators for tests and the CLI.

Everything here is seeded and deterministic: the same arguments always
produce the same graph, so frozen expected values in tests stay valid.
"""

from __future__ import annotations

import csv
import json
import random

from .graph import GraphSchema, PropertyGraph
from .ir import Pattern, PatternEdge, PatternVertex, TypeConstraint

# ---------------------------------------------------------------------------
# Builders / writers
# ---------------------------------------------------------------------------


def build_graph(schema: GraphSchema, vertices, edges) -> PropertyGraph:
    """Construct a graph directly from (ext_id, type, props) and edge rows."""
    g = PropertyGraph(schema)
    for ext_id, type_name, props in vertices:
        g.add_vertex(ext_id, type_name, props)
    for src_ext, dst_ext, label, props in edges:
        g.add_edge(g.vertex_by_external(src_ext), g.vertex_by_external(dst_ext), label, props)
    g.check_consistency()
    return g


def schema_to_obj(schema: GraphSchema) -> dict:
    return {
        "vertex_types": [
            {"name": name, "properties": [{"name": n, "type": t} for n, t in props]}
            for name, props in schema.vertex_types
        ],
        "edge_types": [
            {
                "src": t[0],
                "label": t[1],
                "dst": t[2],
                "properties": [{"name": n, "type": ty} for n, ty in props],
            }
            for t, props in schema.edge_types
        ],
        "supertypes": {macro: list(members) for macro, members in schema.supertypes},
    }


def write_graph_files(schema: GraphSchema, g: PropertyGraph, out_dir) -> dict:
    """Write schema.json, vertices.csv and edges.csv; returns the paths."""
    import os

    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "schema": os.path.join(out_dir, "schema.json"),
        "vertices": os.path.join(out_dir, "vertices.csv"),
        "edges": os.path.join(out_dir, "edges.csv"),
    }
    with open(paths["schema"], "w") as fh:
        json.dump(schema_to_obj(schema), fh, indent=2, sort_keys=True)
    with open(paths["vertices"], "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["id", "label", "properties"])
        for vid in range(g.num_vertices):
            writer.writerow(
                [g.ext_ids[vid], g.vtype[vid], json.dumps(g.vprops[vid], sort_keys=True)]
            )
    with open(paths["edges"], "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["src", "dst", "label", "properties"])
        for eid in range(g.num_edges):
            writer.writerow(
                [
                    g.ext_ids[g.esrc[eid]],
                    g.ext_ids[g.edst[eid]],
                    g.etriplet[eid][1],
                    json.dumps(g.eprops[eid], sort_keys=True),
                ]
            )
    return paths


def _schema(vertex_types, edge_types, supertypes=()):
    return GraphSchema(
        vertex_types=tuple(
            (name, tuple((p, t) for p, t in props)) for name, props in vertex_types
        ),
        edge_types=tuple(
            ((src, label, dst), tuple((p, t) for p, t in props))
            for src, label, dst, props in edge_types
        ),
        supertypes=tuple(supertypes),
    )


# ---------------------------------------------------------------------------
# Marketplace fixture (three vertex types, four triplets)
# ---------------------------------------------------------------------------

MARKETPLACE_COUNTS = {
    "Person": 10,
    "Product": 20,
    "Place": 5,
    "Knows": 30,
    "Purchases": 40,
    "LocatedIn": 10,
    "ProducedIn": 20,
}


def marketplace_schema() -> GraphSchema:
    return _schema(
        vertex_types=[
            ("Person", [("id", "Integer"), ("name", "String"), ("age", "Integer")]),
            ("Product", [("id", "Integer"), ("name", "String")]),
            ("Place", [("id", "Integer"), ("name", "String")]),
        ],
        edge_types=[
            ("Person", "Knows", "Person", []),
            ("Person", "Purchases", "Product", []),
            ("Person", "LocatedIn", "Place", []),
            ("Product", "ProducedIn", "Place", []),
        ],
    )


def marketplace_fixture(seed: int = 5) -> tuple[GraphSchema, PropertyGraph]:
    """Small marketplace graph with exact per-type counts.

    10 Person, 20 Product, 5 Place; 30 Knows, 40 Purchases, one LocatedIn
    per person (10) and one ProducedIn per product (20).
    """
    rng = random.Random(seed)
    schema = marketplace_schema()
    place_names = ["China", "France", "Brazil", "Kenya", "Japan"]
    vertices = []
    persons = list(range(10))
    products = list(range(10, 30))
    places = list(range(30, 35))
    for i in persons:
        vertices.append((i, "Person", {"name": f"person{i}", "age": 18 + (i * 7) % 50}))
    for i in products:
        vertices.append((i, "Product", {"name": f"product{i}"}))
    for i, name in zip(places, place_names):
        vertices.append((i, "Place", {"name": name}))
    edges = []
    for _ in range(MARKETPLACE_COUNTS["Knows"]):
        a = rng.choice(persons)
        b = rng.choice([p for p in persons if p != a])
        edges.append((a, b, "Knows", {}))
    for _ in range(MARKETPLACE_COUNTS["Purchases"]):
        edges.append((rng.choice(persons), rng.choice(products), "Purchases", {}))
    for p in persons:
        edges.append((p, rng.choice(places), "LocatedIn", {}))
    for p in products:
        edges.append((p, rng.choice(places), "ProducedIn", {}))
    return schema, build_graph(schema, vertices, edges)


# ---------------------------------------------------------------------------
# Social-network fixture (LDBC-like, desk scale)
# ---------------------------------------------------------------------------


def social_schema() -> GraphSchema:
    v = [
        ("PERSON", [("id", "Integer"), ("name", "String"), ("age", "Integer")]),
        ("POST", [("id", "Integer"), ("length", "Integer")]),
        ("COMMENT", [("id", "Integer"), ("length", "Integer")]),
        ("FORUM", [("id", "Integer"), ("title", "String")]),
        ("TAG", [("id", "Integer"), ("name", "String")]),
        ("CITY", [("id", "Integer"), ("name", "String")]),
        ("PLACE", [("id", "Integer"), ("name", "String")]),
        ("ORGANISATION", [("id", "Integer"), ("name", "String")]),
    ]
    e = [
        ("PERSON", "KNOWS", "PERSON", []),
        ("PERSON", "LIKES", "POST", []),
        ("PERSON", "LIKES", "COMMENT", []),
        ("POST", "HASCREATOR", "PERSON", []),
        ("COMMENT", "HASCREATOR", "PERSON", []),
        ("COMMENT", "REPLYOF", "POST", []),
        ("FORUM", "CONTAINEROF", "POST", []),
        ("FORUM", "HASMEMBER", "PERSON", []),
        ("FORUM", "HASMODERATOR", "PERSON", []),
        ("POST", "HASTAG", "TAG", []),
        ("COMMENT", "HASTAG", "TAG", []),
        ("FORUM", "HASTAG", "TAG", []),
        ("PERSON", "HASINTEREST", "TAG", []),
        ("PERSON", "ISLOCATEDIN", "CITY", []),
        ("POST", "ISLOCATEDIN", "CITY", []),
        ("ORGANISATION", "ISLOCATEDIN", "PLACE", []),
        ("PERSON", "WORKAT", "ORGANISATION", []),
        ("CITY", "ISPARTOF", "PLACE", []),
    ]
    supertypes = [
        ("MESSAGE", ("COMMENT", "POST")),
        ("Message", ("COMMENT", "POST")),
    ]
    return _schema(v, e, supertypes)


def social_fixture(scale: float = 1.0, seed: int = 7) -> tuple[GraphSchema, PropertyGraph]:
    """Desk-scale social graph with correlated membership/likes structure."""
    rng = random.Random(seed)
    schema = social_schema()
    n = lambda base: max(1, int(base * scale))
    counts = {
        "PERSON": n(120),
        "CITY": n(15),
        "PLACE": n(8),
        "ORGANISATION": n(20),
        "TAG": n(40),
        "FORUM": n(60),
        "POST": n(450),
        "COMMENT": n(600),
    }
    ids: dict[str, list[int]] = {}
    vertices = []
    next_id = 0
    for t in ("PERSON", "CITY", "PLACE", "ORGANISATION", "TAG", "FORUM", "POST", "COMMENT"):
        ids[t] = list(range(next_id, next_id + counts[t]))
        next_id += counts[t]
    for i in ids["PERSON"]:
        vertices.append((i, "PERSON", {"name": f"person{i}", "age": 16 + (i * 13) % 60}))
    for i in ids["CITY"]:
        vertices.append((i, "CITY", {"name": f"city{i}"}))
    for i in ids["PLACE"]:
        vertices.append((i, "PLACE", {"name": f"place{i}"}))
    for i in ids["ORGANISATION"]:
        vertices.append((i, "ORGANISATION", {"name": f"org{i}"}))
    for i in ids["TAG"]:
        vertices.append((i, "TAG", {"name": f"tag{i}"}))
    for i in ids["FORUM"]:
        vertices.append((i, "FORUM", {"title": f"forum{i}"}))
    for i in ids["POST"]:
        vertices.append((i, "POST", {"length": rng.randrange(0, 240)}))
    for i in ids["COMMENT"]:
        vertices.append((i, "COMMENT", {"length": rng.randrange(0, 180)}))

    edges = []
    # skewed popularity for persons and posts
    person_weights = [1.0 / (r + 1) ** 0.6 for r in range(counts["PERSON"])]
    popular_person = lambda: rng.choices(ids["PERSON"], weights=person_weights, k=1)[0]

    for p in ids["PERSON"]:
        edges.append((p, rng.choice(ids["CITY"]), "ISLOCATEDIN", {}))
    for c in ids["CITY"]:
        edges.append((c, rng.choice(ids["PLACE"]), "ISPARTOF", {}))
    for o in ids["ORGANISATION"]:
        edges.append((o, rng.choice(ids["PLACE"]), "ISLOCATEDIN", {}))
    for p in ids["PERSON"]:
        if rng.random() < 0.7:
            edges.append((p, rng.choice(ids["ORGANISATION"]), "WORKAT", {}))
    seen_knows = set()
    while len(seen_knows) < n(400):
        a, b = popular_person(), popular_person()
        if a != b and (a, b) not in seen_knows:
            seen_knows.add((a, b))
            edges.append((a, b, "KNOWS", {}))

    members: dict[int, list[int]] = {}
    moderator: dict[int, int] = {}
    forum_tags: dict[int, list[int]] = {}
    for f in ids["FORUM"]:
        size = max(3, int(rng.paretovariate(1.6) * 4))
        group = rng.sample(ids["PERSON"], min(size, counts["PERSON"]))
        members[f] = group
        moderator[f] = rng.choice(group)
        edges.append((f, moderator[f], "HASMODERATOR", {}))
        for p in group:
            edges.append((f, p, "HASMEMBER", {}))
        forum_tags[f] = [rng.choice(ids["TAG"]) for _ in range(rng.randrange(1, 3))]
        for t in forum_tags[f]:
            edges.append((f, t, "HASTAG", {}))

    forum_weights = [1.0 / (r + 1) ** 0.7 for r in range(counts["FORUM"])]
    post_forum: dict[int, int] = {}
    for post in ids["POST"]:
        f = rng.choices(ids["FORUM"], weights=forum_weights, k=1)[0]
        post_forum[post] = f
        edges.append((f, post, "CONTAINEROF", {}))
        creator = (
            rng.choice(members[f]) if members[f] and rng.random() < 0.7 else popular_person()
        )
        edges.append((post, creator, "HASCREATOR", {}))
        edges.append((post, rng.choice(ids["CITY"]), "ISLOCATEDIN", {}))
        for _ in range(rng.randrange(1, 3)):
            # posts share their forum's topic half the time
            if rng.random() < 0.5:
                edges.append((post, rng.choice(forum_tags[f]), "HASTAG", {}))
            else:
                edges.append((post, rng.choice(ids["TAG"]), "HASTAG", {}))
    for c in ids["COMMENT"]:
        post = rng.choice(ids["POST"])
        edges.append((c, post, "REPLYOF", {}))
        edges.append((c, popular_person(), "HASCREATOR", {}))
        if rng.random() < 0.5:
            edges.append((c, rng.choice(ids["TAG"]), "HASTAG", {}))
    for _ in range(n(900)):
        p = popular_person()
        if rng.random() < 0.6:
            forums = [f for f in ids["FORUM"] if p in members[f]]
            if forums:
                f = rng.choice(forums)
                posts = [post for post, pf in post_forum.items() if pf == f]
                if posts:
                    edges.append((p, rng.choice(posts), "LIKES", {}))
                    continue
        edges.append((p, rng.choice(ids["POST"]), "LIKES", {}))
    for _ in range(n(450)):
        edges.append((popular_person(), rng.choice(ids["COMMENT"]), "LIKES", {}))
    for p in ids["PERSON"]:
        own_forums = [f for f in ids["FORUM"] if p in members[f]]
        for _ in range(rng.randrange(1, 4)):
            # interests lean toward the person's forum topics
            if own_forums and rng.random() < 0.4:
                edges.append((p, rng.choice(forum_tags[rng.choice(own_forums)]),
                              "HASINTEREST", {}))
            else:
                edges.append((p, rng.choice(ids["TAG"]), "HASINTEREST", {}))

    return schema, build_graph(schema, vertices, edges)


# ---------------------------------------------------------------------------
# Transfer fixture (skewed s-t path workload)
# ---------------------------------------------------------------------------


def transfer_schema() -> GraphSchema:
    return _schema(
        vertex_types=[("PERSON", [("id", "Integer"), ("name", "String")])],
        edge_types=[("PERSON", "TRANSFER", "PERSON", [("amount", "Float")])],
    )


def transfer_fixture(
    n_person: int = 300, n_edges: int = 1800, seed: int = 11
) -> tuple[GraphSchema, PropertyGraph]:
    """Skewed money-transfer graph via preferential attachment."""
    rng = random.Random(seed)
    schema = transfer_schema()
    vertices = [(i, "PERSON", {"name": f"acct{i}"}) for i in range(n_person)]
    pool = list(range(n_person))  # endpoints re-enter the pool: degree skew
    edges = []
    for _ in range(n_edges):
        a = rng.choice(pool)
        b = rng.choice(pool)
        if a == b:
            b = (b + 1) % n_person
        amount = round(rng.uniform(1.0, 5000.0), 2)
        edges.append((a, b, "TRANSFER", {"amount": amount}))
        pool.extend([a, b])
    return schema, build_graph(schema, vertices, edges)


# ---------------------------------------------------------------------------
# Random generators for property tests
# ---------------------------------------------------------------------------


def random_schema(rng: random.Random, max_vertex_types: int = 5, max_triplets: int = 8):
    """Random schema; at most two triplets per ordered endpoint pair.

    Same-pair label multiplicity is what blows up the basic-pattern space,
    and production schemas keep it low, so the generator matches that.
    """
    nv = rng.randrange(2, max_vertex_types + 1)
    names = [f"T{i}" for i in range(nv)]
    labels = [f"l{i}" for i in range(max_triplets)]
    triplets: set = set()
    pair_count: dict = {}
    ne = rng.randrange(1, max_triplets + 1)
    attempts = 0
    while len(triplets) < ne and attempts < 20 * max_triplets:
        attempts += 1
        t = (rng.choice(names), rng.choice(labels), rng.choice(names))
        pair = (t[0], t[2])
        if t in triplets or pair_count.get(pair, 0) >= 2:
            continue
        triplets.add(t)
        pair_count[pair] = pair_count.get(pair, 0) + 1
    return _schema(
        vertex_types=[(n, [("id", "Integer")]) for n in names],
        edge_types=[(s, l, d, []) for s, l, d in sorted(triplets)],
    )


def random_graph(
    rng: random.Random, schema: GraphSchema, n_vertices: int = 30, n_edges: int = 120
) -> PropertyGraph:
    names = sorted(schema.vertex_type_names)
    vertices = [(i, rng.choice(names), {"x": rng.randrange(100)}) for i in range(n_vertices)]
    by_type: dict[str, list[int]] = {}
    for ext, t, _ in vertices:
        by_type.setdefault(t, []).append(ext)
    triplets = list(schema.triplets)
    edges = []
    for _ in range(n_edges):
        t = rng.choice(triplets)
        srcs, dsts = by_type.get(t[0]), by_type.get(t[2])
        if not srcs or not dsts:
            continue
        a, b = rng.choice(srcs), rng.choice(dsts)
        if a == b:
            continue
        edges.append((a, b, t[1], {}))
    return build_graph(schema, vertices, edges)


def _loosen_vertex(rng, schema: GraphSchema, base: str) -> TypeConstraint:
    roll = rng.random()
    if roll < 0.4:
        return TypeConstraint.basic(base, "V")
    if roll < 0.8:
        extra = rng.sample(
            sorted(schema.vertex_type_names), min(rng.randrange(1, 3), len(schema.vertex_type_names))
        )
        return TypeConstraint.union_of({base, *extra}, "V")
    return TypeConstraint.all_unresolved("V").resolve(schema)


def _loosen_edge(rng, schema: GraphSchema, base) -> TypeConstraint:
    roll = rng.random()
    if roll < 0.4:
        return TypeConstraint.basic(base, "E")
    if roll < 0.8:
        extra = rng.sample(list(schema.triplets), min(rng.randrange(1, 3), len(schema.triplets)))
        return TypeConstraint.union_of({base, *extra}, "E")
    return TypeConstraint.all_unresolved("E").resolve(schema)


def random_pattern_valid(
    rng: random.Random, schema: GraphSchema, max_vertices: int = 4, allow_both: bool = False
) -> Pattern | None:
    """Connected pattern loosened from a concrete typed subgraph of the schema.

    Always admits at least one basic assignment; None when the schema has
    no edge capable of growing the requested shape.
    """
    nv = rng.randrange(1, max_vertices + 1)
    p = Pattern()
    base_types: dict[str, str] = {}
    names = sorted(schema.vertex_type_names)
    a0 = "v0"
    base_types[a0] = rng.choice(names)
    p.vertices[a0] = PatternVertex(alias=a0, constraint=_loosen_vertex(rng, schema, base_types[a0]))
    triplets = list(schema.triplets)
    if not triplets and nv > 1:
        return None
    for i in range(1, nv):
        alias = f"v{i}"
        anchors = sorted(base_types)
        rng.shuffle(anchors)
        placed = False
        for anchor in anchors:
            t_a = base_types[anchor]
            out_options = [t for t in triplets if t[0] == t_a]
            in_options = [t for t in triplets if t[2] == t_a]
            options = [("OUT", t) for t in out_options] + [("IN", t) for t in in_options]
            if not options:
                continue
            direction, t = rng.choice(options)
            base = t[2] if direction == "OUT" else t[0]
            base_types[alias] = base
            p.vertices[alias] = PatternVertex(
                alias=alias, constraint=_loosen_vertex(rng, schema, base)
            )
            src, dst = (anchor, alias) if direction == "OUT" else (alias, anchor)
            e_alias = f"e{len(p.edges)}"
            p.edges[e_alias] = PatternEdge(
                alias=e_alias,
                src=src,
                dst=dst,
                constraint=_loosen_edge(rng, schema, t),
                both=allow_both and rng.random() < 0.25,
            )
            placed = True
            break
        if not placed:
            return None
    # a few closing edges where the base assignment admits one
    for _ in range(rng.randrange(0, 2 + len(p.vertices) // 2)):
        pairs = [
            (a, b)
            for a in base_types
            for b in base_types
            if a != b
        ]
        rng.shuffle(pairs)
        for a, b in pairs:
            options = [t for t in triplets if t[0] == base_types[a] and t[2] == base_types[b]]
            if not options:
                continue
            t = rng.choice(options)
            e_alias = f"e{len(p.edges)}"
            p.edges[e_alias] = PatternEdge(
                alias=e_alias, src=a, dst=b, constraint=_loosen_edge(rng, schema, t),
                both=allow_both and rng.random() < 0.25,
            )
            break
    return p


def random_pattern_any(
    rng: random.Random, schema: GraphSchema, max_vertices: int = 4
) -> Pattern:
    """Connected pattern with arbitrary constraint sets (may be invalid)."""
    nv = rng.randrange(1, max_vertices + 1)
    names = sorted(schema.vertex_type_names)
    triplets = list(schema.triplets)
    p = Pattern()

    def vert_constraint():
        k = rng.randrange(1, len(names) + 1)
        return TypeConstraint.union_of(rng.sample(names, k), "V")

    def edge_constraint():
        k = rng.randrange(1, len(triplets) + 1)
        return TypeConstraint.union_of(rng.sample(triplets, k), "E")

    for i in range(nv):
        p.vertices[f"v{i}"] = PatternVertex(alias=f"v{i}", constraint=vert_constraint())
    for i in range(1, nv):
        anchor = f"v{rng.randrange(i)}"
        alias = f"v{i}"
        src, dst = (anchor, alias) if rng.random() < 0.5 else (alias, anchor)
        p.edges[f"e{len(p.edges)}"] = PatternEdge(
            alias=f"e{len(p.edges)}", src=src, dst=dst, constraint=edge_constraint()
        )
    extra = rng.randrange(0, nv)
    for _ in range(extra):
        a, b = rng.sample(sorted(p.vertices), 2) if nv >= 2 else (None, None)
        if a is None:
            break
        p.edges[f"e{len(p.edges)}"] = PatternEdge(
            alias=f"e{len(p.edges)}", src=a, dst=b, constraint=edge_constraint()
        )
    return p
