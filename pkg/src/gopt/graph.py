"""In-memory property graph store, schema registry and data ingestion.

Vertex and edge ids are dense non-negative integers assigned at load time;
the external ids from the CSV are kept in a sidecar table and also exposed
as the ``id`` property when the row does not define one itself.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass

from .errors import GraphLoadError, SchemaError

# (src_type, label, dst_type)
Triplet = tuple[str, str, str]

PROPERTY_TYPES = ("Integer", "Float", "String", "Boolean", "List")


@dataclass(frozen=True)
class GraphSchema:
    """Declares the valid vertex types and (src, label, dst) edge triplets."""

    vertex_types: tuple[tuple[str, tuple[tuple[str, str], ...]], ...]
    edge_types: tuple[tuple[Triplet, tuple[tuple[str, str], ...]], ...]
    supertypes: tuple[tuple[str, tuple[str, ...]], ...] = ()

    def __post_init__(self):
        names = [name for name, _ in self.vertex_types]
        if len(set(names)) != len(names):
            raise SchemaError("duplicate vertex type name")
        triplets = [t for t, _ in self.edge_types]
        if len(set(triplets)) != len(triplets):
            raise SchemaError("duplicate edge triplet")
        declared = set(names)
        for (src, label, dst), _props in self.edge_types:
            for endpoint in (src, dst):
                if endpoint not in declared:
                    raise SchemaError(
                        f"edge triplet {src}-{label}->{dst} references "
                        f"undeclared vertex type {endpoint!r}"
                    )
        for macro, members in self.supertypes:
            if macro in declared:
                raise SchemaError(f"supertype {macro!r} collides with a vertex type")
            for m in members:
                if m not in declared:
                    raise SchemaError(f"supertype {macro!r} references undeclared type {m!r}")

    @property
    def vertex_type_names(self) -> frozenset[str]:
        return frozenset(name for name, _ in self.vertex_types)

    @property
    def triplets(self) -> tuple[Triplet, ...]:
        return tuple(t for t, _ in self.edge_types)

    @property
    def edge_labels(self) -> frozenset[str]:
        return frozenset(t[1] for t, _ in self.edge_types)

    def triplets_with_label(self, label: str) -> tuple[Triplet, ...]:
        return tuple(t for t, _ in self.edge_types if t[1] == label)

    def supertype_members(self, name: str) -> tuple[str, ...] | None:
        for macro, members in self.supertypes:
            if macro == name:
                return members
        return None

    def vertex_properties(self, type_name: str) -> dict[str, str]:
        for name, props in self.vertex_types:
            if name == type_name:
                return dict(props)
        raise SchemaError(f"unknown vertex type {type_name!r}")


def _parse_props_decl(raw, where: str) -> tuple[tuple[str, str], ...]:
    out = []
    seen = set()
    for p in raw or ():
        if not isinstance(p, dict) or "name" not in p or "type" not in p:
            raise SchemaError(f"{where}: property entries need 'name' and 'type'")
        if p["type"] not in PROPERTY_TYPES:
            raise SchemaError(f"{where}: unsupported property type {p['type']!r}")
        if p["name"] in seen:
            raise SchemaError(f"{where}: duplicate property {p['name']!r}")
        seen.add(p["name"])
        out.append((p["name"], p["type"]))
    return tuple(out)


def load_schema(path) -> GraphSchema:
    """Parse and validate a schema JSON file."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except OSError as e:
        raise SchemaError(f"cannot read schema file: {e}") from e
    except json.JSONDecodeError as e:
        raise SchemaError(f"schema is not valid JSON: line {e.lineno}: {e.msg}") from e
    if not isinstance(doc, dict) or "vertex_types" not in doc:
        raise SchemaError("schema must be an object with a 'vertex_types' array")
    vts = []
    for entry in doc["vertex_types"]:
        if "name" not in entry:
            raise SchemaError("vertex type entry missing 'name'")
        vts.append((entry["name"], _parse_props_decl(entry.get("properties"), entry["name"])))
    ets = []
    for entry in doc.get("edge_types", ()):
        for key in ("src", "label", "dst"):
            if key not in entry:
                raise SchemaError(f"edge type entry missing {key!r}")
        triplet = (entry["src"], entry["label"], entry["dst"])
        ets.append((triplet, _parse_props_decl(entry.get("properties"), entry["label"])))
    supertypes = tuple(
        (macro, tuple(members)) for macro, members in sorted(doc.get("supertypes", {}).items())
    )
    return GraphSchema(vertex_types=tuple(vts), edge_types=tuple(ets), supertypes=supertypes)


@dataclass
class TypeCounts:
    """Low-order statistics: exact per-type vertex and per-triplet edge counts."""

    vertices: dict[str, int]
    edges: dict[Triplet, int]

    def vertex_total(self) -> int:
        return sum(self.vertices.values())

    def edge_total(self) -> int:
        return sum(self.edges.values())


class PropertyGraph:
    """Immutable-after-load directed property graph with typed adjacency.

    Adjacency lists are stored per (direction, triplet) so type-filtered
    expansion is a contiguous scan; edge ids within a bucket ascend.
    """

    def __init__(self, schema: GraphSchema):
        self.schema = schema
        self.vtype: list[str] = []
        self.vprops: list[dict] = []
        self.ext_ids: list[int] = []
        self._ext2int: dict[int, int] = {}
        self.esrc: list[int] = []
        self.edst: list[int] = []
        self.etriplet: list[Triplet] = []
        self.eprops: list[dict] = []
        self.out_adj: list[dict[Triplet, list[int]]] = []
        self.in_adj: list[dict[Triplet, list[int]]] = []
        self.by_type: dict[str, list[int]] = {name: [] for name in schema.vertex_type_names}

    # -- construction -------------------------------------------------

    def add_vertex(self, ext_id: int, type_name: str, props: dict) -> int:
        if type_name not in self.by_type:
            raise GraphLoadError(f"vertex {ext_id}: unknown type {type_name!r}")
        if ext_id in self._ext2int:
            raise GraphLoadError(f"duplicate vertex id {ext_id}")
        vid = len(self.vtype)
        self.vtype.append(type_name)
        props = dict(props)
        props.setdefault("id", ext_id)
        self.vprops.append(props)
        self.ext_ids.append(ext_id)
        self._ext2int[ext_id] = vid
        self.out_adj.append({})
        self.in_adj.append({})
        self.by_type[type_name].append(vid)
        return vid

    def add_edge(self, src: int, dst: int, label: str, props: dict) -> int:
        triplet = (self.vtype[src], label, self.vtype[dst])
        if triplet not in set(self.schema.triplets):
            raise GraphLoadError(
                f"edge {triplet[0]}-{label}->{triplet[2]} is not declared in the schema"
            )
        eid = len(self.esrc)
        self.esrc.append(src)
        self.edst.append(dst)
        self.etriplet.append(triplet)
        self.eprops.append(dict(props))
        self.out_adj[src].setdefault(triplet, []).append(eid)
        self.in_adj[dst].setdefault(triplet, []).append(eid)
        return eid

    # -- accessors ----------------------------------------------------

    @property
    def num_vertices(self) -> int:
        return len(self.vtype)

    @property
    def num_edges(self) -> int:
        return len(self.esrc)

    def vertex_by_external(self, ext_id: int) -> int:
        return self._ext2int[ext_id]

    def vertices_of_types(self, types) -> list[int]:
        out = []
        for t in sorted(types):
            out.extend(self.by_type.get(t, ()))
        return out

    def edge_ids(self, v: int, direction: str, triplets=None) -> list[int]:
        """Edge ids incident to v in the given direction, ascending by id."""
        adj = self.out_adj[v] if direction == "OUT" else self.in_adj[v]
        if triplets is None:
            ids = [eid for key in sorted(adj) for eid in adj[key]]
        else:
            ids = [eid for key in sorted(triplets) for eid in adj.get(key, ())]
        ids.sort()
        return ids

    def vertex_value(self, vid: int):
        from .ir import VertexVal

        return VertexVal(id=self.ext_ids[vid], type=self.vtype[vid], properties=self.vprops[vid])

    def edge_value(self, eid: int):
        from .ir import EdgeVal

        return EdgeVal(
            id=eid,
            src_id=self.ext_ids[self.esrc[eid]],
            dst_id=self.ext_ids[self.edst[eid]],
            type=self.etriplet[eid],
            properties=self.eprops[eid],
        )

    def check_consistency(self):
        """Adjacency lists reconstruct the edge set exactly, both directions."""
        seen_out, seen_in = set(), set()
        for v, adj in enumerate(self.out_adj):
            for triplet, eids in adj.items():
                for eid in eids:
                    assert self.esrc[eid] == v and self.etriplet[eid] == triplet
                    seen_out.add(eid)
        for v, adj in enumerate(self.in_adj):
            for triplet, eids in adj.items():
                for eid in eids:
                    assert self.edst[eid] == v and self.etriplet[eid] == triplet
                    seen_in.add(eid)
        assert seen_out == seen_in == set(range(self.num_edges))


def _parse_prop_value(value, where: str):
    if value is None or isinstance(value, (bool, int, float, str)):
        return value
    if isinstance(value, list):
        kinds = {type(v) for v in value}
        if len(kinds) > 1:
            raise GraphLoadError(f"{where}: list property values must be homogeneous")
        if kinds and not issubclass(next(iter(kinds)), (bool, int, float, str)):
            raise GraphLoadError(f"{where}: list elements must be primitive values")
        return value
    raise GraphLoadError(f"{where}: unsupported property value {value!r}")


def _parse_props_cell(cell: str, where: str) -> dict:
    if not cell or not cell.strip():
        return {}
    try:
        doc = json.loads(cell)
    except json.JSONDecodeError as e:
        raise GraphLoadError(f"{where}: properties cell is not valid JSON: {e.msg}") from e
    if not isinstance(doc, dict):
        raise GraphLoadError(f"{where}: properties cell must be a JSON object")
    return {k: _parse_prop_value(v, where) for k, v in doc.items()}


def load_graph(schema: GraphSchema, vertices_path, edges_path) -> PropertyGraph:
    """Load vertices and edges from CSV files and build adjacency."""
    g = PropertyGraph(schema)
    with open(vertices_path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"id", "label", "properties"}
        if not required.issubset(reader.fieldnames or ()):
            raise GraphLoadError(f"vertices CSV must have columns {sorted(required)}")
        for lineno, row in enumerate(reader, start=2):
            where = f"{vertices_path}:{lineno}"
            try:
                ext_id = int(row["id"])
            except (TypeError, ValueError):
                raise GraphLoadError(f"{where}: malformed vertex id {row.get('id')!r}")
            g.add_vertex(ext_id, row["label"], _parse_props_cell(row["properties"], where))
    with open(edges_path, newline="") as fh:
        reader = csv.DictReader(fh)
        required = {"src", "dst", "label", "properties"}
        if not required.issubset(reader.fieldnames or ()):
            raise GraphLoadError(f"edges CSV must have columns {sorted(required)}")
        for lineno, row in enumerate(reader, start=2):
            where = f"{edges_path}:{lineno}"
            try:
                ext_src, ext_dst = int(row["src"]), int(row["dst"])
            except (TypeError, ValueError):
                raise GraphLoadError(f"{where}: malformed edge endpoints")
            for ext in (ext_src, ext_dst):
                if ext not in g._ext2int:
                    raise GraphLoadError(f"{where}: edge references missing vertex id {ext}")
            src, dst = g.vertex_by_external(ext_src), g.vertex_by_external(ext_dst)
            for col, vid in (("src_label", src), ("dst_label", dst)):
                declared = (row.get(col) or "").strip()
                if declared and declared != g.vtype[vid]:
                    raise GraphLoadError(
                        f"{where}: {col}={declared!r} does not match vertex type {g.vtype[vid]!r}"
                    )
            try:
                g.add_edge(src, dst, row["label"], _parse_props_cell(row["properties"], where))
            except GraphLoadError as e:
                raise GraphLoadError(f"{where}: {e}") from e
    g.check_consistency()
    return g


def neighbors(g: PropertyGraph, v: int, direction: str, edge_type_filter=None):
    """Adjacent (edge id, neighbor vertex id) pairs, sorted by edge id.

    ``edge_type_filter`` is a set of triplets, or None for all.
    """
    if not 0 <= v < g.num_vertices:
        raise GraphLoadError(f"unknown vertex id {v}")
    if direction not in ("OUT", "IN"):
        raise ValueError(f"direction must be OUT or IN, got {direction!r}")
    eids = g.edge_ids(v, direction, edge_type_filter)
    other = g.edst if direction == "OUT" else g.esrc
    return [(eid, other[eid]) for eid in eids]


def type_counts(g: PropertyGraph) -> TypeCounts:
    """Exact per-type vertex counts and per-triplet edge counts."""
    vcounts = {name: len(ids) for name, ids in g.by_type.items()}
    ecounts: dict[Triplet, int] = {t: 0 for t in g.schema.triplets}
    for t in g.etriplet:
        ecounts[t] += 1
    return TypeCounts(vertices=vcounts, edges=ecounts)
