"""High-order pattern statistics catalogue.

Stores exact homomorphism counts for every connected all-basic pattern up
to ``max_k`` vertices expressible in the schema (one edge per ordered
endpoint pair and triplet; loop-free), keyed by a canonical code that is
invariant under alias relabeling. Frequencies of union patterns are
estimated from expand ratios over low-order statistics, recursing through
one deterministic decomposition and memoized back into the catalogue.
"""

from __future__ import annotations

import base64
import itertools
import json
import logging
from dataclasses import dataclass, field

from .errors import GuardError
from .graph import GraphSchema, PropertyGraph, TypeCounts, type_counts
from .ir import Pattern, PatternEdge, PatternVertex, TypeConstraint

log = logging.getLogger(__name__)

MAX_CANONICAL_VERTICES = 8
MAX_BUILD_K = 4
MAX_JOIN_SPLIT_EDGES = 10
MAX_BUILD_PATTERNS = 20000
MAX_RECORDED_JOIN_EDGES = 5  # per-pattern edge budget for stored join records


# ---------------------------------------------------------------------------
# Canonical codes
# ---------------------------------------------------------------------------


def _vertex_label(v: PatternVertex) -> tuple:
    return tuple(sorted(v.constraint.members))


def _edge_label(e: PatternEdge) -> tuple:
    return (
        tuple(sorted(f"{s}-{l}->{d}" for s, l, d in e.constraint.members)),
        e.both,
        e.hops,
    )


def canonicalize(p: Pattern) -> bytes:
    """Canonical byte code, equal exactly for isomorphic patterns.

    Aliases and predicates are excluded; directions, undirectedness, hop
    counts, vertex type sets and edge triplet sets all distinguish.
    """
    n = len(p.vertices)
    if n > MAX_CANONICAL_VERTICES:
        raise GuardError(f"canonicalize supports at most {MAX_CANONICAL_VERTICES} vertices")
    aliases = sorted(p.vertices)
    vlabels = {a: _vertex_label(p.vertices[a]) for a in aliases}
    edges = [
        (e.src, e.dst, _edge_label(e), e.both) for _, e in sorted(p.edges.items())
    ]

    if n <= 5:
        cells = [list(aliases)]
    else:
        cells = _refined_cells(aliases, vlabels, edges)

    best = None
    for perm in _cell_permutations(cells):
        index = {a: i for i, a in enumerate(perm)}
        venc = tuple(vlabels[a] for a in perm)
        eenc = []
        for src, dst, label, both in edges:
            i, j = index[src], index[dst]
            if both:
                eenc.append((min(i, j), max(i, j), 1, label))
            else:
                eenc.append((i, j, 0, label))
        enc = (venc, tuple(sorted(eenc)))
        if best is None or enc < best:
            best = enc
    return repr(best).encode()


def _refined_cells(aliases, vlabels, edges):
    """Color refinement partition; cells ordered by relabel-invariant color."""
    adj: dict[str, list[tuple]] = {a: [] for a in aliases}
    for src, dst, label, both in edges:
        role_s, role_d = ("b", "b") if both else ("o", "i")
        adj[src].append((label, role_s, dst))
        adj[dst].append((label, role_d, src))
    color = {a: (vlabels[a],) for a in aliases}
    for _ in range(len(aliases)):
        sig = {
            a: (color[a], tuple(sorted((lbl, role, color[o]) for lbl, role, o in adj[a])))
            for a in aliases
        }
        ranks = {s: i for i, s in enumerate(sorted(set(sig.values())))}
        new_color = {a: (ranks[sig[a]],) for a in aliases}
        if _partition(new_color, aliases) == _partition(color, aliases):
            color = {a: sig[a] for a in aliases}
            break
        color = {a: sig[a] for a in aliases}
    groups: dict = {}
    for a in aliases:
        groups.setdefault(color[a], []).append(a)
    return [sorted(groups[c]) for c in sorted(groups)]


def _partition(color, aliases):
    groups: dict = {}
    for a in aliases:
        groups.setdefault(color[a], set()).add(a)
    return frozenset(frozenset(g) for g in groups.values())


def _cell_permutations(cells):
    pools = [list(itertools.permutations(cell)) for cell in cells]
    for combo in itertools.product(*pools):
        perm = []
        for part in combo:
            perm.extend(part)
        yield perm


# ---------------------------------------------------------------------------
# Catalogue structure
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExpandRec:
    """Stored transformation: source pattern extended by one vertex."""

    src_code: bytes
    dst_code: bytes
    new_vertex_types: tuple[str, ...]
    sigmas: tuple[float, ...]


@dataclass(frozen=True)
class JoinRec:
    """Stored transformation: two sub-patterns joined into the target."""

    src1_code: bytes
    src2_code: bytes
    src2_freq: float
    dst_code: bytes


@dataclass
class GLogue:
    max_k: int
    freq: dict[bytes, float] = field(default_factory=dict)
    expand_edges: list[ExpandRec] = field(default_factory=list)
    join_edges: list[JoinRec] = field(default_factory=list)

    def memoize(self, code: bytes, value: float) -> float:
        """Insert-if-absent; the first computed value wins."""
        return self.freq.setdefault(code, value)

    def to_obj(self) -> dict:
        enc = lambda c: base64.b64encode(c).decode()
        return {
            "k": self.max_k,
            "patterns": [
                {"code": enc(c), "freq": f} for c, f in sorted(self.freq.items())
            ],
            "expand_edges": [
                {
                    "src": enc(r.src_code),
                    "dst": enc(r.dst_code),
                    "new_vertex_types": list(r.new_vertex_types),
                    "sigmas": list(r.sigmas),
                }
                for r in self.expand_edges
            ],
            "join_edges": [
                {
                    "src1": enc(r.src1_code),
                    "src2": enc(r.src2_code),
                    "src2_freq": r.src2_freq,
                    "dst": enc(r.dst_code),
                }
                for r in self.join_edges
            ],
        }

    def save(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_obj(), fh, indent=2, sort_keys=True)

    @staticmethod
    def from_obj(obj: dict) -> GLogue:
        dec = lambda s: base64.b64decode(s)
        gl = GLogue(max_k=obj["k"])
        for entry in obj["patterns"]:
            gl.freq[dec(entry["code"])] = entry["freq"]
        for entry in obj.get("expand_edges", ()):
            gl.expand_edges.append(
                ExpandRec(
                    src_code=dec(entry["src"]),
                    dst_code=dec(entry["dst"]),
                    new_vertex_types=tuple(entry["new_vertex_types"]),
                    sigmas=tuple(entry["sigmas"]),
                )
            )
        for entry in obj.get("join_edges", ()):
            gl.join_edges.append(
                JoinRec(
                    src1_code=dec(entry["src1"]),
                    src2_code=dec(entry["src2"]),
                    src2_freq=entry["src2_freq"],
                    dst_code=dec(entry["dst"]),
                )
            )
        return gl

    @staticmethod
    def load(path) -> GLogue:
        with open(path) as fh:
            return GLogue.from_obj(json.load(fh))


# ---------------------------------------------------------------------------
# Candidates (decompositions producing a pattern)
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class ExpandCand:
    new_vertex: str
    edge_aliases: tuple[str, ...]
    source: Pattern


@dataclass(frozen=True)
class JoinCand:
    left: Pattern
    right: Pattern


def _connected(vertices: set[str], edges, p: Pattern) -> bool:
    if not vertices:
        return False
    nbrs: dict[str, set[str]] = {v: set() for v in vertices}
    for a in edges:
        e = p.edges[a]
        nbrs[e.src].add(e.dst)
        nbrs[e.dst].add(e.src)
    start = next(iter(sorted(vertices)))
    seen = {start}
    stack = [start]
    while stack:
        for nbr in nbrs[stack.pop()]:
            if nbr not in seen:
                seen.add(nbr)
                stack.append(nbr)
    return seen == vertices


def expand_candidates(p: Pattern) -> list[ExpandCand]:
    out = []
    if len(p.vertices) < 2:
        return out
    for v in sorted(p.vertices):
        incident = [e.alias for e in p.incident(v)]
        rem_v = set(p.vertices) - {v}
        rem_e = set(p.edges) - set(incident)
        if not _connected(rem_v, rem_e, p):
            continue
        out.append(
            ExpandCand(
                new_vertex=v,
                edge_aliases=tuple(sorted(incident)),
                source=p.restrict(rem_v, rem_e),
            )
        )
    return out


def join_candidates(p: Pattern) -> list[JoinCand]:
    edges = sorted(p.edges)
    if len(edges) < 2:
        return []
    if len(edges) > MAX_JOIN_SPLIT_EDGES:
        log.debug("skipping join candidates: %d edges exceed split guard", len(edges))
        return []
    seen = set()
    out = []
    full = (frozenset(p.vertices), frozenset(p.edges))
    for assignment in itertools.product((1, 2, 3), repeat=len(edges)):
        e1 = {a for a, side in zip(edges, assignment) if side in (1, 3)}
        e2 = {a for a, side in zip(edges, assignment) if side in (2, 3)}
        if not e1 or not e2:
            continue
        v1 = {x for a in e1 for x in (p.edges[a].src, p.edges[a].dst)}
        v2 = {x for a in e2 for x in (p.edges[a].src, p.edges[a].dst)}
        side1 = (frozenset(v1), frozenset(e1))
        side2 = (frozenset(v2), frozenset(e2))
        if side1 == full or side2 == full:
            continue
        if not (v1 & v2):
            continue
        if not _connected(v1, e1, p) or not _connected(v2, e2, p):
            continue
        key = tuple(sorted([(tuple(sorted(v1)), tuple(sorted(e1))),
                            (tuple(sorted(v2)), tuple(sorted(e2)))]))
        if key in seen:
            continue
        seen.add(key)
        (lv, le), (rv, re_) = key
        out.append(JoinCand(left=p.restrict(set(lv), set(le)),
                            right=p.restrict(set(rv), set(re_))))
    out.sort(key=lambda c: (tuple(sorted(c.left.vertices)), tuple(sorted(c.left.edges)),
                            tuple(sorted(c.right.edges))))
    return out


def get_candidates(gl: GLogue, p: Pattern) -> list:
    """All Expand and Join transformations producing p, deterministically ordered.

    Structural enumeration; for stored basic patterns this coincides with
    the catalogue's recorded transformation edges.
    """
    return list(expand_candidates(p)) + list(join_candidates(p))


# ---------------------------------------------------------------------------
# Expand ratios and frequency estimation
# ---------------------------------------------------------------------------


def _oriented_edge_freq(p: Pattern, e: PatternEdge, low_order: TypeCounts) -> float:
    """Total count of data edges the pattern edge can match, per orientation."""
    src_m = p.vertices[e.src].constraint.members
    dst_m = p.vertices[e.dst].constraint.members
    total = 0
    for t in e.constraint.members:
        if t[0] in src_m and t[2] in dst_m:
            total += low_order.edges.get(t, 0)
        if e.both and e.src != e.dst and t[0] in dst_m and t[2] in src_m:
            total += low_order.edges.get(t, 0)
    return float(total)


def _vertex_freq(p: Pattern, alias: str, low_order: TypeCounts) -> float:
    return float(
        sum(low_order.vertices.get(t, 0) for t in p.vertices[alias].constraint.members)
    )


def expand_ratio(
    p: Pattern, edge_alias: str, new_vertex: str, low_order: TypeCounts, closing: bool
) -> float:
    """Estimated per-mapping multiplicity of appending one typed edge.

    For a fresh target vertex this is edge count over anchor count; once
    the target is already present the edge merely closes a cycle, so the
    denominator also carries the target count.
    """
    e = p.edges[edge_alias]
    anchor = e.other(new_vertex)
    num = _oriented_edge_freq(p, e, low_order)
    den = _vertex_freq(p, anchor, low_order)
    if closing or e.src == e.dst:
        den *= _vertex_freq(p, new_vertex, low_order)
    if den == 0:
        log.debug("expand ratio of %s has zero denominator; pattern cannot match", edge_alias)
        return 0.0
    return num / den


def extension_sigmas(
    p: Pattern, new_vertex: str, edge_aliases, low_order: TypeCounts
) -> tuple[float, ...]:
    """Expand-ratio sequence for one vertex extension, in edge-alias order.

    The first non-loop edge discovers the new vertex; every other edge
    (and any self loop) closes onto vertices already present.
    """
    sigmas = []
    discovered = False
    for a in edge_aliases:
        e = p.edges[a]
        loop = e.src == e.dst
        closing = discovered or loop
        sigmas.append(expand_ratio(p, a, new_vertex, low_order, closing))
        if not loop:
            discovered = True
    return tuple(sigmas)


def join_freq(f1: float, f2: float, f_common: float) -> float:
    """Independence estimate for a join decomposition; zero-safe."""
    if f_common == 0:
        return 0.0
    return f1 * f2 / f_common


def _schema_compatible(p: Pattern) -> bool:
    for e in p.edges.values():
        src_m = p.vertices[e.src].constraint.members
        dst_m = p.vertices[e.dst].constraint.members
        ok = any(
            (t[0] in src_m and t[2] in dst_m)
            or (e.both and t[0] in dst_m and t[2] in src_m)
            for t in e.constraint.members
        )
        if not ok:
            return False
    return True


def _peel_choice(p: Pattern) -> str:
    """Removable vertex with the smallest constraint-set product, alias tiebreak."""
    best = None
    for v in sorted(p.vertices):
        incident = [e.alias for e in p.incident(v)]
        rem_v = set(p.vertices) - {v}
        rem_e = set(p.edges) - set(incident)
        if not rem_v or not _connected(rem_v, rem_e, p):
            continue
        product = len(p.vertices[v].constraint.members)
        for a in incident:
            product *= len(p.edges[a].constraint.members)
        if best is None or (product, v) < best:
            best = (product, v)
    if best is None:
        raise GuardError("no removable vertex keeps the pattern connected")
    return best[1]


def get_freq(gl: GLogue, p: Pattern, low_order: TypeCounts) -> float:
    """Pattern frequency: exact for stored basics, estimated otherwise.

    Size-1 and single-edge patterns come from low-order statistics; larger
    union patterns peel one vertex (smallest constraint-set product) and
    multiply expand ratios, recursing until a stored or base pattern is
    reached. Estimates are memoized into the catalogue, first value wins.
    """
    code = canonicalize(p)
    if code in gl.freq:
        return float(gl.freq[code])
    if not _schema_compatible(p):
        return float(gl.memoize(code, 0.0))
    if not p.edges:
        if len(p.vertices) != 1:
            raise GuardError("pattern without edges must be a single vertex")
        alias = next(iter(p.vertices))
        return float(gl.memoize(code, _vertex_freq(p, alias, low_order)))
    if len(p.vertices) == 1:  # self loops only
        alias = next(iter(p.vertices))
        val = _vertex_freq(p, alias, low_order)
        for a in sorted(p.edges):
            val *= expand_ratio(p, a, alias, low_order, closing=True)
        return float(gl.memoize(code, val))
    if len(p.vertices) == 2 and len(p.edges) == 1:
        e = next(iter(p.edges.values()))
        return float(gl.memoize(code, _oriented_edge_freq(p, e, low_order)))
    v = _peel_choice(p)
    incident = tuple(sorted(e.alias for e in p.incident(v)))
    source = p.restrict(set(p.vertices) - {v}, set(p.edges) - set(incident))
    base = get_freq(gl, source, low_order)
    val = base
    for sigma in extension_sigmas(p, v, incident, low_order):
        val *= sigma
    return float(gl.memoize(code, val))


# ---------------------------------------------------------------------------
# Catalogue construction
# ---------------------------------------------------------------------------


def _basic_pattern(vertices, edges) -> Pattern:
    p = Pattern()
    for alias, t in vertices:
        p.vertices[alias] = PatternVertex(alias=alias, constraint=TypeConstraint.basic(t, "V"))
    for alias, src, dst, triplet in edges:
        p.edges[alias] = PatternEdge(
            alias=alias, src=src, dst=dst, constraint=TypeConstraint.basic(triplet, "E")
        )
    return p


def _extensions(p: Pattern, schema: GraphSchema, k: int):
    """One-step extensions: a new vertex over one triplet, or a closing edge."""
    n = len(p.vertices)
    existing = {
        (e.src, e.dst, next(iter(e.constraint.members))) for e in p.edges.values()
    }
    out = []
    if n < k:
        new_alias = f"x{n}"
        for a in sorted(p.vertices):
            t_a = next(iter(p.vertices[a].constraint.members))
            for tr in schema.triplets:
                if tr[0] == t_a:
                    q = p.copy()
                    q.vertices[new_alias] = PatternVertex(
                        alias=new_alias, constraint=TypeConstraint.basic(tr[2], "V")
                    )
                    q.edges[f"y{len(q.edges)}"] = PatternEdge(
                        alias=f"y{len(q.edges)}", src=a, dst=new_alias,
                        constraint=TypeConstraint.basic(tr, "E"),
                    )
                    out.append(q)
                if tr[2] == t_a:
                    q = p.copy()
                    q.vertices[new_alias] = PatternVertex(
                        alias=new_alias, constraint=TypeConstraint.basic(tr[0], "V")
                    )
                    q.edges[f"y{len(q.edges)}"] = PatternEdge(
                        alias=f"y{len(q.edges)}", src=new_alias, dst=a,
                        constraint=TypeConstraint.basic(tr, "E"),
                    )
                    out.append(q)
    for a, b in itertools.permutations(sorted(p.vertices), 2):
        t_a = next(iter(p.vertices[a].constraint.members))
        t_b = next(iter(p.vertices[b].constraint.members))
        for tr in schema.triplets:
            if tr[0] == t_a and tr[2] == t_b and (a, b, tr) not in existing:
                q = p.copy()
                q.edges[f"y{len(q.edges)}"] = PatternEdge(
                    alias=f"y{len(q.edges)}", src=a, dst=b,
                    constraint=TypeConstraint.basic(tr, "E"),
                )
                out.append(q)
    return out


def enumerate_basic_patterns(schema: GraphSchema, k: int) -> dict[bytes, Pattern]:
    """All connected all-basic patterns with at most k vertices.

    One edge per (ordered endpoint pair, triplet); no self loops. Keyed by
    canonical code, values are representative pattern objects.
    """
    stored: dict[bytes, Pattern] = {}
    queue: list[Pattern] = []
    for t in sorted(schema.vertex_type_names):
        p = _basic_pattern([("x0", t)], [])
        code = canonicalize(p)
        stored[code] = p
        queue.append(p)
    while queue:
        p = queue.pop()
        for q in _extensions(p, schema, k):
            code = canonicalize(q)
            if code in stored:
                continue
            if len(stored) >= MAX_BUILD_PATTERNS:
                raise GuardError(
                    f"catalogue enumeration exceeds {MAX_BUILD_PATTERNS} patterns; "
                    f"the schema's per-pair label multiplicity is too high for k={k}"
                )
            stored[code] = q
            queue.append(q)
    return stored


def build(g: PropertyGraph, schema: GraphSchema, k: int = 3) -> GLogue:
    """Enumerate and count all basic patterns up to k vertices.

    Counting goes through the executor's brute-force matcher; expand and
    join transformation edges between stored patterns are recorded along
    with their measured expand ratios.
    """
    from .executor import brute_force_count

    if not 3 <= k <= MAX_BUILD_K:
        raise GuardError(f"catalogue k must be between 3 and {MAX_BUILD_K}")
    gl = GLogue(max_k=k)
    low_order = type_counts(g)
    stored = enumerate_basic_patterns(schema, k)
    for code, p in stored.items():
        if not p.edges:
            t = next(iter(p.vertices.values())).constraint.members
            gl.freq[code] = low_order.vertices.get(next(iter(t)), 0)
        else:
            gl.freq[code] = brute_force_count(p, g)
    for code in sorted(stored):
        p = stored[code]
        for cand in expand_candidates(p):
            gl.expand_edges.append(
                ExpandRec(
                    src_code=canonicalize(cand.source),
                    dst_code=code,
                    new_vertex_types=tuple(
                        sorted(p.vertices[cand.new_vertex].constraint.members)
                    ),
                    sigmas=extension_sigmas(p, cand.new_vertex, cand.edge_aliases, low_order),
                )
            )
        if len(p.edges) <= MAX_RECORDED_JOIN_EDGES:
            for cand in join_candidates(p):
                gl.join_edges.append(
                    JoinRec(
                        src1_code=canonicalize(cand.left),
                        src2_code=canonicalize(cand.right),
                        src2_freq=float(gl.freq.get(canonicalize(cand.right), 0)),
                        dst_code=code,
                    )
                )
    return gl
