"""Type constraint inference and validation for patterns.

A worklist fixpoint refines every vertex and edge constraint against the
schema, popping the vertex with the smallest constraint set first. Each
incident edge is filtered to the triplets compatible with both current
endpoint sets and the endpoints shrink to the types those triplets
support; the refinement is direction-sensitive and undirected edges admit
either orientation. An empty constraint anywhere means the pattern cannot
match any graph conforming to the schema.
"""

from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass

from .errors import GuardError
from .graph import GraphSchema, Triplet
from .ir import Pattern, PatternEdge


class _Invalid:
    def __repr__(self):
        return "INVALID"

    def __bool__(self):
        return False


INVALID = _Invalid()

UNFOLD_GUARD = 10**6


@dataclass(frozen=True)
class CandidateTypes:
    """Schema-side neighborhood of one basic vertex type, split by direction."""

    out_vertex: frozenset[str]
    in_vertex: frozenset[str]
    out_edge: frozenset[Triplet]
    in_edge: frozenset[Triplet]

    def is_empty(self) -> bool:
        return not (self.out_vertex or self.in_vertex or self.out_edge or self.in_edge)


def schema_nbr_types(schema: GraphSchema, t: str) -> CandidateTypes:
    """All triplets incident to vertex type ``t`` and the opposite endpoints."""
    if t not in schema.vertex_type_names:
        raise KeyError(f"unknown vertex type {t!r}")
    out_e = frozenset(tr for tr in schema.triplets if tr[0] == t)
    in_e = frozenset(tr for tr in schema.triplets if tr[2] == t)
    return CandidateTypes(
        out_vertex=frozenset(tr[2] for tr in out_e),
        in_vertex=frozenset(tr[0] for tr in in_e),
        out_edge=out_e,
        in_edge=in_e,
    )


def _edge_support(edge: PatternEdge, tau_u, tau_v, u_is_src: bool):
    """Triplets of the edge constraint compatible with both endpoint sets.

    Returns (triplets, u_types, v_types): the surviving triplets and the
    endpoint types they support on each side.
    """
    kept, u_types, v_types = set(), set(), set()
    for t in edge.constraint.members:
        src_t, _, dst_t = t
        if u_is_src or edge.both:
            if src_t in tau_u and dst_t in tau_v:
                kept.add(t)
                u_types.add(src_t)
                v_types.add(dst_t)
        if (not u_is_src) or edge.both:
            if src_t in tau_v and dst_t in tau_u:
                kept.add(t)
                u_types.add(dst_t)
                v_types.add(src_t)
    return kept, u_types, v_types


def infer_and_validate(p: Pattern, schema: GraphSchema):
    """Refine all constraints to a fixpoint; INVALID when any becomes empty.

    The worklist fixpoint alone is tight on tree-shaped patterns; cyclic
    patterns (including parallel edges) get a completion pass that drops
    any candidate no full consistent assignment witnesses, so refined
    constraints always equal the per-position union of valid assignments.
    Operates on a copy; the input pattern is never mutated. Refined
    constraints are always subsets of the inputs.
    """
    p = p.copy()
    nbr_cache = {t: schema_nbr_types(schema, t) for t in schema.vertex_type_names}

    heap: list[tuple[int, str]] = []
    queued: set[str] = set()

    def push(alias: str):
        heapq.heappush(heap, (len(p.vertices[alias].constraint.members), alias))
        queued.add(alias)

    for alias in sorted(p.vertices):
        push(alias)

    while heap:
        size, u = heapq.heappop(heap)
        uv = p.vertices[u]
        if u not in queued or size != len(uv.constraint.members):
            continue  # stale entry
        queued.discard(u)

        incident = p.incident(u)
        needs_out = any(e.src == u and not e.both for e in incident)
        needs_in = any(e.dst == u and not e.both for e in incident)
        needs_any = any(e.both for e in incident)
        tau_u = set(uv.constraint.members)
        for t in sorted(tau_u):
            cand = nbr_cache[t]
            if (
                (needs_out and not cand.out_edge)
                or (needs_in and not cand.in_edge)
                or (needs_any and not (cand.out_edge or cand.in_edge))
            ):
                tau_u.discard(t)
        if not tau_u:
            return INVALID
        if tau_u != set(uv.constraint.members):
            uv.constraint = uv.constraint.with_members(tau_u)

        changed_u = False
        for e in incident:
            v = e.other(u)
            vv = p.vertices[v]
            u_is_src = e.src == u
            if e.src == e.dst:  # self loop: both endpoints are u
                kept = {
                    t
                    for t in e.constraint.members
                    if t[0] == t[2] and t[0] in uv.constraint.members
                }
                if not kept:
                    return INVALID
                if kept != set(e.constraint.members):
                    e.constraint = e.constraint.with_members(kept)
                new_u = {t[0] for t in kept}
                if new_u != set(uv.constraint.members):
                    uv.constraint = uv.constraint.with_members(new_u)
                    changed_u = True
                continue
            kept, u_types, v_types = _edge_support(
                e, uv.constraint.members, vv.constraint.members, u_is_src
            )
            if not kept:
                return INVALID
            if kept != set(e.constraint.members):
                e.constraint = e.constraint.with_members(kept)
            if u_types != set(uv.constraint.members):
                uv.constraint = uv.constraint.with_members(u_types)
                changed_u = True
            if v_types != set(vv.constraint.members):
                vv.constraint = vv.constraint.with_members(v_types)
                if not vv.constraint.members:
                    return INVALID
                push(v)
        if changed_u:
            if not uv.constraint.members:
                return INVALID
            push(u)
    if len(p.edges) > len(p.vertices) - 1:
        return _support_completion(p)
    return p


def _edge_compat(e: PatternEdge, t_src: str, t_dst: str) -> frozenset:
    """Edge constraint members realizable for one endpoint type assignment."""
    out = set()
    for t in e.constraint.members:
        if t[0] == t_src and t[2] == t_dst:
            out.add(t)
        elif e.both and t[0] == t_dst and t[2] == t_src:
            out.add(t)
    return frozenset(out)


def _support_completion(p: Pattern):
    """Keep only candidates some full assignment realizes (cyclic patterns).

    The worklist fixpoint is only locally consistent; around cycles it can
    retain types that no complete assignment uses. Enumerating vertex-type
    assignments over the already-reduced domains and collecting, per
    position, everything they realize yields exactly the assignment union.
    """
    v_aliases = sorted(p.vertices, key=lambda a: (len(p.vertices[a].constraint.members), a))
    total = 1
    for a in v_aliases:
        total *= len(p.vertices[a].constraint.members)
    if total > UNFOLD_GUARD:
        return p  # sound but possibly loose beyond the enumeration guard
    edges_ready: list[list[PatternEdge]] = []
    placed: set[str] = set()
    for a in v_aliases:
        placed.add(a)
        edges_ready.append(
            [e for e in p.incident(a) if e.src in placed and e.dst in placed]
        )
    v_support: dict[str, set] = {a: set() for a in v_aliases}
    e_support: dict[str, set] = {a: set() for a in p.edges}
    assign: dict[str, str] = {}

    def backtrack(i: int):
        if i == len(v_aliases):
            for a in v_aliases:
                v_support[a].add(assign[a])
            for e_alias, e in p.edges.items():
                e_support[e_alias] |= _edge_compat(e, assign[e.src], assign[e.dst])
            return
        alias = v_aliases[i]
        for t in sorted(p.vertices[alias].constraint.members):
            assign[alias] = t
            if all(
                _edge_compat(e, assign[e.src], assign[e.dst]) for e in edges_ready[i]
            ):
                backtrack(i + 1)
        del assign[alias]

    backtrack(0)
    if not any(v_support.values()):
        return INVALID
    for a, v in p.vertices.items():
        if v_support[a] != set(v.constraint.members):
            v.constraint = v.constraint.with_members(v_support[a])
    for a, e in p.edges.items():
        if e_support[a] != set(e.constraint.members):
            e.constraint = e.constraint.with_members(e_support[a])
    return p


def naive_unfold_validate(p: Pattern, schema: GraphSchema) -> list[dict]:
    """Enumerate every all-basic assignment consistent with the schema.

    The independent oracle for infer_and_validate: unfold each union into
    its basic types, try all combinations, keep those whose every edge
    triplet is declared and orientation-consistent.
    """
    declared = set(schema.triplets)
    v_aliases = sorted(p.vertices)
    e_aliases = sorted(p.edges)
    domains = [sorted(p.vertices[a].constraint.members) for a in v_aliases]
    domains += [sorted(p.edges[a].constraint.members) for a in e_aliases]
    total = 1
    for d in domains:
        total *= max(len(d), 1)
        if total > UNFOLD_GUARD:
            raise GuardError(f"unfold space exceeds {UNFOLD_GUARD}")
    out = []
    for combo in itertools.product(*domains):
        assign = dict(zip(v_aliases + e_aliases, combo))
        ok = True
        for a in e_aliases:
            e = p.edges[a]
            t = assign[a]
            if t not in declared:
                ok = False
                break
            fwd = t[0] == assign[e.src] and t[2] == assign[e.dst]
            bwd = e.both and t[0] == assign[e.dst] and t[2] == assign[e.src]
            if not (fwd or bwd):
                ok = False
                break
        if ok:
            out.append(assign)
    return out
