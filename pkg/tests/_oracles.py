"""Independent oracles: exhaustive isomorphism check and plan-cost enumeration.

These deliberately avoid the candidate-enumeration and search code they
are used to verify; only the leaf formulas (frequencies, expand ratios)
are shared, since they define the objective being minimized.
"""

from __future__ import annotations

import itertools
from collections import Counter

from gopt.glogue import expand_ratio, get_freq
from gopt.ir import Pattern


def _edge_sig(e, mapping=None):
    src = mapping[e.src] if mapping else e.src
    dst = mapping[e.dst] if mapping else e.dst
    label = (tuple(sorted(map(str, e.constraint.members))), e.hops)
    if e.both:
        return (tuple(sorted((src, dst))), "both", label)
    return (src, dst, "dir", label)


def patterns_isomorphic(p1: Pattern, p2: Pattern) -> bool:
    """Try every vertex bijection; compare labeled edge multisets."""
    if len(p1.vertices) != len(p2.vertices) or len(p1.edges) != len(p2.edges):
        return False
    a1, a2 = sorted(p1.vertices), sorted(p2.vertices)
    target = Counter(_edge_sig(e) for e in p2.edges.values())
    labels2 = {a: tuple(sorted(p2.vertices[a].constraint.members)) for a in a2}
    labels1 = {a: tuple(sorted(p1.vertices[a].constraint.members)) for a in a1}
    for perm in itertools.permutations(a2):
        mapping = dict(zip(a1, perm))
        if any(labels1[a] != labels2[mapping[a]] for a in a1):
            continue
        got = Counter(_edge_sig(e, mapping) for e in p1.edges.values())
        if got == target:
            return True
    return False


def _connected(vset, eset, p: Pattern) -> bool:
    if not vset:
        return False
    nbrs = {v: set() for v in vset}
    for a in eset:
        e = p.edges[a]
        nbrs[e.src].add(e.dst)
        nbrs[e.dst].add(e.src)
    seen = {next(iter(vset))}
    stack = list(seen)
    while stack:
        for n in nbrs[stack.pop()]:
            if n not in seen:
                seen.add(n)
                stack.append(n)
    return seen == set(vset)


def _sigmas(p: Pattern, sub: Pattern, v: str, incident, lo):
    sigmas = []
    discovered = False
    for a in sorted(incident):
        closing = discovered
        sigmas.append(expand_ratio(sub, a, v, lo, closing))
        discovered = True
    return sigmas


def min_plan_cost(p: Pattern, gl, lo, alpha_expand=1.0, alpha_join=1.0) -> float:
    """Minimum model cost over every expand/join plan tree.

    Size-1 and single-edge sub-patterns are bases costed at their
    frequency; every larger sub-pattern tries all single-vertex removals
    keeping the remainder connected and all covering connected splits.
    """
    memo: dict = {}

    def freq(vset, eset) -> float:
        return get_freq(gl, p.restrict(vset, eset), lo)

    def solve(vset: frozenset, eset: frozenset) -> float:
        key = (vset, eset)
        if key in memo:
            return memo[key]
        if (len(vset) == 1 and not eset) or (len(vset) == 2 and len(eset) == 1):
            memo[key] = freq(vset, eset)
            return memo[key]
        sub = p.restrict(vset, eset)
        f = freq(vset, eset)
        best = float("inf")
        for v in vset:
            incident = frozenset(
                a for a in eset if v in (p.edges[a].src, p.edges[a].dst)
            )
            rv, re_ = vset - {v}, eset - incident
            if not rv or not _connected(rv, re_, p):
                continue
            f_src = freq(rv, re_)
            sig = _sigmas(p, sub, v, incident, lo)
            cost = solve(rv, re_) + f + alpha_expand * f_src * sum(sig)
            best = min(best, cost)
        edges = sorted(eset)
        if 2 <= len(edges) <= 10:
            for marks in itertools.product((1, 2, 3), repeat=len(edges)):
                e1 = frozenset(a for a, m in zip(edges, marks) if m in (1, 3))
                e2 = frozenset(a for a, m in zip(edges, marks) if m in (2, 3))
                if not e1 or not e2 or e1 == eset or e2 == eset:
                    continue
                v1 = frozenset(
                    x for a in e1 for x in (p.edges[a].src, p.edges[a].dst)
                )
                v2 = frozenset(
                    x for a in e2 for x in (p.edges[a].src, p.edges[a].dst)
                )
                if not (v1 & v2) or (v1, e1) == key or (v2, e2) == key:
                    continue
                if not _connected(v1, e1, p) or not _connected(v2, e2, p):
                    continue
                f1, f2 = freq(v1, e1), freq(v2, e2)
                cost = solve(v1, e1) + solve(v2, e2) + f + alpha_join * (f1 + f2)
                best = min(best, cost)
        memo[key] = best
        return best

    return solve(frozenset(p.vertices), frozenset(p.edges))
