"""Omniscient verification of matchings, outside the communication model.

Two exact maximum-matching routines are provided and are meant to be run
against each other: an exhaustive include/exclude search over the edges
(capped in size) and Edmonds' blossom algorithm.  The oracle reads the
ground-truth state directly and never charges rounds.
"""

from __future__ import annotations

import os
from collections import deque
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Optional, Set, Tuple

from .errors import TooLarge
from .graphstate import Edge, Graph, Matching, norm

DEFAULT_ORACLE_CAP = 24

Path3 = Tuple[int, int, int, int]


def oracle_cap() -> int:
    return int(os.environ.get("DYMATCH_ORACLE_CAP", DEFAULT_ORACLE_CAP))


def max_matching_size(g: Graph, cap: Optional[int] = None) -> int:
    """Exact maximum matching size by branch and bound over the edge list.

    Raises :class:`TooLarge` above ``cap`` edges (default 24, overridable
    through ``DYMATCH_ORACLE_CAP``).
    """
    cap = oracle_cap() if cap is None else cap
    edges = g.edges()
    if len(edges) > cap:
        raise TooLarge(f"{len(edges)} edges exceed the exhaustive-search cap of {cap}")
    m = len(edges)
    masks = [(1 << u) | (1 << v) for u, v in edges]
    suffix = [0] * (m + 1)
    for i in range(m - 1, -1, -1):
        suffix[i] = suffix[i + 1] | masks[i]

    best = 0
    taken = 0
    for mask in masks:
        if not taken & mask:
            taken |= mask
            best += 1

    def search(i: int, used: int, size: int) -> None:
        nonlocal best
        if size > best:
            best = size
        if i == m:
            return
        # at most one more edge per pair of still-unused vertices ahead
        room = (suffix[i] & ~used).bit_count() // 2
        if size + min(room, m - i) <= best:
            return
        if not used & masks[i]:
            search(i + 1, used | masks[i], size + 1)
        search(i + 1, used, size)

    search(0, 0, 0)
    return best


def blossom_matching(g: Graph) -> List[Edge]:
    """Maximum cardinality matching on a general graph (Edmonds' blossoms)."""
    n = g.n
    adj = [sorted(s) for s in g.adj]
    match = [-1] * n

    for u in range(n):
        if match[u] == -1:
            for v in adj[u]:
                if match[v] == -1:
                    match[u], match[v] = v, u
                    break

    for root in range(n):
        if match[root] != -1:
            continue
        parent = [-1] * n
        base = list(range(n))
        used = [False] * n
        used[root] = True
        queue = deque([root])
        end = -1

        def lca(a: int, b: int) -> int:
            seen = [False] * n
            while True:
                a = base[a]
                seen[a] = True
                if match[a] == -1:
                    break
                a = parent[match[a]]
            while True:
                b = base[b]
                if seen[b]:
                    return b
                b = parent[match[b]]

        def mark_path(v: int, b: int, child: int, blossom: List[bool]) -> None:
            while base[v] != b:
                blossom[base[v]] = blossom[base[match[v]]] = True
                parent[v] = child
                child = match[v]
                v = parent[match[v]]

        while queue and end == -1:
            v = queue.popleft()
            for to in adj[v]:
                if base[v] == base[to] or match[v] == to:
                    continue
                if to == root or (match[to] != -1 and parent[match[to]] != -1):
                    cur = lca(v, to)
                    blossom = [False] * n
                    mark_path(v, cur, to, blossom)
                    mark_path(to, cur, v, blossom)
                    for i in range(n):
                        if blossom[base[i]]:
                            base[i] = cur
                            if not used[i]:
                                used[i] = True
                                queue.append(i)
                elif parent[to] == -1:
                    parent[to] = v
                    if match[to] == -1:
                        end = to
                        break
                    used[match[to]] = True
                    queue.append(match[to])

        while end != -1:
            pv = parent[end]
            nxt = match[pv]
            match[end], match[pv] = pv, end
            end = nxt

    return [(u, v) for u, v in enumerate(match) if v != -1 and u < v]


def mcm_size(g: Graph) -> int:
    return len(blossom_matching(g))


def is_maximal(g: Graph, matching: Matching) -> Tuple[bool, Optional[Edge]]:
    """True iff no edge joins two free vertices; otherwise the first such edge."""
    partner = matching.partner
    for u in range(g.n):
        if partner[u] is not None:
            continue
        for v in sorted(g.adj[u]):
            if u < v and partner[v] is None:
                return False, (u, v)
    return True, None


def find_3aug_paths(
    g: Graph, matching: Matching, within: Optional[Set[int]] = None
) -> List[Path3]:
    """All ``(a, b, c, d)`` with ``{b, c}`` matched (b < c), a and d free, a != d.

    With ``within`` set, only paths whose four vertices lie in it count.
    """
    partner = matching.partner
    out: List[Path3] = []
    for b in range(g.n):
        c = partner[b]
        if c is None or b > c:
            continue
        if within is not None and (b not in within or c not in within):
            continue
        left = [a for a in sorted(g.adj[b]) if partner[a] is None and (within is None or a in within)]
        if not left:
            continue
        right = [d for d in sorted(g.adj[c]) if partner[d] is None and (within is None or d in within)]
        for a in left:
            for d in right:
                if a != d:
                    out.append((a, b, c, d))
    return out


def has_3aug_path(g: Graph, matching: Matching) -> bool:
    partner = matching.partner
    for b in range(g.n):
        c = partner[b]
        if c is None or b > c:
            continue
        left = {a for a in g.adj[b] if partner[a] is None}
        if not left:
            continue
        for d in g.adj[c]:
            if partner[d] is None and (len(left) > 1 or d not in left):
                return True
    return False


@dataclass
class Certificate:
    maximal: bool
    three_aug_count: int
    matching_size: int
    mcm: Optional[int]
    ratio: Optional[float]
    witness: Any = None

    @property
    def ok(self) -> bool:
        ratio_ok = self.mcm is None or 3 * self.matching_size >= 2 * self.mcm
        return self.maximal and self.three_aug_count == 0 and ratio_ok

    def as_dict(self) -> Dict[str, Any]:
        out: Dict[str, Any] = {"maximal": self.maximal, "three_aug_count": self.three_aug_count}
        if self.mcm is not None:
            out["mcm"] = self.mcm
            out["ratio"] = self.ratio
        return out


def certify(g: Graph, matching: Matching, exact: bool = True) -> Certificate:
    """Maximality, 3-augmenting paths and (optionally) the size ratio to a maximum matching.

    ``mcm`` comes from the exhaustive search when the graph is under the cap,
    and from the blossom matcher otherwise.
    """
    matching.validate(g)
    maximal, witness = is_maximal(g, matching)
    paths = find_3aug_paths(g, matching)
    size = matching.size()
    mcm = ratio = None
    if exact:
        mcm = max_matching_size(g) if g.m <= oracle_cap() else mcm_size(g)
        ratio = size / mcm if mcm else 1.0
    return Certificate(maximal, len(paths), size, mcm, ratio, witness or (paths[0] if paths else None))


# -- invariants of the batch-incremental phases --------------------------------

class PhaseReport(Dict[str, Any]):
    """Maps a property name to ``None`` (holds) or a counterexample."""

    def failures(self) -> Dict[str, Any]:
        return {k: v for k, v in self.items() if v is not None}

    @property
    def ok(self) -> bool:
        return not self.failures()


def _new_free(g: Graph, m: Matching, new_edges: Set[Edge], x: int) -> List[int]:
    return [y for y in sorted(g.adj[x]) if m.partner[y] is None and norm(x, y) in new_edges]


def _old_free(g: Graph, m: Matching, new_edges: Set[Edge], x: int) -> List[int]:
    return [y for y in sorted(g.adj[x]) if m.partner[y] is None and norm(x, y) not in new_edges]


def _first(items: Iterable[Any]) -> Any:
    for item in items:
        return item
    return None


def check_phase1(ctx: Any, g: Graph, m: Matching) -> PhaseReport:
    rep = PhaseReport()
    m0 = ctx.m0
    rep["part1a"] = _first(v for v in range(g.n) if m0.partner[v] is not None and m.partner[v] is None)
    rep["part1b"] = _first(e for e in sorted(ctx.g1_edges) if m.partner[e[0]] is None and m.partner[e[1]] is None)
    rep["part1c"] = _first(_paths_in_edge_set(ctx.g1_edges, m))
    rep["part1d"] = _first(_harmful_triangles(g, m, ctx.new_edges))
    return rep


def _paths_in_edge_set(edges: Set[Edge], m: Matching) -> Iterable[Path3]:
    nbrs: Dict[int, Set[int]] = {}
    for u, v in edges:
        nbrs.setdefault(u, set()).add(v)
        nbrs.setdefault(v, set()).add(u)
    for b, c in sorted(edges):
        if m.partner[b] != c:
            continue
        for a in sorted(nbrs[b]):
            if m.partner[a] is not None:
                continue
            for d in sorted(nbrs[c]):
                if m.partner[d] is None and d != a:
                    yield (a, b, c, d)


def _harmful_triangles(g: Graph, m: Matching, new_edges: Set[Edge]) -> Iterable[Tuple[int, int, int]]:
    """Triangles ``{w, u, c}``: ``{w, u}`` matched, ``c`` free, and ``w`` or ``u``
    has a new edge to some free vertex other than ``c``."""
    for w in range(g.n):
        u = m.partner[w]
        if u is None or w > u:
            continue
        fresh = set(_new_free(g, m, new_edges, w)) | set(_new_free(g, m, new_edges, u))
        if not fresh:
            continue
        for c in sorted(g.adj[w] & g.adj[u]):
            if m.partner[c] is None and fresh - {c}:
                yield (w, u, c)


def check_important_sets(ctx: Any, g: Graph, m: Matching) -> PhaseReport:
    rep = PhaseReport()
    xv = set(ctx.X) | set(ctx.V)
    rep["X_and_V"] = _first(e for e in g.edges() if e[0] in xv and e[1] in xv)
    rep["W_U"] = _first(
        [("W", w, y) for w in sorted(ctx.W) for y in _new_free(g, m, ctx.new_edges, w)]
        + [("U", u, y) for u in sorted(ctx.U) for y in _old_free(g, m, ctx.new_edges, u)]
    )
    in_i = {norm(w, u) for w, u in ctx.I}
    rep["all_in_I"] = _first(p for p in find_3aug_paths(g, m) if norm(p[1], p[2]) not in in_i)
    rep["sets_disjoint"] = _first(sorted(set(ctx.X) & (set(ctx.W) | set(ctx.U) | set(ctx.V))))
    return rep


def check_phase2(ctx: Any, g: Graph, m: Matching) -> PhaseReport:
    rep = PhaseReport()
    xs = set(ctx.X)
    virtual = ctx.m_xw
    bad_pair = _first(
        (w, x) for w, x in sorted(virtual.items())
        if w not in ctx.W or x not in xs or not g.has_edge(w, x)
    )
    xs_used = list(virtual.values())
    if bad_pair is None and len(set(xs_used)) != len(xs_used):
        bad_pair = ("shared", sorted(xs_used))
    rep["m_xw_valid"] = bad_pair
    rep["m_xw_maximal"] = _first(
        (x, w) for w in sorted(ctx.W) if w not in virtual
        for x in sorted(g.adj[w] & xs) if x not in set(xs_used)
    )
    rep["real_unchanged"] = None if m.partner == ctx.m1.partner else "matching changed in phase 2"
    return rep


def check_phase3(ctx: Any, g: Graph, m: Matching) -> PhaseReport:
    rep = PhaseReport()
    m1 = ctx.m1
    rep["p3A"] = _first(v for v in range(g.n) if m1.partner[v] is not None and m.partner[v] is None)
    x_prime = set(ctx.X_prime)
    v_set = set(ctx.V)
    wit_b = None
    for w, u in ctx.I:
        if m.partner[w] == u:
            continue
        x, v = m.partner[w], m.partner[u]
        if x not in x_prime | v_set or v not in v_set:
            wit_b = (w, u, x, v)
            break
        xi = ctx.m_xw.get(w)
        if xi is not None and x != xi and m.partner[xi] is None:
            wit_b = (w, u, x, v, "x_i free")
            break
    rep["p3B"] = wit_b
    star = set(ctx.X) | set(ctx.W) | set(ctx.U) | set(ctx.V)
    rep["p3C"] = _first(
        (a, b) for a in sorted(star) for b in sorted(g.adj[a] & star)
        if a < b and m.partner[a] is None and m.partner[b] is None
    )
    rep["nofree"] = _first(
        (a, b) for a in sorted(star) for b in sorted(g.adj[a] - star) if m.partner[b] is None
    )
    rep["gstar"] = rep["p3C"] or _first(find_3aug_paths(g, m, within=star))
    maximal, witness = is_maximal(g, m)
    rep["correct"] = witness if not maximal else _first(find_3aug_paths(g, m))
    rep["monotone"] = _first(v for v in range(g.n) if ctx.m0.partner[v] is not None and m.partner[v] is None)
    return rep


PHASE_CHECKS = {
    "phase1": check_phase1,
    "important": check_important_sets,
    "phase2": check_phase2,
    "phase3": check_phase3,
}


def check_phase_invariants(ctx: Any, g: Graph, m: Matching, phase: str) -> PhaseReport:
    """Run the property checks belonging to the named phase boundary."""
    return PHASE_CHECKS[phase](ctx, g, m)
