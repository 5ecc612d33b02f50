"""Batch-incremental maintenance of a maximal matching without 3-augmenting
paths.

A batch of inserted edges is cut into mini-batches of ``b = floor(sqrt(k*beta))``
edges.  Each mini-batch runs three phases:

1. every player learns the new edges and the status of their endpoints; the
   small subgraph G1 around them (free-free edges, matched edges with new free
   neighbours at both ends, triangles through a matched edge) is repaired by
   the coordinator (player 0);
2. the remaining dangerous matched edges I = {(w, u)} are found, and a
   maximal *virtual* matching pairs each w with an old free neighbour x;
3. the coordinator resolves the 3-augmenting paths (x, w, u, v) on the small
   graph spanned by X', W, U and V.

Knowledge that every player shares (the new edges, the statuses spread with
them, later diffs) is kept in one dictionary, ``known``; anything else is read
from a single player's memory.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .errors import DuplicateEdge, G1Overflow, GStarOverflow, SelfLoop, StateCorrupt
from .graphstate import Edge, Matching, norm
from .simcore import NONE_ID, Simulation, Token, TokenKind, collect
from .spreading import spread

COORDINATOR = 0
SIZE_GUARD = 6

CheckHook = Callable[["PhaseContext", str], None]


def minibatch_size(k: int, beta: int) -> int:
    return max(1, math.isqrt(k * beta))


def split_minibatches(edges: Sequence[Edge], b: int) -> List[List[Edge]]:
    return [list(edges[i:i + b]) for i in range(0, len(edges), b)]


@dataclass
class PhaseContext:
    """Working sets of one mini-batch."""

    index: int
    B_all: List[Edge]
    b: int
    B: List[Edge] = field(default_factory=list)
    new_edges: Set[Edge] = field(default_factory=set)
    new_endpoint_info: Dict[int, int] = field(default_factory=dict)
    F: Set[Edge] = field(default_factory=set)
    I1: Set[Edge] = field(default_factory=set)
    I1_hat: Set[Edge] = field(default_factory=set)
    triangles: Set[Tuple[int, int, int]] = field(default_factory=set)
    T: Set[Edge] = field(default_factory=set)
    g1_edges: Set[Edge] = field(default_factory=set)
    pending: List[Tuple[int, int]] = field(default_factory=list)
    I: List[Tuple[int, int]] = field(default_factory=list)
    W: Set[int] = field(default_factory=set)
    U: Set[int] = field(default_factory=set)
    V: Set[int] = field(default_factory=set)
    X: Set[int] = field(default_factory=set)
    X_prime: Set[int] = field(default_factory=set)
    m_xw: Dict[int, int] = field(default_factory=dict)
    gstar_edges: Set[Edge] = field(default_factory=set)
    # ground-truth snapshots, used only by the invariant checks
    m0: Optional[Matching] = None
    m1: Optional[Matching] = None
    spreads_outside_phase2: int = 0
    phase2_iterations: int = 0
    rounds: Dict[str, int] = field(default_factory=dict)


@dataclass
class BatchResult:
    rounds: int
    minibatches: List[PhaseContext]


# -- shared bookkeeping ---------------------------------------------------------

class _Knowledge:
    """Facts every player holds after the spreads of the current mini-batch."""

    def __init__(self) -> None:
        self.partner: Dict[int, int] = {}

    def learn(self, v: int, p: int) -> None:
        self.partner[v] = p

    def free(self, v: int) -> bool:
        return self.partner[v] == NONE_ID

    def mate(self, v: int) -> Optional[int]:
        p = self.partner[v]
        return None if p == NONE_ID else p


def _empty_batch(sim: Simulation) -> List[List[Token]]:
    return [[] for _ in range(sim.k)]


def _spread(sim: Simulation, ctx: PhaseContext, batch: List[List[Token]], count: bool = True) -> List[Token]:
    if count:
        ctx.spreads_outside_phase2 += 1
    return spread(sim, batch).common()


def _diff_tokens(before: Dict[int, int], after: Dict[int, int]) -> List[Token]:
    return [Token(TokenKind.STATUS, (v, after[v])) for v in sorted(after) if before.get(v) != after[v]]


def _apply_diff(sim: Simulation, known: _Knowledge, tokens: Iterable[Token]) -> None:
    """Hosts rewrite the output entries of their vertices; everyone updates ``known``."""
    for t in tokens:
        if t.kind != TokenKind.STATUS:
            continue
        v, p = t.payload
        known.learn(v, p)
        sim.set_partner(v, None if p == NONE_ID else p)


def _local_rotate(state: Dict[int, int], a: int, b: int, c: int, d: int) -> None:
    """On a coordinator's working copy: replace matched {b, c} by {a, b}, {c, d}."""
    if state[b] != c or state[a] != NONE_ID or state[d] != NONE_ID or a == d:
        raise StateCorrupt(f"invalid rotation {(a, b, c, d)}")
    state[a], state[b] = b, a
    state[c], state[d] = d, c


def _adjacency(edges: Iterable[Edge]) -> Dict[int, Set[int]]:
    adj: Dict[int, Set[int]] = {}
    for u, v in edges:
        adj.setdefault(u, set()).add(v)
        adj.setdefault(v, set()).add(u)
    return adj


def _resolve_locally(edges: Set[Edge], state: Dict[int, int]) -> None:
    """Greedy maximal extension then repeated 3-augmenting-path rotation on ``edges``."""
    for u, v in sorted(edges):
        if state[u] == NONE_ID and state[v] == NONE_ID:
            state[u], state[v] = v, u
    adj = _adjacency(edges)
    changed = True
    while changed:
        changed = False
        for b, c in sorted(edges):
            if state[b] != c:
                continue
            for x, y in ((b, c), (c, b)):
                a = next((z for z in sorted(adj[x]) if state[z] == NONE_ID), None)
                if a is None:
                    continue
                d = next((z for z in sorted(adj[y]) if state[z] == NONE_ID and z != a), None)
                if d is None:
                    continue
                _local_rotate(state, a, x, y, d)
                changed = True
                break


# -- phase 1 --------------------------------------------------------------------

def phase1(sim: Simulation, ctx: PhaseContext, known: _Knowledge) -> None:
    start = sim.round
    # new edges plus statuses of their endpoints, one spread
    batch = _empty_batch(sim)
    endpoints = sorted({x for e in ctx.B_all for x in e})
    for u, v in ctx.B_all:
        batch[sim.owner(u)].append(Token(TokenKind.EDGE, (u, v)))
    for x in endpoints:
        p = sim.players[sim.owner(x)].partner[x]
        batch[sim.owner(x)].append(Token(TokenKind.STATUS, (x, NONE_ID if p is None else p)))
    received = _spread(sim, ctx, batch)
    for t in received:
        if t.kind == TokenKind.STATUS:
            known.learn(*t.payload)
    ctx.new_endpoint_info = {x: known.partner[x] for x in endpoints}
    for x in endpoints:
        mate = known.mate(x)
        if mate is not None:
            known.learn(mate, x)

    ctx.new_edges = {norm(*t.payload) for t in received if t.kind == TokenKind.EDGE}
    ctx.B = sorted(e for e in ctx.new_edges if known.free(e[0]) or known.free(e[1]))
    new_free = _new_free_neighbours(ctx.B, known)
    ctx.F = {e for e in ctx.B if known.free(e[0]) and known.free(e[1])}
    for w in sorted(new_free):
        u = known.mate(w)
        if u is None or w > u or u not in new_free:
            continue
        if any(a != b for a in new_free[w] for b in new_free[u]):
            ctx.I1.add(norm(w, u))
            ctx.I1_hat.add(norm(w, u))
            ctx.I1_hat.update(norm(w, a) for a in new_free[w])
            ctx.I1_hat.update(norm(u, b) for b in new_free[u])

    # triangles through a matched edge that has a new edge to a free vertex
    candidates = sorted({norm(w, known.mate(w)) for w in new_free if known.mate(w) is not None})
    batch = _empty_batch(sim)
    for p, mem in enumerate(sim.players):
        for c in mem.hosted:
            if mem.partner[c] is not None:
                continue
            for w, u in candidates:
                if w in mem.adj[c] and u in mem.adj[c]:
                    batch[p].append(Token(TokenKind.VERTEX, (w, u, c)))
    for t in _spread(sim, ctx, batch):
        w, u, c = t.payload
        ctx.triangles.add((w, u, c))
        known.learn(c, NONE_ID)
        ctx.T.update({(w, u), norm(w, c), norm(u, c)})
        ctx.T.update(norm(w, a) for a in new_free.get(w, ()))
        ctx.T.update(norm(u, a) for a in new_free.get(u, ()))

    ctx.g1_edges = ctx.F | ctx.I1_hat | ctx.T
    if len(ctx.g1_edges) > SIZE_GUARD * ctx.b:
        raise G1Overflow(f"G1 has {len(ctx.g1_edges)} edges for a mini-batch of {len(ctx.B_all)}")

    # the coordinator repairs G1 on its copy of the shared knowledge
    g1_vertices = {x for e in ctx.g1_edges for x in e}
    before = {v: known.partner[v] for v in g1_vertices}
    state = dict(before)
    _resolve_locally(ctx.g1_edges, state)
    ctx.pending = _pending_triangles(ctx, state)
    diff = _diff_tokens(before, state)
    _triangle_follow_up(sim, ctx, known, state, diff)
    ctx.rounds["phase1"] = sim.round - start


def _new_free_neighbours(B: Sequence[Edge], known: _Knowledge) -> Dict[int, Set[int]]:
    """Matched endpoint -> its free neighbours through new edges."""
    out: Dict[int, Set[int]] = {}
    for u, v in B:
        for x, y in ((u, v), (v, u)):
            if not known.free(x) and known.free(y):
                out.setdefault(x, set()).add(y)
    return out


def _pending_triangles(ctx: PhaseContext, state: Dict[int, int]) -> List[Tuple[int, int]]:
    """Queries (p, c): triangle {p, q, c} with {p, q} still matched, c free and
    {q, c} new.  An old free neighbour of p would complete (y, p, q, c)."""
    out = set()
    for w, u, c in ctx.triangles:
        if state.get(w) != u or state.get(c) != NONE_ID:
            continue
        for p, q in ((w, u), (u, w)):
            if norm(q, c) in ctx.new_edges:
                out.add((p, c))
    return sorted(out)


def _triangle_follow_up(
    sim: Simulation, ctx: PhaseContext, known: _Knowledge, state: Dict[int, int], diff: List[Token]
) -> None:
    """Spread the coordinator's diff; settle triangles an old free edge would
    turn into a 3-augmenting path, re-asking only where witnesses collided."""
    queries = list(ctx.pending)
    while True:
        batch = _empty_batch(sim)
        batch[COORDINATOR] = diff + [Token(TokenKind.QUERY, q) for q in queries]
        _apply_diff(sim, known, _spread(sim, ctx, batch))
        if not queries:
            return
        replies: Dict[Tuple[int, int], List[Token]] = {}
        for p, mem in enumerate(sim.players):
            out = []
            for root, c in queries:
                found = [
                    y for y in mem.hosted
                    if mem.partner[y] is None and root in mem.adj[y] and y != c
                    and norm(root, y) not in ctx.new_edges
                ]
                if found:
                    out.append(Token(TokenKind.VERTEX, (root, c, min(found))))
            if out:
                replies[(p, COORDINATOR)] = out
        inboxes, _ = sim.deliver(replies, min_rounds=1)
        witnesses: Dict[Tuple[int, int], List[int]] = {}
        for t in collect(inboxes[COORDINATOR]):
            root, c, y = t.payload
            witnesses.setdefault((root, c), []).append(y)
        before = dict(state)
        retry = []
        for root, c in queries:
            q = state.get(root)
            if q is None or q == NONE_ID or state.get(c) != NONE_ID:
                continue
            ys = sorted(witnesses.get((root, c), []))
            if not ys:
                continue
            for y in ys:
                state.setdefault(y, NONE_ID)
            usable = [y for y in ys if state[y] == NONE_ID]
            if not usable:
                retry.append((root, c))
                continue
            _local_rotate(state, usable[0], root, q, c)
        diff = _diff_tokens(before, state)
        queries = retry


# -- important edges --------------------------------------------------------------

def compute_important_sets(sim: Simulation, ctx: PhaseContext, known: _Knowledge) -> None:
    start = sim.round
    new_free = _new_free_neighbours(ctx.B, known)
    candidates = []
    for u in sorted(new_free):
        w = known.mate(u)
        if w is not None and w not in new_free:
            candidates.append((w, u))
    if candidates:
        # everyone knows the candidates; hosts of w collect witnesses directly
        replies: Dict[Tuple[int, int], List[Token]] = {}
        for p, mem in enumerate(sim.players):
            for w, u in candidates:
                lonely = new_free[u] if len(new_free[u]) == 1 else set()
                found = [
                    y for y in mem.hosted
                    if mem.partner[y] is None and w in mem.adj[y]
                    and norm(w, y) not in ctx.new_edges and y not in lonely
                ]
                if found:
                    replies.setdefault((p, sim.owner(w)), []).append(Token(TokenKind.VERTEX, (w, min(found))))
        inboxes, _ = sim.deliver(replies, min_rounds=1)
        qualified = {t.payload[0] for p in range(sim.k) for t in collect(inboxes[p])}
        batch = _empty_batch(sim)
        for w, u in candidates:
            if w in qualified:
                batch[sim.owner(w)].append(Token(TokenKind.EDGE, (w, u)))
        ctx.I = sorted(tuple(t.payload) for t in _spread(sim, ctx, batch))
    ctx.W = {w for w, _ in ctx.I}
    ctx.U = {u for _, u in ctx.I}
    ctx.V = set().union(*(new_free[u] for u in ctx.U)) if ctx.U else set()
    ctx.X = set()
    for mem in sim.players:
        ctx.X.update(_hosted_x(mem, ctx))
    ctx.rounds["important"] = sim.round - start


def _hosted_x(mem, ctx: PhaseContext) -> List[int]:
    """Hosted free vertices with an old edge to W, minus V."""
    return [
        x for x in mem.hosted
        if mem.partner[x] is None and x not in ctx.V
        and any(w in ctx.W and norm(w, x) not in ctx.new_edges for w in mem.adj[x])
    ]


# -- phase 2 --------------------------------------------------------------------

def bipartite_maximal_matching(sim: Simulation, ctx: PhaseContext) -> Tuple[Dict[int, int], int]:
    """Proposal protocol for a maximal matching between W and X (old edges only).

    Every iteration each player pairs, greedily by ascending w, still-single
    w's with its lowest still-single hosted neighbours in X and sends those
    proposals straight to the host of w; w keeps the lowest proposer and the
    accepted pairs are spread.  Iterations without any proposal end the loop.
    """
    virtual: Dict[int, int] = {}
    taken: Set[int] = set()
    productive = 0
    hosted_x = [set(_hosted_x(mem, ctx)) for mem in sim.players]
    while len(virtual) < len(ctx.W):
        open_w = sorted(ctx.W - set(virtual))
        proposals: Dict[Tuple[int, int], List[Token]] = {}
        for p, mem in enumerate(sim.players):
            used: Set[int] = set()
            for w in open_w:
                xs = [
                    x for x in hosted_x[p]
                    if x not in taken and x not in used and w in mem.adj[x]
                    and norm(w, x) not in ctx.new_edges
                ]
                if xs:
                    x = min(xs)
                    used.add(x)
                    proposals.setdefault((p, sim.owner(w)), []).append(Token(TokenKind.VERTEX, (x, w)))
        inboxes, _ = sim.deliver(proposals, min_rounds=1)
        offers: Dict[int, List[int]] = {}
        for p in range(sim.k):
            for t in collect(inboxes[p]):
                x, w = t.payload
                offers.setdefault(w, []).append(x)
        batch = _empty_batch(sim)
        for w in sorted(offers):
            batch[sim.owner(w)].append(Token(TokenKind.EDGE, (w, min(offers[w]))))
        accepted = spread(sim, batch).common()
        if not accepted:
            break
        productive += 1
        for t in accepted:
            w, x = t.payload
            virtual[w] = x
            taken.add(x)
    return virtual, max(1, productive)


def phase2(sim: Simulation, ctx: PhaseContext) -> None:
    start = sim.round
    ctx.m_xw, ctx.phase2_iterations = bipartite_maximal_matching(sim, ctx)
    ctx.X_prime = set(ctx.m_xw.values())
    ctx.rounds["phase2"] = sim.round - start


# -- phase 3 --------------------------------------------------------------------

def phase3(sim: Simulation, ctx: PhaseContext, known: _Knowledge) -> None:
    start = sim.round
    star = ctx.X_prime | ctx.W | ctx.U | ctx.V
    if len(star) > SIZE_GUARD * ctx.b:
        raise GStarOverflow(f"G*' has {len(star)} vertices for a mini-batch of {len(ctx.B_all)}")
    # every player knows the vertex set; each edge is reported once, by the
    # host of its endpoint with the lower owner id
    batch = _empty_batch(sim)
    for p, mem in enumerate(sim.players):
        for a in mem.hosted:
            if a not in star:
                continue
            for c in mem.adj[a]:
                if c in star and (sim.owner(c) > p or (sim.owner(c) == p and a < c)):
                    batch[p].append(Token(TokenKind.EDGE, norm(a, c)))
    ctx.gstar_edges = {tuple(t.payload) for t in _spread(sim, ctx, batch)}
    for x in ctx.X_prime:
        known.learn(x, NONE_ID)

    adj = _adjacency(ctx.gstar_edges)
    state = {v: known.partner[v] for v in star}
    before = dict(state)

    def free_v(u: int, exclude: int) -> Optional[int]:
        return next((v for v in sorted(adj.get(u, ())) if v in ctx.V and state[v] == NONE_ID and v != exclude), None)

    # stage 1: the virtual partner first
    for w, u in ctx.I:
        xi = ctx.m_xw.get(w)
        if state[w] != u or xi is None or state[xi] != NONE_ID:
            continue
        v = free_v(u, xi)
        if v is not None:
            _local_rotate(state, xi, w, u, v)
    # stage 2: any free X' vertex, or a free V vertex adjacent to w
    for w, u in ctx.I:
        if state[w] != u:
            continue
        for x in sorted(adj.get(w, ())):
            if state[x] != NONE_ID or not (x in ctx.X_prime or x in ctx.V):
                continue
            v = free_v(u, x)
            if v is not None:
                _local_rotate(state, x, w, u, v)
                break

    batch = _empty_batch(sim)
    batch[COORDINATOR] = _diff_tokens(before, state)
    _apply_diff(sim, known, _spread(sim, ctx, batch))
    ctx.rounds["phase3"] = sim.round - start


# -- drivers ----------------------------------------------------------------------

def process_minibatch(sim: Simulation, ctx: PhaseContext, check: Optional[CheckHook] = None) -> None:
    """Insert ``ctx.B_all`` and restore the invariant."""
    ctx.m0 = sim.matching.copy()
    for u, v in ctx.B_all:
        sim.insert_edge(u, v)
    known = _Knowledge()
    phase1(sim, ctx, known)
    ctx.m1 = sim.matching.copy()
    if check:
        check(ctx, "phase1")
    compute_important_sets(sim, ctx, known)
    if check:
        check(ctx, "important")
    if not ctx.I:
        if check:
            check(ctx, "phase3")
        return
    phase2(sim, ctx)
    if check:
        check(ctx, "phase2")
    phase3(sim, ctx, known)
    if check:
        check(ctx, "phase3")


def validate_batch(sim: Simulation, edges: Sequence[Edge]) -> List[Edge]:
    seen: Set[Edge] = set()
    out = []
    for u, v in edges:
        if u == v:
            raise SelfLoop(f"self-loop at {u}")
        if not (0 <= u < sim.n and 0 <= v < sim.n):
            raise StateCorrupt(f"edge {(u, v)} outside vertex range")
        e = norm(u, v)
        if e in seen or sim.graph.has_edge(u, v):
            raise DuplicateEdge(f"edge {e} repeated or already present")
        seen.add(e)
        out.append(e)
    return out


def process_batch(sim: Simulation, edges: Sequence[Edge], check: Optional[CheckHook] = None) -> BatchResult:
    """Insert a batch of edges mini-batch by mini-batch (in the given order)."""
    start = sim.round
    batch = validate_batch(sim, edges)
    b = minibatch_size(sim.k, sim.beta)
    contexts = []
    for i, chunk in enumerate(split_minibatches(batch, b)):
        ctx = PhaseContext(index=i, B_all=chunk, b=b)
        process_minibatch(sim, ctx, check)
        contexts.append(ctx)
    if sim.current is not None:
        sim.current.extra["minibatches"] = len(contexts)
        sim.current.extra["phase2_iterations"] = [c.phase2_iterations for c in contexts]
        sim.current.extra["spreads_outside_phase2"] = [c.spreads_outside_phase2 for c in contexts]
    return BatchResult(sim.round - start, contexts)
