"""Memoryless maintenance of a maximal matching without 3-augmenting paths
under single edge insertions and deletions.

Players keep nothing between updates except their hosted adjacency and the
matched edges at hosted vertices.  Everything a repair needs is asked for
with messages and discarded when the update completes.
"""

from __future__ import annotations

import math
from typing import Dict, List, Optional, Tuple

from .errors import SamplingExhausted, StateCorrupt
from .oracle import has_3aug_path, is_maximal
from .simcore import NONE_ID, Simulation, Token, TokenKind, collect
from .spreading import spread

GAMMA_FACTOR = 4
RESAMPLE_FACTOR = 64


def low_degree(d: int, m: int) -> bool:
    """``d <= 2*sqrt(m)`` evaluated exactly on integers."""
    return d * d <= 4 * m


def gamma(n: int) -> int:
    return GAMMA_FACTOR * max(1, math.ceil(math.log2(max(n, 2))))


def _check_invariant(sim: Simulation, when: str) -> None:
    maximal, witness = is_maximal(sim.graph, sim.matching)
    if not maximal:
        raise StateCorrupt(f"{when}: free edge {witness}")
    if has_3aug_path(sim.graph, sim.matching):
        raise StateCorrupt(f"{when}: 3-augmenting path present")


def _notify(sim: Simulation, sender: int, vertices: List[int], token: Token) -> None:
    """One coordination token from ``sender`` to the hosts of ``vertices``."""
    hosts = sorted({sim.owner(x) for x in vertices} - {sender})
    sim.deliver({(sender, p): [token] for p in hosts})


def _rotate(sim: Simulation, coordinator: int, a: int, b: int, c: int, d: int) -> None:
    """Replace matched ``{b, c}`` by ``{a, b}`` and ``{c, d}``."""
    _notify(sim, coordinator, [a, b, c, d], Token(TokenKind.CONTROL, (a, b, c, d)))
    # each host rewrites the output entries of its own vertices
    sim.unmatch(b, c)
    sim.match(a, b)
    sim.match(c, d)


def _ask_free_neighbor(sim: Simulation, root: int, asker: int, exclude: int = NONE_ID) -> Optional[int]:
    """``asker`` asks every player for a free neighbour of ``root`` (not ``exclude``).

    Each player answers with its lowest hosted witness over the direct link;
    the asker keeps the lowest overall.
    """
    sim.broadcast_from(asker, [Token(TokenKind.QUERY, (root, exclude))])
    replies: Dict[Tuple[int, int], List[Token]] = {}
    for p, mem in enumerate(sim.players):
        found = [x for x in mem.hosted if mem.partner[x] is None and root in mem.adj[x] and x != exclude]
        if found:
            replies[(p, asker)] = [Token(TokenKind.VERTEX, (root, min(found)))]
    inboxes, _ = sim.deliver(replies, min_rounds=1)
    witnesses = [t.payload[1] for t in collect(inboxes[asker])]
    return min(witnesses) if witnesses else None


def handle_insert(sim: Simulation, u: int, v: int, debug: bool = False) -> int:
    """React to the insertion of ``{u, v}`` (already applied to the graph)."""
    start = sim.round
    pu, pv = sim.owner(u), sim.owner(v)
    mu, mv = sim.players[pu].partner[u], sim.players[pv].partner[v]
    # the two hosts swap the statuses of their endpoints
    sim.deliver({
        (pu, pv): [Token(TokenKind.STATUS, (u, NONE_ID if mu is None else mu))],
        (pv, pu): [Token(TokenKind.STATUS, (v, NONE_ID if mv is None else mv))],
    })
    if mu is not None and mv is not None:
        pass
    elif mu is None and mv is None:
        sim.match(u, v)
    else:
        free, held = (u, v) if mu is None else (v, u)
        w = sim.matching.partner[held]
        p_held, p_w = sim.owner(held), sim.owner(w)
        sim.deliver({(p_held, p_w): [Token(TokenKind.CONTROL, (w, free, held))]})
        x = _ask_free_neighbor(sim, w, p_w, exclude=free)
        if x is not None:
            _rotate(sim, p_w, free, held, w, x)
    if debug:
        _check_invariant(sim, f"after insert {u}-{v}")
    return sim.round - start


def handle_delete(sim: Simulation, u: int, v: int, was_matched: bool, debug: bool = False) -> int:
    """React to the deletion of ``{u, v}``; ``was_matched`` is the hosts' output before it."""
    start = sim.round
    if was_matched:
        # v is repaired right after u; letting u's repair grab v as the far end
        # of a rotation could strand a free neighbour of v
        free_repair(sim, u, avoid=v)
        free_repair(sim, v)
    if debug:
        _check_invariant(sim, f"after delete {u}-{v}")
    return sim.round - start


def free_repair(sim: Simulation, u: int, avoid: int = NONE_ID) -> int:
    """Restore maximality and remove 3-augmenting paths starting at free ``u``.

    ``avoid`` is a free vertex that must not be used as the far end of a
    rotation because it is repaired separately afterwards.
    """
    start = sim.round
    pu = sim.owner(u)
    mem = sim.players[pu]
    if mem.partner[u] is not None:
        return 0
    x = _ask_free_neighbor(sim, u, pu, exclude=avoid)
    if x is not None:
        _notify(sim, pu, [x], Token(TokenKind.CONTROL, (u, x)))
        sim.match(u, x)
        return sim.round - start
    d, m = len(mem.adj[u]), mem.m
    if low_degree(d, m):
        sim.broadcast_from(pu, [Token(TokenKind.CONTROL, (u, 0, avoid))])
        _repair_low_degree(sim, u, avoid)
    else:
        sim.broadcast_from(pu, [Token(TokenKind.CONTROL, (u, 1, avoid))])
        _repair_high_degree(sim, u, avoid)
    return sim.round - start


def _repair_low_degree(sim: Simulation, u: int, avoid: int) -> None:
    pu = sim.owner(u)
    # hosts of u's neighbours publish (neighbour, its partner)
    batch: List[List[Token]] = [[] for _ in range(sim.k)]
    for p, mem in enumerate(sim.players):
        for vi in mem.hosted:
            if u in mem.adj[vi]:
                wi = mem.partner[vi]
                if wi is None:
                    raise StateCorrupt(f"{u} has free neighbour {vi} after the free-neighbour query")
                batch[p].append(Token(TokenKind.STATUS, (vi, wi)))
    pairs = [t.payload for t in spread(sim, batch).common()]
    partner_of = {wi: vi for vi, wi in pairs}
    # everyone answers with its lexicographically smallest (v_i, w_i, x_i)
    replies: Dict[Tuple[int, int], List[Token]] = {}
    for p, mem in enumerate(sim.players):
        best = None
        for x in mem.hosted:
            if mem.partner[x] is not None or x == u or x == avoid:
                continue
            for wi in mem.adj[x]:
                if wi in partner_of:
                    cand = (partner_of[wi], wi, x)
                    if best is None or cand < best:
                        best = cand
        if best is not None:
            replies[(p, pu)] = [Token(TokenKind.VERTEX, best)]
    inboxes, _ = sim.deliver(replies, min_rounds=1)
    found = sorted(t.payload for t in collect(inboxes[pu]))
    if found:
        vi, wi, xi = found[0]
        _rotate(sim, pu, u, vi, wi, xi)


def _repair_high_degree(sim: Simulation, u: int, avoid: int) -> None:
    pu = sim.owner(u)
    mem_u = sim.players[pu]
    nbrs = sorted(mem_u.adj[u])
    m = mem_u.m
    size = min(gamma(sim.n), len(nbrs))
    limit = RESAMPLE_FACTOR * max(1, math.ceil(math.log2(max(sim.n, 2))))
    choice = None
    attempts = 0
    while choice is None:
        if attempts >= limit:
            raise SamplingExhausted(f"no low-degree partner found for {u} after {attempts} samples")
        rng = sim.rng(pu, u, attempts)
        attempts += 1
        sample = sorted(int(s) for s in rng.choice(nbrs, size=size, replace=False))
        batch: List[List[Token]] = [[] for _ in range(sim.k)]
        batch[pu] = [Token(TokenKind.VERTEX, (u, s)) for s in sample]
        sampled = {t.payload[1] for t in spread(sim, batch).common()}
        # hosts of the partners report their lowest low-degree candidate
        replies: Dict[Tuple[int, int], List[Token]] = {}
        for p, mem in enumerate(sim.players):
            cands = [
                (mem.partner[w], w, len(mem.adj[w]))
                for w in mem.hosted
                if mem.partner[w] in sampled and low_degree(len(mem.adj[w]), mem.m)
            ]
            if cands:
                replies[(p, pu)] = [Token(TokenKind.VERTEX, min(cands))]
        inboxes, _ = sim.deliver(replies, min_rounds=1)
        reports = sorted(t.payload for t in collect(inboxes[pu]))
        for v_, w_, d_w in reports:
            if not low_degree(d_w, m):
                raise StateCorrupt(f"high-degree candidate {w_} reported")
        if reports:
            choice = reports[0]
    if sim.current is not None:
        sim.current.extra["sampling_attempts"] = sim.current.extra.get("sampling_attempts", 0) + attempts
    v_, w_, _ = choice
    _notify(sim, pu, [v_, w_], Token(TokenKind.CONTROL, (u, v_, w_)))
    sim.unmatch(v_, w_)
    sim.match(u, v_)
    # w_ lost its partner; it has low degree, so this never samples again
    free_repair(sim, w_, avoid)


def apply_update(sim: Simulation, kind: str, u: int, v: int, debug: bool = False) -> int:
    """Apply one insertion or deletion to the graph and run the matching repair."""
    if kind == "insert":
        sim.insert_edge(u, v)
        return handle_insert(sim, u, v, debug=debug)
    if kind == "delete":
        was = sim.delete_edge(u, v)
        return handle_delete(sim, u, v, was, debug=debug)
    raise ValueError(f"unknown update kind {kind!r}")
