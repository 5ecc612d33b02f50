"""Update sequences: random workloads, adaptive strategies and the
lower-bound construction with five-vertex segments.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Iterator, List, Optional, Sequence, Set, Tuple, Union

import numpy as np

from .errors import BadDimensions, InvalidUpdate
from .graphstate import Edge, Graph, Partition, norm


@dataclass(frozen=True)
class Insert:
    u: int
    v: int

    @property
    def edges(self) -> List[Edge]:
        return [norm(self.u, self.v)]


@dataclass(frozen=True)
class Delete:
    u: int
    v: int

    @property
    def edges(self) -> List[Edge]:
        return [norm(self.u, self.v)]


@dataclass(frozen=True)
class InsertBatch:
    batch: Tuple[Edge, ...]

    @property
    def edges(self) -> List[Edge]:
        return [norm(u, v) for u, v in self.batch]


Update = Union[Insert, Delete, InsertBatch]


def update_kind(upd: Update) -> str:
    if isinstance(upd, Insert):
        return "insert"
    if isinstance(upd, Delete):
        return "delete"
    return "batch"


def validate_update(upd: Update, g: Graph) -> None:
    """Raise :class:`InvalidUpdate` unless ``upd`` applies cleanly to ``g``."""
    if isinstance(upd, Delete):
        if not (0 <= upd.u < g.n and 0 <= upd.v < g.n) or not g.has_edge(upd.u, upd.v):
            raise InvalidUpdate(f"delete of absent edge {norm(upd.u, upd.v)}")
        return
    seen: Set[Edge] = set()
    for u, v in upd.edges:
        if u == v or not (0 <= u < g.n and 0 <= v < g.n):
            raise InvalidUpdate(f"invalid edge {(u, v)}")
        if (u, v) in seen or g.has_edge(u, v):
            raise InvalidUpdate(f"edge {(u, v)} repeated or already present")
        seen.add((u, v))


def apply_to_graph(upd: Update, g: Graph) -> None:
    if isinstance(upd, Delete):
        g.delete(upd.u, upd.v)
    else:
        for u, v in upd.edges:
            g.insert(u, v)


# -- serialization ---------------------------------------------------------------

def to_record(upd: Update) -> dict:
    if isinstance(upd, InsertBatch):
        return {"op": "batch", "edges": [list(e) for e in upd.batch]}
    return {"op": update_kind(upd), "u": upd.u, "v": upd.v}


def from_record(rec: dict) -> Update:
    op = rec.get("op")
    if op == "insert":
        return Insert(int(rec["u"]), int(rec["v"]))
    if op == "delete":
        return Delete(int(rec["u"]), int(rec["v"]))
    if op == "batch":
        return InsertBatch(tuple((int(u), int(v)) for u, v in rec["edges"]))
    raise InvalidUpdate(f"unknown update record {rec!r}")


def dump_jsonl(updates: Iterable[Update]) -> str:
    return "".join(json.dumps(to_record(u), separators=(",", ":")) + "\n" for u in updates)


def load_jsonl(text: str) -> List[Update]:
    return [from_record(json.loads(line)) for line in text.splitlines() if line.strip()]


# -- random workloads --------------------------------------------------------------

def _random_absent(rng: np.random.Generator, g: Graph, exclude: Set[Edge]) -> Optional[Edge]:
    total = g.n * (g.n - 1) // 2
    if g.m + len(exclude) >= total:
        return None
    # rejection sampling is fast while the graph is far from complete
    for _ in range(64):
        u, v = (int(x) for x in rng.choice(g.n, size=2, replace=False))
        e = norm(u, v)
        if not g.has_edge(*e) and e not in exclude:
            return e
    absent = [(u, v) for u in range(g.n) for v in range(u + 1, g.n) if v not in g.adj[u] and (u, v) not in exclude]
    return absent[int(rng.integers(len(absent)))] if absent else None


def random_workload(
    rng: np.random.Generator,
    n: int,
    num_updates: int,
    p_delete: float = 0.0,
    max_batch: int = 1,
    max_edges: Optional[int] = None,
) -> List[Update]:
    """Uniform random updates, valid against the evolving graph.

    Deletions pick a present edge uniformly; with ``max_batch > 1`` insertions
    come as batches of uniform size in ``1..max_batch``.  ``max_edges`` caps the
    graph size by turning insertions into deletions when it is reached.
    """
    g = Graph(n)
    out: List[Update] = []
    for _ in range(num_updates):
        full = max_edges is not None and g.m >= max_edges
        if g.m and (full or rng.random() < p_delete):
            edges = g.edges()
            u, v = edges[int(rng.integers(len(edges)))]
            upd: Update = Delete(u, v)
        else:
            size = 1 if max_batch <= 1 else int(rng.integers(1, max_batch + 1))
            if max_edges is not None:
                size = max(1, min(size, max_edges - g.m))
            chosen: List[Edge] = []
            for _ in range(size):
                e = _random_absent(rng, g, set(chosen))
                if e is None:
                    break
                chosen.append(e)
            if not chosen:
                break
            upd = Insert(*chosen[0]) if max_batch <= 1 else InsertBatch(tuple(chosen))
        apply_to_graph(upd, g)
        out.append(upd)
    return out


# -- adaptive strategies -------------------------------------------------------------

# a strategy sees the whole simulation (all player memories and outputs)
Strategy = Callable[[Any], Optional[Update]]


class DeleteMatched:
    """Delete the lowest matched edge; insert a random absent edge when nothing is matched.

    ``p_insert`` mixes in random insertions so the graph keeps growing.
    """

    def __init__(self, rng: np.random.Generator, p_insert: float = 0.5, max_edges: Optional[int] = None):
        self.rng = rng
        self.p_insert = p_insert
        self.max_edges = max_edges

    def __call__(self, sim) -> Optional[Update]:
        g = sim.graph
        matched = sim.matching.edges()
        room = self.max_edges is None or g.m < self.max_edges
        if room and (not matched or self.rng.random() < self.p_insert):
            e = _random_absent(self.rng, g, set())
            if e is not None:
                return Insert(*e)
        if matched:
            return Delete(*matched[0])
        return None


class Replay:
    """Play a fixed sequence, ignoring the state."""

    def __init__(self, updates: Sequence[Update]):
        self._it: Iterator[Update] = iter(list(updates))

    def __call__(self, sim) -> Optional[Update]:
        return next(self._it, None)


def adaptive_step(strategy: Strategy, sim) -> Optional[Update]:
    """Ask ``strategy`` for the next update after it has seen the full state."""
    upd = strategy(sim)
    if upd is not None:
        validate_update(upd, sim.graph)
    return upd


# -- lower-bound construction ------------------------------------------------------

ROWS = ("t", "u", "v", "w", "x")


@dataclass
class LBInstance:
    n: int
    k: int
    ell: int
    segments: List[Tuple[int, int, int, int, int]]
    partition: Partition
    P: int
    S_P: List[int]
    I_P: List[int]
    J_P: List[int]
    gamma: List[int]
    setup_updates: List[Update] = field(default_factory=list)
    challenge_batch: Optional[InsertBatch] = None


def segment_vertex(q: int, row: int, i: int) -> int:
    """Vertex id of row ``row`` (0..4 for t..x) in segment ``i``."""
    return row * q + i


def lb_partition(n: int, k: int) -> Partition:
    """Grid rectangles: row r, column block c.

    Player j takes block j of rows t, u and x, block j+1 of row v and block
    j+2 of row w (mod k), so it never hosts two of u_i, v_i, w_i.
    """
    q = n // 5
    width = q // k
    shift = (0, 0, 1, 2, 0)
    owner = [0] * n
    for row in range(5):
        for i in range(q):
            owner[segment_vertex(q, row, i)] = (i // width - shift[row]) % k
    return Partition(owner=owner, k=k)


def build_lb_instance(
    n: int, k: int, ell: int, rng: np.random.Generator, gamma: Optional[Sequence[int]] = None
) -> LBInstance:
    if n % 5 or k < 3 or (n // 5) % k:
        raise BadDimensions(f"need 5 | n, k >= 3 and k | n/5; got n={n}, k={k}")
    q = n // 5
    width = q // k
    if not 0 <= ell <= width:
        raise BadDimensions(f"ell={ell} exceeds n/(5k)={width}")
    partition = lb_partition(n, k)
    segments = [tuple(segment_vertex(q, r, i) for r in range(5)) for i in range(q)]
    for seg in segments:
        hosts = [partition.owner[x] for x in seg[1:4]]
        assert len(set(hosts)) == 3, f"segment {seg} puts two middle-path vertices on one player"
    P = 0
    I_P = [i for i in range(q) if partition.owner[segments[i][2]] == P]
    S_P = [segments[i][2] for i in I_P]
    J_P = sorted(int(i) for i in rng.choice(I_P, size=ell, replace=False)) if ell else []
    bits = list(gamma) if gamma is not None else [int(b) for b in rng.integers(0, 2, size=ell)]
    if len(bits) != ell:
        raise BadDimensions(f"gamma has {len(bits)} bits, expected {ell}")
    setup: List[Update] = []
    for t, u, v, w, x in segments:
        setup.append(Insert(u, v))
        setup.append(Insert(v, w))
    challenge = []
    for i, bit in zip(J_P, bits):
        t, u, v, w, x = segments[i]
        challenge.append(norm(t, u) if bit == 0 else norm(w, x))
    return LBInstance(
        n=n, k=k, ell=ell, segments=segments, partition=partition, P=P, S_P=S_P,
        I_P=I_P, J_P=J_P, gamma=bits, setup_updates=setup, challenge_batch=InsertBatch(tuple(challenge)),
    )


def flip_required(pre_uv_matched: bool, pre_vw_matched: bool, bit: int) -> bool:
    """Whether segment statuses of {u,v} and {v,w} must change after the challenge edge."""
    return (pre_uv_matched and bit == 0) or (pre_vw_matched and bit == 1)
