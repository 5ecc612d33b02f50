"""Ground-truth dynamic graph, vertex partition and matching.

The simulator keeps one authoritative copy of the input graph and of the
matching.  Players never read it directly; their legal knowledge is the
:class:`LocalView` derived for the vertices they host.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence, Set, Tuple

from .errors import DuplicateEdge, MissingEdge, SelfLoop, StateCorrupt, UnbalancedPartition

Edge = Tuple[int, int]


def norm(u: int, v: int) -> Edge:
    return (u, v) if u < v else (v, u)


def balance_bound(n: int, k: int) -> int:
    """Largest admissible number of vertices hosted by a single player."""
    log_n = math.ceil(math.log2(n)) if n > 1 else 0
    return max(math.ceil(n / k) * log_n, 1)


@dataclass
class Partition:
    owner: List[int]
    k: int

    @property
    def n(self) -> int:
        return len(self.owner)

    @property
    def hosted(self) -> List[List[int]]:
        out: List[List[int]] = [[] for _ in range(self.k)]
        for v, p in enumerate(self.owner):
            out[p].append(v)
        return out

    def loads(self) -> List[int]:
        counts = [0] * self.k
        for p in self.owner:
            counts[p] += 1
        return counts

    @classmethod
    def contiguous(cls, n: int, k: int) -> "Partition":
        """Split ``0..n-1`` into ``k`` consecutive blocks of near-equal size."""
        owner = [min(v * k // n, k - 1) for v in range(n)]
        return cls(owner=owner, k=k)

    @classmethod
    def from_hosted(cls, hosted: Sequence[Iterable[int]], n: int) -> "Partition":
        owner = [-1] * n
        for p, verts in enumerate(hosted):
            for v in verts:
                if not 0 <= v < n or owner[v] != -1:
                    raise StateCorrupt(f"vertex {v} assigned twice or out of range")
                owner[v] = p
        if -1 in owner:
            raise StateCorrupt(f"vertex {owner.index(-1)} is not assigned")
        return cls(owner=owner, k=len(hosted))


def validate_partition(p: Partition, n: int, k: int) -> None:
    """Raise :class:`UnbalancedPartition` unless ``p`` is a balanced cover."""
    if p.n != n or p.k != k:
        raise StateCorrupt(f"partition describes n={p.n}, k={p.k}; expected n={n}, k={k}")
    for v, owner in enumerate(p.owner):
        if not 0 <= owner < k:
            raise StateCorrupt(f"vertex {v} has owner {owner} outside 0..{k - 1}")
    bound = balance_bound(n, k)
    for player, load in enumerate(p.loads()):
        if load > bound:
            raise UnbalancedPartition(player, load, bound)


class Graph:
    """Simple undirected graph on the fixed vertex set ``0..n-1``."""

    def __init__(self, n: int):
        self.n = n
        self.adj: List[Set[int]] = [set() for _ in range(n)]
        self.m = 0

    def has_edge(self, u: int, v: int) -> bool:
        return v in self.adj[u]

    def degree(self, u: int) -> int:
        return len(self.adj[u])

    def neighbors(self, u: int) -> List[int]:
        return sorted(self.adj[u])

    def edges(self) -> List[Edge]:
        return [(u, v) for u in range(self.n) for v in sorted(self.adj[u]) if u < v]

    def insert(self, u: int, v: int) -> None:
        if u == v:
            raise SelfLoop(f"self-loop at {u}")
        if v in self.adj[u]:
            raise DuplicateEdge(f"edge {norm(u, v)} already present")
        self.adj[u].add(v)
        self.adj[v].add(u)
        self.m += 1

    def delete(self, u: int, v: int) -> None:
        if v not in self.adj[u]:
            raise MissingEdge(f"edge {norm(u, v)} not present")
        self.adj[u].discard(v)
        self.adj[v].discard(u)
        self.m -= 1

    def copy(self) -> "Graph":
        g = Graph(self.n)
        g.adj = [set(s) for s in self.adj]
        g.m = self.m
        return g

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Edge]) -> "Graph":
        g = cls(n)
        for u, v in edges:
            g.insert(u, v)
        return g


class Matching:
    def __init__(self, n: int):
        self.partner: List[Optional[int]] = [None] * n

    def is_free(self, u: int) -> bool:
        return self.partner[u] is None

    def is_matched_edge(self, u: int, v: int) -> bool:
        return self.partner[u] == v

    def match(self, u: int, v: int) -> None:
        if self.partner[u] is not None or self.partner[v] is not None:
            raise StateCorrupt(f"cannot match {u}-{v}: endpoint already matched")
        self.partner[u] = v
        self.partner[v] = u

    def unmatch(self, u: int, v: int) -> None:
        if self.partner[u] != v:
            raise StateCorrupt(f"{u}-{v} is not matched")
        self.partner[u] = None
        self.partner[v] = None

    def edges(self) -> List[Edge]:
        return [(u, v) for u, v in enumerate(self.partner) if v is not None and u < v]

    def size(self) -> int:
        return sum(1 for v in self.partner if v is not None) // 2

    def copy(self) -> "Matching":
        m = Matching(len(self.partner))
        m.partner = list(self.partner)
        return m

    @classmethod
    def from_edges(cls, n: int, edges: Iterable[Edge]) -> "Matching":
        m = cls(n)
        for u, v in edges:
            m.match(u, v)
        return m

    def validate(self, g: Graph) -> None:
        for u, v in enumerate(self.partner):
            if v is None:
                continue
            if self.partner[v] != u:
                raise StateCorrupt(f"asymmetric partner entry at {u}")
            if not g.has_edge(u, v):
                raise StateCorrupt(f"matched pair {norm(u, v)} is not an edge")


def apply_insert(g: Graph, u: int, v: int) -> Graph:
    g.insert(u, v)
    return g


def apply_delete(g: Graph, u: int, v: int, matching: Optional[Matching] = None) -> Graph:
    """Remove ``{u, v}``; a matched pair is dissolved before any repair runs."""
    g.delete(u, v)
    if matching is not None and matching.partner[u] == v:
        matching.unmatch(u, v)
    return g


@dataclass(frozen=True)
class LocalView:
    """What player ``player`` legally knows without communicating.

    Only hosted vertices carry a partner entry; neighbours appear as bare IDs
    with their owner, so their free/matched status has to be asked for.
    """

    player: int
    hosted: Tuple[int, ...]
    neighbors: Dict[int, Tuple[Tuple[int, int], ...]] = field(default_factory=dict)
    partner: Dict[int, Optional[int]] = field(default_factory=dict)


def local_view(g: Graph, matching: Matching, partition: Partition, player: int) -> LocalView:
    hosted = tuple(v for v in range(g.n) if partition.owner[v] == player)
    return LocalView(
        player=player,
        hosted=hosted,
        neighbors={v: tuple((w, partition.owner[w]) for w in g.neighbors(v)) for v in hosted},
        partner={v: matching.partner[v] for v in hosted},
    )


def to_edge_list(g: Graph, matching: Optional[Matching] = None) -> str:
    """One ``u v`` line per edge, suffixed with ``M`` when the edge is matched."""
    lines = []
    for u, v in g.edges():
        flag = " M" if matching is not None and matching.partner[u] == v else ""
        lines.append(f"{u} {v}{flag}")
    return "\n".join(lines) + ("\n" if lines else "")


def from_edge_list(text: str, n: int) -> Tuple[Graph, Matching]:
    g = Graph(n)
    matched: List[Edge] = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if len(parts) not in (2, 3) or (len(parts) == 3 and parts[2] != "M"):
            raise ValueError(f"bad edge-list line: {raw!r}")
        u, v = int(parts[0]), int(parts[1])
        g.insert(u, v)
        if len(parts) == 3:
            matched.append((u, v))
    return g, Matching.from_edges(n, matched)
