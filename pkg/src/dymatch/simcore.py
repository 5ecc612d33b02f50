"""Synchronous round engine for k fully connected players.

Every ordered pair of players shares a link that carries at most ``beta``
tokens per round.  One token stands for ``token_bits`` bits (a constant
multiple of ``log2 n``), so bandwidth is audited by counting tokens.
"""

from __future__ import annotations

import enum
import json
import math
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Sequence, Tuple

import numpy as np

from .errors import BadConfig, LinkOverflow, StateCorrupt
from .graphstate import Graph, LocalView, Matching, Partition, local_view, validate_partition

TOKEN_BITS_FACTOR = 3
MAX_TOKEN_FIELDS = 4
NONE_ID = -1


class TokenKind(enum.IntEnum):
    EDGE = 0
    VERTEX = 1
    STATUS = 2
    QUERY = 3
    CONTROL = 4


@dataclass(frozen=True, order=True)
class Token:
    kind: TokenKind
    payload: Tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if len(self.payload) > MAX_TOKEN_FIELDS:
            raise ValueError(f"token payload has {len(self.payload)} fields (max {MAX_TOKEN_FIELDS})")

    @property
    def key(self) -> Tuple[int, Tuple[int, ...]]:
        return (int(self.kind), self.payload)


def default_token_bits(n: int) -> int:
    return max(1, math.ceil(TOKEN_BITS_FACTOR * math.log2(max(n, 2))))


@dataclass
class SimConfig:
    n: int
    k: int
    beta: int = 1
    seed: int = 0
    token_bits: Optional[int] = None

    def __post_init__(self) -> None:
        if self.k < 2:
            raise BadConfig(f"need at least 2 players, got k={self.k}")
        if self.n < self.k:
            raise BadConfig(f"need n >= k, got n={self.n}, k={self.k}")
        if self.beta < 1:
            raise BadConfig(f"beta must be >= 1, got {self.beta}")
        if not 0 <= self.seed < 2**64:
            raise BadConfig("seed must fit in 64 bits")
        if self.token_bits is None:
            self.token_bits = default_token_bits(self.n)


@dataclass
class UpdateStats:
    index: int
    kind: str
    ell: int = 1
    rounds: int = 0
    tokens: int = 0
    spreading_invocations: int = 0
    max_link_tokens: int = 0
    extra: Dict[str, Any] = field(default_factory=dict)


@dataclass
class Metrics:
    rounds_total: int = 0
    rounds_per_update: List[int] = field(default_factory=list)
    max_link_tokens_per_round: int = 0
    spreading_invocations: int = 0
    bits_received_per_player: List[int] = field(default_factory=list)
    tokens_per_update: List[int] = field(default_factory=list)
    tokens_total: int = 0


@dataclass
class PlayerMemory:
    """Persistent record of one player: its input and its output, nothing else.

    ``kept`` exists so that a misbehaving algorithm has somewhere visible to
    stash state; the memoryless check requires it to stay empty.
    """

    player: int
    hosted: List[int]
    adj: Dict[int, set] = field(default_factory=dict)
    partner: Dict[int, Optional[int]] = field(default_factory=dict)
    m: int = 0
    kept: Dict[str, Any] = field(default_factory=dict)

    def serialize(self) -> bytes:
        record = {
            "player": self.player,
            "hosted": sorted(self.hosted),
            "adj": {str(v): sorted(self.adj[v]) for v in sorted(self.hosted)},
            "partner": {str(v): self.partner[v] for v in sorted(self.hosted)},
            "m": self.m,
            "kept": self.kept,
        }
        return json.dumps(record, sort_keys=True, separators=(",", ":")).encode()


Plan = Mapping[Tuple[int, int], Sequence[Token]]
Inbox = Dict[int, List[Token]]


class Simulation:
    def __init__(self, config: SimConfig, partition: Partition):
        validate_partition(partition, config.n, config.k)
        self.config = config
        self.partition = partition
        self.graph = Graph(config.n)
        self.matching = Matching(config.n)
        self.players = [PlayerMemory(p, verts) for p, verts in enumerate(partition.hosted)]
        for mem in self.players:
            for v in mem.hosted:
                mem.adj[v] = set()
                mem.partner[v] = None
        self.round = 0
        self.metrics = Metrics(bits_received_per_player=[0] * config.k)
        self.update_index = 0
        self.history: List[UpdateStats] = []
        self.current: Optional[UpdateStats] = None
        self._in_round = False
        self._spreading = False

    # -- basic accessors -------------------------------------------------
    @property
    def k(self) -> int:
        return self.config.k

    @property
    def beta(self) -> int:
        return self.config.beta

    @property
    def n(self) -> int:
        return self.config.n

    def owner(self, v: int) -> int:
        return self.partition.owner[v]

    def local_view(self, p: int) -> LocalView:
        return local_view(self.graph, self.matching, self.partition, p)

    def rng(self, player: int, *keys: int) -> np.random.Generator:
        """Private coins of ``player`` for the current update."""
        seq = np.random.SeedSequence([self.config.seed, player, self.update_index, *keys])
        return np.random.default_rng(seq)

    # -- communication ----------------------------------------------------
    def run_round(self, plan: Plan) -> List[Inbox]:
        """Deliver one synchronous round; raises :class:`LinkOverflow` on excess."""
        if self._in_round:
            raise StateCorrupt("run_round is not re-entrant")
        k, beta = self.k, self.beta
        for (i, j), toks in plan.items():
            if i == j or not (0 <= i < k and 0 <= j < k):
                raise StateCorrupt(f"invalid link {i}->{j}")
            if len(toks) > beta:
                raise LinkOverflow(i, j, len(toks), beta)
        self._in_round = True
        inboxes: List[Inbox] = [dict() for _ in range(k)]
        busiest = 0
        sent = 0
        for (i, j) in sorted(plan):
            toks = list(plan[(i, j)])
            if not toks:
                continue
            inboxes[j].setdefault(i, []).extend(toks)
            busiest = max(busiest, len(toks))
            sent += len(toks)
            self.metrics.bits_received_per_player[j] += len(toks) * self.config.token_bits
        self.round += 1
        self.metrics.rounds_total += 1
        self.metrics.tokens_total += sent
        self.metrics.max_link_tokens_per_round = max(self.metrics.max_link_tokens_per_round, busiest)
        if self.current is not None:
            self.current.rounds += 1
            self.current.tokens += sent
            self.current.max_link_tokens = max(self.current.max_link_tokens, busiest)
        self._in_round = False
        return inboxes

    def deliver(
        self, messages: Mapping[Tuple[int, int], Sequence[Token]], min_rounds: int = 0
    ) -> Tuple[List[Inbox], int]:
        """Ship arbitrary per-link queues, ``beta`` tokens per link per round.

        Messages addressed to oneself are local and cost nothing.  Returns the
        merged inboxes and the number of rounds used (``ceil(max_load/beta)``,
        padded with silent rounds up to ``min_rounds``; a reply step whose
        silence carries information still costs its round).
        """
        inboxes: List[Inbox] = [dict() for _ in range(self.k)]
        queues: Dict[Tuple[int, int], List[Token]] = {}
        for (i, j), toks in messages.items():
            if not toks:
                continue
            if i == j:
                inboxes[j].setdefault(i, []).extend(toks)
            else:
                queues[(i, j)] = list(toks)
        rounds = 0
        offset = 0
        while any(len(q) > offset for q in queues.values()):
            plan = {link: q[offset:offset + self.beta] for link, q in queues.items() if len(q) > offset}
            for j, box in enumerate(self.run_round(plan)):
                for i, toks in box.items():
                    inboxes[j].setdefault(i, []).extend(toks)
            offset += self.beta
            rounds += 1
        while rounds < min_rounds:
            self.run_round({})
            rounds += 1
        return inboxes, rounds

    def broadcast_from(self, sender: int, tokens: Sequence[Token]) -> Tuple[List[Inbox], int]:
        """Send the same short message from ``sender`` to every other player."""
        return self.deliver({(sender, j): list(tokens) for j in range(self.k) if j != sender})

    # -- input and output -------------------------------------------------
    def insert_edge(self, u: int, v: int) -> None:
        self.graph.insert(u, v)
        self.players[self.owner(u)].adj[u].add(v)
        self.players[self.owner(v)].adj[v].add(u)
        for mem in self.players:
            mem.m = self.graph.m

    def delete_edge(self, u: int, v: int) -> bool:
        """Remove ``{u, v}``; returns True when the edge was matched."""
        was_matched = self.matching.partner[u] == v
        self.graph.delete(u, v)
        self.players[self.owner(u)].adj[u].discard(v)
        self.players[self.owner(v)].adj[v].discard(u)
        if was_matched:
            self.set_partner(u, None)
            self.set_partner(v, None)
        for mem in self.players:
            mem.m = self.graph.m
        return was_matched

    def set_partner(self, x: int, y: Optional[int]) -> None:
        """Write the output entry of ``x`` at its host (and the ground truth)."""
        self.players[self.owner(x)].partner[x] = y
        self.matching.partner[x] = y

    def match(self, a: int, b: int) -> None:
        if self.matching.partner[a] is not None or self.matching.partner[b] is not None:
            raise StateCorrupt(f"cannot match {a}-{b}: endpoint already matched")
        self.set_partner(a, b)
        self.set_partner(b, a)

    def unmatch(self, a: int, b: int) -> None:
        if self.matching.partner[a] != b:
            raise StateCorrupt(f"{a}-{b} is not matched")
        self.set_partner(a, None)
        self.set_partner(b, None)

    # -- update bookkeeping ----------------------------------------------
    def begin_update(self, kind: str, ell: int = 1) -> UpdateStats:
        if self.current is not None:
            raise StateCorrupt("previous update still in flight")
        self.current = UpdateStats(index=self.update_index, kind=kind, ell=ell)
        return self.current

    def end_update(self) -> UpdateStats:
        stats = self.current
        if stats is None:
            raise StateCorrupt("no update in flight")
        self.current = None
        self.history.append(stats)
        self.metrics.rounds_per_update.append(stats.rounds)
        self.metrics.tokens_per_update.append(stats.tokens)
        self.update_index += 1
        return stats

    def note_spread(self) -> None:
        self.metrics.spreading_invocations += 1
        if self.current is not None:
            self.current.spreading_invocations += 1

    # -- inspection -------------------------------------------------------
    def snapshot_player_state(self, p: int) -> bytes:
        if self._in_round:
            raise StateCorrupt("cannot snapshot while a round is in flight")
        return self.players[p].serialize()

    def expected_player_state(self, p: int) -> bytes:
        """Serialization of player ``p`` rebuilt from (input graph, output matching)."""
        ref = PlayerMemory(p, list(self.players[p].hosted), m=self.graph.m)
        for v in ref.hosted:
            ref.adj[v] = set(self.graph.adj[v])
            ref.partner[v] = self.matching.partner[v]
        return ref.serialize()

    def check_consistency(self) -> None:
        self.matching.validate(self.graph)
        for mem in self.players:
            for v in mem.hosted:
                if mem.partner[v] != self.matching.partner[v] or mem.adj[v] != self.graph.adj[v]:
                    raise StateCorrupt(f"player {mem.player} disagrees with ground truth at {v}")


def new_simulation(config: SimConfig, partition: Optional[Partition] = None) -> Simulation:
    if partition is None:
        partition = Partition.contiguous(config.n, config.k)
    return Simulation(config, partition)


def run_round(sim: Simulation, plan: Plan) -> List[Inbox]:
    return sim.run_round(plan)


def snapshot_player_state(sim: Simulation, p: int) -> bytes:
    return sim.snapshot_player_state(p)


def collect(inbox: Inbox) -> List[Token]:
    """Flatten an inbox in sender order."""
    return [t for sender in sorted(inbox) for t in inbox[sender]]


def group_by_owner(sim: Simulation, items: Sequence[Tuple[int, Token]]) -> Dict[int, List[Token]]:
    out: Dict[int, List[Token]] = defaultdict(list)
    for v, tok in items:
        out[sim.owner(v)].append(tok)
    return out
