"""All-to-all token dissemination.

Three deterministic steps, each respecting the per-link budget:

1. every player announces how many tokens it holds (one round);
2. players above the fair share ``ceil(N/k)`` hand their excess to players
   below it, dealing tokens round-robin over the receivers;
3. every player sends its (at most fair-share) tokens to all others.

Steps 2 and 3 each take ``ceil(ceil(N/k)/beta) = ceil(N/(beta k))`` rounds in
the worst case, so the total is ``1 + 2*ceil(N/(beta k))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

from .errors import StateCorrupt
from .simcore import Simulation, Token, TokenKind


@dataclass
class SpreadResult:
    received: List[List[Token]]
    rounds: int
    total: int

    def common(self) -> List[Token]:
        """The token list every player ended up with (they are all equal)."""
        return self.received[0]


def spread_round_bound(n_tokens: int, k: int, beta: int) -> int:
    return 1 + 2 * math.ceil(n_tokens / (beta * k))


def _rebalance(held: List[List[Token]], cap: int) -> Dict[Tuple[int, int], List[Token]]:
    k = len(held)
    room = {p: cap - len(held[p]) for p in range(k) if len(held[p]) < cap}
    moves: Dict[Tuple[int, int], List[Token]] = {}
    receivers = sorted(room)
    idx = 0
    for p in range(k):
        excess = len(held[p]) - cap
        if excess <= 0:
            continue
        give, held[p] = held[p][cap:], held[p][:cap]
        for tok in give:
            # next receiver with room, cycling so one sender's excess fans out
            for _ in range(len(receivers)):
                r = receivers[idx % len(receivers)]
                idx += 1
                if room[r] > 0:
                    break
            else:  # pragma: no cover - counts guarantee room exists
                raise StateCorrupt("spreading rebalance ran out of room")
            room[r] -= 1
            moves.setdefault((p, r), []).append(tok)
    for (p, r), toks in moves.items():
        held[r].extend(toks)
    return moves


def spread(sim: Simulation, batch: Sequence[Sequence[Token]]) -> SpreadResult:
    """Deliver every token in ``batch`` (indexed by origin player) to all players."""
    if sim._spreading:
        raise StateCorrupt("spread is not re-entrant; merge concurrent batches")
    if len(batch) != sim.k:
        raise StateCorrupt(f"token batch has {len(batch)} origins, expected {sim.k}")
    sim._spreading = True
    try:
        sim.note_spread()
        start = sim.round
        k = sim.k
        held = [list(toks) for toks in batch]

        # step 1: counts, one token on every link
        counts = {(i, j): [Token(TokenKind.CONTROL, (len(held[i]),))] for i in range(k) for j in range(k) if i != j}
        sim.run_round(counts)
        total = sum(len(h) for h in held)
        if total == 0:
            return SpreadResult([[] for _ in range(k)], sim.round - start, 0)

        # step 2: balance to the fair share
        cap = math.ceil(total / k)
        moves = _rebalance(held, cap)
        sim.deliver(moves)

        # step 3: everyone broadcasts its share
        outgoing = {(i, j): held[i] for i in range(k) for j in range(k) if i != j and held[i]}
        inboxes, _ = sim.deliver(outgoing)
        received: List[List[Token]] = []
        for p in range(k):
            seen = {t.key: t for t in held[p]}
            for toks in inboxes[p].values():
                for t in toks:
                    seen.setdefault(t.key, t)
            received.append([seen[key] for key in sorted(seen)])
        return SpreadResult(received, sim.round - start, total)
    finally:
        sim._spreading = False
