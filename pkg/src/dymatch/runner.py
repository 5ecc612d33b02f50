"""Drive a simulation through an update sequence and emit one record per update."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields
from typing import Any, Dict, Iterator, List, Mapping, Optional, Sequence

import numpy as np

from . import batchinc, fullydyn
from .adversary import (
    Delete,
    DeleteMatched,
    Replay,
    Strategy,
    Update,
    adaptive_step,
    random_workload,
    update_kind,
)
from .errors import BadConfig, InvalidUpdate, VerificationFailed
from .graphstate import Partition
from .oracle import certify, check_phase_invariants
from .simcore import SimConfig, Simulation, new_simulation

ALGORITHMS = ("fullydyn", "batchinc")
WORKLOADS = ("random", "delete-matched", "replay")
VERIFY_LEVELS = ("off", "post", "phase")


@dataclass
class RunConfig:
    """Everything a run needs; every field has a usable default except ``n`` and ``k``."""

    n: int
    k: int
    beta: int = 1
    seed: int = 0
    algorithm: str = "fullydyn"
    workload: str = "random"
    updates: int = 100
    p_delete: float = 0.3
    max_batch: int = 1
    max_edges: Optional[int] = None
    verify: str = "post"
    exact: bool = True

    def __post_init__(self) -> None:
        for name in ("n", "k", "beta", "seed", "updates", "max_batch"):
            value = getattr(self, name)
            if not isinstance(value, int) or isinstance(value, bool):
                raise BadConfig(f"{name} must be an integer, got {value!r}")
        if self.max_edges is not None and (not isinstance(self.max_edges, int) or self.max_edges < 0):
            raise BadConfig("max_edges must be a non-negative integer")
        if not isinstance(self.p_delete, (int, float)):
            raise BadConfig("p_delete must be a number")
        if self.algorithm not in ALGORITHMS:
            raise BadConfig(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.workload not in WORKLOADS:
            raise BadConfig(f"workload must be one of {WORKLOADS}, got {self.workload!r}")
        if self.verify not in VERIFY_LEVELS:
            raise BadConfig(f"verify must be one of {VERIFY_LEVELS}, got {self.verify!r}")
        if not 0.0 <= self.p_delete <= 1.0:
            raise BadConfig("p_delete must lie in [0, 1]")
        if self.updates < 0 or self.max_batch < 1:
            raise BadConfig("updates must be >= 0 and max_batch >= 1")
        if self.algorithm == "batchinc" and self.workload == "random" and self.p_delete > 0:
            raise BadConfig("batchinc handles insertions only; set p_delete = 0")
        if self.algorithm == "batchinc" and self.workload == "delete-matched":
            raise BadConfig("batchinc handles insertions only")
        SimConfig(self.n, self.k, self.beta, self.seed)

    @classmethod
    def from_mapping(cls, data: Mapping[str, Any]) -> "RunConfig":
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise BadConfig(f"unknown config keys: {', '.join(unknown)}")
        missing = [name for name in ("n", "k") if name not in data]
        if missing:
            raise BadConfig(f"missing config keys: {', '.join(missing)}")
        try:
            return cls(**dict(data))
        except TypeError as exc:
            raise BadConfig(str(exc)) from None

    def as_dict(self) -> Dict[str, Any]:
        return asdict(self)


def workload_rng(seed: int) -> np.random.Generator:
    # kept apart from the players' coins so the adversary never sees them
    return np.random.default_rng(np.random.SeedSequence([seed, 0xAD]))


class Runner:
    """Feeds updates to one algorithm and verifies the result as configured."""

    def __init__(self, config: RunConfig, partition: Optional[Partition] = None):
        self.config = config
        self.sim: Simulation = new_simulation(SimConfig(config.n, config.k, config.beta, config.seed), partition)
        self.phase_failures: List[Dict[str, Any]] = []

    def _phase_hook(self, ctx, phase: str) -> None:
        rep = check_phase_invariants(ctx, self.sim.graph, self.sim.matching, phase)
        if not rep.ok:
            raise VerificationFailed(
                f"{phase} invariants fail in mini-batch {ctx.index}: {rep.failures()}",
                {"phase": phase, "failures": {k: repr(v) for k, v in rep.failures().items()}},
            )

    def apply(self, upd: Update) -> None:
        sim = self.sim
        debug = self.config.verify == "phase"
        if self.config.algorithm == "fullydyn":
            for u, v in upd.edges:
                fullydyn.apply_update(sim, "delete" if isinstance(upd, Delete) else "insert", u, v, debug=debug)
        else:
            if isinstance(upd, Delete):
                raise InvalidUpdate("batchinc handles insertions only")
            batchinc.process_batch(sim, upd.edges, self._phase_hook if debug else None)

    def step(self, upd: Update) -> Dict[str, Any]:
        sim = self.sim
        stats = sim.begin_update(update_kind(upd), len(upd.edges))
        try:
            self.apply(upd)
        finally:
            sim.end_update()
        record: Dict[str, Any] = {
            "update_index": stats.index,
            "kind": stats.kind,
            "ell": stats.ell,
            "rounds": stats.rounds,
            "max_link_tokens": stats.max_link_tokens,
            "spreading_invocations": stats.spreading_invocations,
            "matching_size": sim.matching.size(),
        }
        if self.config.verify != "off":
            cert = certify(sim.graph, sim.matching, exact=self.config.exact)
            record["oracle"] = cert.as_dict()
            if not cert.ok:
                raise VerificationFailed(f"update {stats.index}: oracle check failed, witness {cert.witness}", record)
            if self.config.algorithm == "fullydyn":
                for p in range(sim.k):
                    if sim.snapshot_player_state(p) != sim.expected_player_state(p):
                        raise VerificationFailed(f"update {stats.index}: player {p} keeps extra state", record)
        if stats.max_link_tokens > sim.beta:
            raise VerificationFailed(f"update {stats.index}: link carried {stats.max_link_tokens} tokens", record)
        return record


def make_strategy(config: RunConfig, updates: Optional[Sequence[Update]] = None) -> Strategy:
    rng = workload_rng(config.seed)
    if config.workload == "replay" or updates is not None:
        return Replay(updates or [])
    if config.workload == "delete-matched":
        return DeleteMatched(rng, p_insert=1.0 - config.p_delete, max_edges=config.max_edges)
    seq = random_workload(rng, config.n, config.updates, config.p_delete, config.max_batch, config.max_edges)
    return Replay(seq)


def run(config: RunConfig, updates: Optional[Sequence[Update]] = None) -> Iterator[Dict[str, Any]]:
    """Yield one record per update; raises :class:`VerificationFailed` on a failed check."""
    runner = Runner(config)
    strategy = make_strategy(config, updates)
    limit = len(updates) if updates is not None else config.updates
    for _ in range(limit):
        upd = adaptive_step(strategy, runner.sim)
        if upd is None:
            break
        yield runner.step(upd)

