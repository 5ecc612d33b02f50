"""Round-scaling benchmarks and the lower-bound transcript measurement."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import asdict, dataclass, field
from typing import Any, Dict, List, Optional, Sequence, Tuple

import numpy as np

from . import batchinc, fullydyn
from .adversary import LBInstance, build_lb_instance, flip_required
from .oracle import find_3aug_paths
from .simcore import SimConfig, Simulation, new_simulation

BENCH_FIELDS = [
    "algorithm", "n", "k", "beta", "size", "samples", "mean_rounds", "max_rounds",
    "bound", "ratio", "max_link_tokens", "fit_C", "fit_C0",
]


@dataclass
class BenchCell:
    algorithm: str
    n: int
    k: int
    beta: int
    size: int  # m for fullydyn, ell for batchinc
    samples: int
    mean_rounds: float
    max_rounds: int
    bound: float
    ratio: float
    max_link_tokens: int
    rounds: List[int] = field(default_factory=list, repr=False)
    fit_C: Optional[float] = None
    fit_C0: Optional[float] = None

    def row(self) -> Dict[str, Any]:
        out = asdict(self)
        out.pop("rounds")
        out["mean_rounds"] = round(self.mean_rounds, 4)
        out["ratio"] = round(self.ratio, 4)
        for key in ("fit_C", "fit_C0"):
            out[key] = "" if out[key] is None else round(out[key], 4)
        return out


def fullydyn_bound(m: int, k: int, beta: int) -> int:
    return math.ceil(math.sqrt(m) / (k * beta))


def batchinc_bound(ell: int, k: int, beta: int) -> float:
    return ell / math.sqrt(k * beta)


def _insert_random_edges(sim: Simulation, rng: np.random.Generator, target_m: int) -> None:
    n = sim.n
    while sim.graph.m < target_m:
        u, v = (int(x) for x in rng.choice(n, size=2, replace=False))
        if sim.graph.has_edge(u, v):
            continue
        sim.begin_update("insert")
        fullydyn.apply_update(sim, "insert", u, v)
        sim.end_update()


def bench_fullydyn_cell(m: int, k: int, beta: int, deletions: int = 100, seed: int = 0, graphs: int = 4) -> BenchCell:
    """Mean rounds of adversarial deletions at a steady edge count ``m``.

    Each of ``graphs`` random graphs lives on ``4*sqrt(m)`` vertices (average
    degree about ``sqrt(m)/2``, so a deleted matched edge usually has no free
    neighbour and must be repaired through its matched neighbourhood).  The
    adversary deletes the matched edge with the largest endpoint degrees and
    puts it back right after, so ``m`` stays fixed; only deletions are timed.
    Single small graphs are noisy, hence the pooling over several.
    """
    n = max(4 * math.isqrt(m), k, 8)
    rounds: List[int] = []
    worst_link = 0
    for g in range(graphs):
        sim = new_simulation(SimConfig(n, k, beta, seed + g))
        rng = np.random.default_rng(np.random.SeedSequence([seed + g, m, k, beta]))
        _insert_random_edges(sim, rng, m)
        for _ in range(deletions):
            matched = sim.matching.edges()
            u, v = max(matched, key=lambda e: (sim.graph.degree(e[0]) + sim.graph.degree(e[1]), e))
            stats = sim.begin_update("delete")
            fullydyn.apply_update(sim, "delete", u, v)
            sim.end_update()
            rounds.append(stats.rounds)
            worst_link = max(worst_link, stats.max_link_tokens)
            sim.begin_update("insert")
            fullydyn.apply_update(sim, "insert", u, v)
            sim.end_update()
    mean = float(np.mean(rounds))
    bound = fullydyn_bound(m, k, beta)
    return BenchCell("fullydyn", n, k, beta, m, len(rounds), mean, max(rounds), bound, mean / bound, worst_link, rounds)


def bench_batchinc_cell(ell: int, k: int, beta: int, n: int = 1024, batches: int = 3, seed: int = 0) -> BenchCell:
    """Mean rounds of random insertion batches of size ``ell`` on a sparse graph."""
    sim = new_simulation(SimConfig(n, k, beta, seed))
    rng = np.random.default_rng(np.random.SeedSequence([seed, ell, k, beta, 7]))
    rounds = []
    worst_link = 0
    for _ in range(batches):
        chosen = set()
        while len(chosen) < ell:
            u, v = sorted(int(x) for x in rng.choice(n, size=2, replace=False))
            if not sim.graph.has_edge(u, v):
                chosen.add((u, v))
        stats = sim.begin_update("batch", ell)
        batchinc.process_batch(sim, sorted(chosen, key=lambda e: rng.random()))
        sim.end_update()
        rounds.append(stats.rounds)
        worst_link = max(worst_link, stats.max_link_tokens)
    mean = float(np.mean(rounds)) if rounds else 0.0
    bound = batchinc_bound(ell, k, beta)
    return BenchCell("batchinc", n, k, beta, ell, len(rounds), mean, max(rounds, default=0), bound,
                     mean / bound if bound else 0.0, worst_link, rounds)


def fit_linear(xs: Sequence[float], ys: Sequence[float]) -> Tuple[float, float]:
    """Least-squares ``y = C*x + C0``; returns ``(C, C0)``."""
    c, c0 = np.polyfit(np.asarray(xs, dtype=float), np.asarray(ys, dtype=float), 1)
    return float(c), float(c0)


def run_bench(grid: Dict[str, Any], seed: int = 0) -> List[BenchCell]:
    """Evaluate every cell of ``grid`` in order.

    ``grid`` keys: ``algorithm`` (fullydyn | batchinc), ``sizes`` (m or ell
    values), ``k`` and ``beta`` (lists), optional ``samples`` and ``n``.
    """
    algorithm = grid.get("algorithm", "fullydyn")
    cells = []
    for k in grid.get("k", [4]):
        for beta in grid.get("beta", [1]):
            for size in grid.get("sizes", []):
                if algorithm == "fullydyn":
                    cells.append(bench_fullydyn_cell(size, k, beta, grid.get("samples", 100), seed))
                else:
                    cells.append(bench_batchinc_cell(size, k, beta, grid.get("n", 1024), grid.get("samples", 3), seed))
    attach_fits(cells)
    return cells


def attach_fits(cells: Sequence[BenchCell]) -> None:
    """Fit ``mean = C*bound + C0`` within each (algorithm, k, beta) group."""
    groups: Dict[Tuple[str, int, int], List[BenchCell]] = {}
    for cell in cells:
        groups.setdefault((cell.algorithm, cell.k, cell.beta), []).append(cell)
    for group in groups.values():
        if len({c.bound for c in group}) < 2:
            continue
        c, c0 = fit_linear([g.bound for g in group], [g.mean_rounds for g in group])
        for cell in group:
            cell.fit_C, cell.fit_C0 = c, c0


def bench_csv(cells: Sequence[BenchCell]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=BENCH_FIELDS, lineterminator="\n")
    writer.writeheader()
    for cell in cells:
        writer.writerow(cell.row())
    return buf.getvalue()


# -- lower-bound transcript ----------------------------------------------------------

@dataclass
class LBTrial:
    trial: int
    ell: int
    bits_to_P: int
    reference_bits: int
    flips_required: int
    flips_seen: int
    flip_violations: List[int]
    segments_with_3aug: List[int]
    max_link_tokens: int = 0

    @property
    def ok(self) -> bool:
        return not self.flip_violations and not self.segments_with_3aug and self.bits_to_P >= self.ell


def run_lb_trial(n: int, k: int, ell: int, seed: int, trial: int = 0, gamma: Optional[Sequence[int]] = None,
                 beta: int = 1) -> Tuple[LBTrial, LBInstance]:
    """Set up the segments with single-edge batches, then insert the challenge batch."""
    rng = np.random.default_rng(np.random.SeedSequence([seed, trial, 0x1B]))
    inst = build_lb_instance(n, k, ell, rng, gamma)
    sim = new_simulation(SimConfig(n, k, beta, seed + trial), inst.partition)
    for upd in inst.setup_updates:
        sim.begin_update("batch", 1)
        batchinc.process_batch(sim, upd.edges)
        sim.end_update()
    # the adversary reads the outputs of the segment vertices
    pre = {}
    for i in inst.J_P:
        t, u, v, w, x = inst.segments[i]
        pre[i] = (sim.matching.partner[u] == v, sim.matching.partner[v] == w)
    bits_before = sim.metrics.bits_received_per_player[inst.P]
    sim.begin_update("batch", ell)
    batchinc.process_batch(sim, inst.challenge_batch.edges if inst.challenge_batch else [])
    sim.end_update()
    bits = sim.metrics.bits_received_per_player[inst.P] - bits_before

    required = seen = 0
    violations = []
    for i, bit in zip(inst.J_P, inst.gamma):
        t, u, v, w, x = inst.segments[i]
        post = (sim.matching.partner[u] == v, sim.matching.partner[v] == w)
        changed = post != pre[i]
        need = flip_required(pre[i][0], pre[i][1], bit)
        required += need
        seen += changed
        if need != changed:
            violations.append(i)
    seg_of = {x: i for i, seg in enumerate(inst.segments) for x in seg}
    bad = sorted({seg_of[p[1]] for p in find_3aug_paths(sim.graph, sim.matching)})
    token_bits = sim.config.token_bits or 1
    trial_rec = LBTrial(trial, ell, bits, ell * token_bits, required, seen, violations, bad,
                        sim.metrics.max_link_tokens_per_round)
    return trial_rec, inst


def run_lbexp(n: int, k: int, ell: int, trials: int, seed: int = 0,
              gamma: Optional[Sequence[int]] = None) -> List[LBTrial]:
    return [run_lb_trial(n, k, ell, seed, t, gamma)[0] for t in range(trials)]
