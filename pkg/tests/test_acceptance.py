"""Acceptance criteria 1-9, each at its stated tolerance.

Every test prints one ``criterion N: PASS|FAIL ...`` line (shown even when
pytest captures output) and then asserts.
"""

import math
import random
import statistics

import numpy as np
import pytest

from dymatch import batchinc, fullydyn
from dymatch.adversary import Delete, DeleteMatched, InsertBatch, random_workload, update_kind
from dymatch.experiments import bench_batchinc_cell, bench_fullydyn_cell, fit_linear, fullydyn_bound, run_lb_trial
from dymatch.graphstate import Graph
from dymatch.oracle import certify, check_phase_invariants, max_matching_size, mcm_size
from dymatch.runner import workload_rng
from dymatch.simcore import SimConfig, Token, TokenKind, new_simulation
from dymatch.spreading import spread

# shared across criteria: bandwidth maxima and the ratio implication
LEDGER = {"link_violations": [], "implication_checks": 0, "implication_failures": []}


@pytest.fixture
def report(capsys):
    def emit(number, ok, detail):
        with capsys.disabled():
            print(f"\ncriterion {number}: {'PASS' if ok else 'FAIL'} {detail}")

    return emit


def note_bandwidth(label, sim):
    if sim.metrics.max_link_tokens_per_round > sim.beta:
        LEDGER["link_violations"].append((label, sim.metrics.max_link_tokens_per_round, sim.beta))


def certify_and_note(g, m, label):
    cert = certify(g, m)
    if cert.maximal and cert.three_aug_count == 0:
        LEDGER["implication_checks"] += 1
        if 3 * cert.matching_size < 2 * cert.mcm:
            LEDGER["implication_failures"].append(label)
    return cert


# -- criteria 1 and 3 ---------------------------------------------------------------

FULLYDYN_SEQUENCES = 500
FULLYDYN_UPDATES = 100


def fullydyn_sequence(i):
    rnd = random.Random(i)
    k = rnd.choice([2, 4, 8])
    beta = rnd.choice([1, 4])
    n = rnd.randint(max(k, 8), 60)
    adaptive = i % 2 == 1
    return n, k, beta, adaptive


@pytest.fixture(scope="module")
def fullydyn_sweep():
    failures, memory_failures = [], []
    updates = 0
    for i in range(FULLYDYN_SEQUENCES):
        n, k, beta, adaptive = fullydyn_sequence(i)
        sim = new_simulation(SimConfig(n, k, beta, seed=i))
        rng = workload_rng(i)
        if adaptive:
            strategy = DeleteMatched(rng, p_insert=0.55, max_edges=24)
            seq = None
        else:
            seq = iter(random_workload(rng, n, FULLYDYN_UPDATES, p_delete=0.35, max_edges=24))
        for step in range(FULLYDYN_UPDATES):
            upd = strategy(sim) if seq is None else next(seq, None)
            if upd is None:
                break
            sim.begin_update(update_kind(upd))
            kind = "delete" if isinstance(upd, Delete) else "insert"
            fullydyn.apply_update(sim, kind, upd.u, upd.v)
            sim.end_update()
            updates += 1
            cert = certify_and_note(sim.graph, sim.matching, ("fullydyn", i, step))
            if not cert.ok:
                failures.append((i, step, cert.as_dict(), cert.witness))
            for p in range(sim.k):
                if sim.snapshot_player_state(p) != sim.expected_player_state(p):
                    memory_failures.append((i, step, p))
        note_bandwidth(("fullydyn", i), sim)
    return {"failures": failures, "memory_failures": memory_failures, "updates": updates}


def test_criterion_1_fully_dynamic_correctness(fullydyn_sweep, report):
    f = fullydyn_sweep["failures"]
    ok = not f and fullydyn_sweep["updates"] >= FULLYDYN_SEQUENCES * FULLYDYN_UPDATES
    report(1, ok, f"{FULLYDYN_SEQUENCES} sequences, {fullydyn_sweep['updates']} updates, {len(f)} failing updates")
    assert ok, f[:5]


def test_criterion_3_memoryless(fullydyn_sweep, report):
    f = fullydyn_sweep["memory_failures"]
    report(3, not f, f"state equality checked after {fullydyn_sweep['updates']} updates, {len(f)} mismatches")
    assert not f, f[:5]


# -- criterion 2 ----------------------------------------------------------------

BATCH_SEQUENCES = 500
BATCHES_PER_SEQUENCE = 6


@pytest.fixture(scope="module")
def batch_sweep():
    failures, phase_failures = [], []
    phase_checks = batches = 0
    for i in range(BATCH_SEQUENCES):
        rnd = random.Random(10_000 + i)
        k = rnd.choice([2, 4, 8])
        beta = rnd.choice([1, 4])
        b = batchinc.minibatch_size(k, beta)
        n = rnd.randint(max(k, 3 * b + 4), 60)
        sim = new_simulation(SimConfig(n, k, beta, seed=i))
        gen = np.random.default_rng(np.random.SeedSequence([i, 0xBA]))

        def hook(ctx, phase, i=i):
            nonlocal phase_checks
            phase_checks += 1
            rep = check_phase_invariants(ctx, sim.graph, sim.matching, phase)
            if not rep.ok:
                phase_failures.append((i, ctx.index, phase, rep.failures()))

        for j in range(BATCHES_PER_SEQUENCE):
            ell = (1, b, 3 * b + 1)[j % 3]
            absent = [(u, v) for u in range(n) for v in range(u + 1, n) if not sim.graph.has_edge(u, v)]
            if len(absent) < ell:
                break
            picks = gen.choice(len(absent), size=ell, replace=False)
            upd = InsertBatch(tuple(absent[int(x)] for x in picks))
            sim.begin_update("batch", ell)
            batchinc.process_batch(sim, upd.edges, hook)
            sim.end_update()
            batches += 1
            cert = certify_and_note(sim.graph, sim.matching, ("batchinc", i, j))
            if not cert.ok:
                failures.append((i, j, cert.as_dict(), cert.witness))
        note_bandwidth(("batchinc", i), sim)
    return {"failures": failures, "phase_failures": phase_failures, "phase_checks": phase_checks, "batches": batches}


def test_criterion_2_batch_correctness(batch_sweep, report):
    f, pf = batch_sweep["failures"], batch_sweep["phase_failures"]
    ok = not f and not pf
    report(2, ok, f"{BATCH_SEQUENCES} sequences, {batch_sweep['batches']} batches, "
                  f"{batch_sweep['phase_checks']} phase checks, {len(f)} failing batches, {len(pf)} failing phases")
    assert ok, (f[:3], pf[:3])


# -- criterion 5 ------------------------------------------------------------------

def spread_rounds(N, k, beta, skewed):
    sim = new_simulation(SimConfig(max(k, 64), k, beta))
    batch = [[] for _ in range(k)]
    rnd = random.Random(N * 131 + k * 7 + beta)
    for t in range(N):
        batch[0 if skewed else rnd.randrange(k)].append(Token(TokenKind.VERTEX, (t,)))
    res = spread(sim, batch)
    note_bandwidth(("spread", N, k, beta), sim)
    assert all(len(r) == N for r in res.received)
    return res.rounds


def test_criterion_5_spreading_bound(report):
    bad_bound, bad_ratio = [], []
    cells = 0
    for k in (2, 4, 8, 16):
        for beta in (1, 2, 8):
            for skewed in (True, False):
                rounds = {}
                for mult in (1, 4, 16, 64):
                    N = mult * beta * k
                    rounds[mult] = r = spread_rounds(N, k, beta, skewed)
                    cells += 1
                    if r > 3 * (math.ceil(N / (beta * k)) + 2):
                        bad_bound.append((N, k, beta, r))
                ratio = rounds[64] / rounds[16]
                if not 3 <= ratio <= 5:
                    bad_ratio.append((k, beta, ratio))
    ok = not bad_bound and not bad_ratio
    report(5, ok, f"{cells} cells, {len(bad_bound)} over the round bound, {len(bad_ratio)} ratios outside [3,5]")
    assert ok, (bad_bound, bad_ratio)


# -- criterion 6 ------------------------------------------------------------------

def test_criterion_6_fully_dynamic_scaling(report):
    k, beta = 4, 1
    sizes = (64, 256, 1024)
    means = {}
    for m in sizes:
        cell = bench_fullydyn_cell(m, k, beta, deletions=100, seed=0, graphs=4)
        if cell.max_link_tokens > beta:
            LEDGER["link_violations"].append(("fullydyn-bench", m, cell.max_link_tokens))
        means[m] = cell.mean_rounds
    bounds = [fullydyn_bound(m, k, beta) for m in sizes]
    c, c0 = fit_linear(bounds, [means[m] for m in sizes])
    envelope = all(means[m] <= 12 * b + 10 for m, b in zip(sizes, bounds))
    ratios = [means[b] / means[a] for a, b in zip(sizes, sizes[1:])]
    ok = c <= 12 and c0 <= 10 and envelope and all(r <= 3 for r in ratios)
    shown = ", ".join(f"m={m}: {means[m]:.2f}" for m in sizes)
    report(6, ok, f"mean rounds {shown}; fit C={c:.2f} C0={c0:.2f}; "
                  f"4x-m ratios {', '.join(f'{r:.2f}' for r in ratios)}")
    assert ok


# -- criterion 7 ------------------------------------------------------------------

def test_criterion_7_batch_scaling(report):
    k, beta, n = 4, 4, 1024
    cells = {ell: bench_batchinc_cell(ell, k, beta, n=n, batches=3, seed=0) for ell in (64, 256)}
    ratio = cells[256].mean_rounds / cells[64].mean_rounds

    # structural per-mini-batch bounds on random batches
    sim = new_simulation(SimConfig(n, k, beta, seed=1))
    gen = np.random.default_rng(7)
    bad_spreads, bad_iters, per_minibatch = [], [], []
    for ell in (16, 64, 256, 256):
        chosen = set()
        while len(chosen) < ell:
            u, v = sorted(int(x) for x in gen.choice(n, size=2, replace=False))
            if not sim.graph.has_edge(u, v):
                chosen.add((u, v))
        sim.begin_update("batch", ell)
        res = batchinc.process_batch(sim, sorted(chosen))
        sim.end_update()
        for ctx in res.minibatches:
            per_minibatch.append(sum(ctx.rounds.values()))
            if ctx.spreads_outside_phase2 > 10:
                bad_spreads.append((ell, ctx.index, ctx.spreads_outside_phase2))
            if ctx.W and ctx.phase2_iterations > len(ctx.W):
                bad_iters.append((ell, ctx.index, ctx.phase2_iterations, len(ctx.W)))
    note_bandwidth(("batch-scaling",), sim)
    median = statistics.median(per_minibatch)
    limit = 20 * math.ceil(math.log2(n))
    ok = 2.5 <= ratio <= 6 and not bad_spreads and not bad_iters
    report(7, ok, f"rounds l=64: {cells[64].mean_rounds:.1f}, l=256: {cells[256].mean_rounds:.1f}, ratio {ratio:.2f}; "
                  f"{len(per_minibatch)} mini-batches, {len(bad_spreads)} over 10 spreads, "
                  f"{len(bad_iters)} over |W| iterations; median rounds per mini-batch {median} "
                  f"(reported, limit {limit}: {'within' if median <= limit else 'above'})")
    assert ok, (bad_spreads[:3], bad_iters[:3])


# -- criterion 8 ------------------------------------------------------------------

def test_criterion_8_lower_bound_consistency(report):
    trials = []
    for n, k in ((40, 4), (200, 4), (200, 8)):
        width = n // (5 * k)
        for t in range(20):
            ell = 1 + t % width
            trial, _ = run_lb_trial(n, k, ell, seed=n + k, trial=t)
            if trial.max_link_tokens > 1:
                LEDGER["link_violations"].append(("lb", n, k, t, trial.max_link_tokens))
            trials.append((n, k, trial))
    bad = [(n, k, tr.trial, tr.flip_violations, tr.segments_with_3aug, tr.bits_to_P, tr.ell)
           for n, k, tr in trials if not tr.ok]
    flips = sum(tr.flips_required for _, _, tr in trials)
    ok = len(trials) >= 50 and not bad
    report(8, ok, f"{len(trials)} instances, {flips} required flips, {len(bad)} inconsistent")
    assert ok, bad[:3]


# -- criterion 9 ------------------------------------------------------------------

def test_criterion_9_oracle_self_check(report):
    rnd = random.Random(99)
    disagreements = []
    for i in range(10_000):
        n = rnd.randint(2, 14)
        pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
        g = Graph.from_edges(n, rnd.sample(pairs, min(len(pairs), rnd.randint(0, 24))))
        a, b = max_matching_size(g), mcm_size(g)
        if a != b:
            disagreements.append((i, a, b))
    fired = LEDGER["implication_failures"]
    ok = not disagreements and not fired
    report(9, ok, f"10000 graphs, {len(disagreements)} disagreements; ratio implication checked "
                  f"{LEDGER['implication_checks']} times, fired {len(fired)}")
    assert ok, (disagreements[:3], fired[:3])


# -- criterion 4 (runs last: collects every experiment above) ---------------------------

def test_criterion_4_bandwidth(report):
    v = LEDGER["link_violations"]
    report(4, not v, f"max tokens per link per round within beta in every experiment, {len(v)} violations")
    assert not v, v[:5]
