"""Insert a batch and look at what each phase of each mini-batch did.

Run with ``python3 demos/batch_walkthrough.py``.
"""

import numpy as np

from dymatch import batchinc
from dymatch.oracle import certify, check_phase_invariants
from dymatch.simcore import SimConfig, new_simulation

n, k, beta = 60, 4, 4
sim = new_simulation(SimConfig(n, k, beta, seed=1))
rng = np.random.default_rng(5)
print(f"{n} vertices, {k} players, beta={beta}: mini-batches of {batchinc.minibatch_size(k, beta)} edges\n")


def hook(ctx, phase):
    rep = check_phase_invariants(ctx, sim.graph, sim.matching, phase)
    assert rep.ok, rep.failures()


for ell in (6, 13, 30):
    edges = set()
    while len(edges) < ell:
        u, v = sorted(int(x) for x in rng.choice(n, size=2, replace=False))
        if not sim.graph.has_edge(u, v):
            edges.add((u, v))
    stats = sim.begin_update("batch", ell)
    res = batchinc.process_batch(sim, sorted(edges), hook)
    sim.end_update()
    print(f"batch of {ell}: {stats.rounds} rounds over {len(res.minibatches)} mini-batches")
    for ctx in res.minibatches:
        print(f"  #{ctx.index}: |F|={len(ctx.F)} |I1|={len(ctx.I1)} triangles={len(ctx.triangles)} "
              f"|I|={len(ctx.I)} |X|={len(ctx.X)} proposal iterations={ctx.phase2_iterations} "
              f"rounds={ctx.rounds}")
    cert = certify(sim.graph, sim.matching)
    print(f"  matching {cert.matching_size} of maximum {cert.mcm}, maximal={cert.maximal}, "
          f"3-aug paths={cert.three_aug_count}\n")
