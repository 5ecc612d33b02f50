"""Follow the fully dynamic algorithm through a few hand-picked updates.

Run with ``python3 demos/fully_dynamic_walkthrough.py``.
"""

from dymatch import fullydyn
from dymatch.oracle import certify, find_3aug_paths
from dymatch.simcore import SimConfig, new_simulation


def show(sim, label, stats):
    cert = certify(sim.graph, sim.matching)
    print(f"{label:<34} rounds={stats.rounds:<3} matching={sim.matching.edges()} "
          f"maximal={cert.maximal} 3-aug={cert.three_aug_count}")


def update(sim, kind, u, v):
    stats = sim.begin_update(kind)
    fullydyn.apply_update(sim, kind, u, v, debug=True)
    sim.end_update()
    show(sim, f"{kind} {{{u},{v}}}", stats)


sim = new_simulation(SimConfig(n=8, k=2, beta=1, seed=0))
print("8 vertices on 2 players, one token per link per round\n")

# closing the path 1-2-3-4 around matched {2,3} forces a rotation
update(sim, "insert", 2, 3)
update(sim, "insert", 1, 2)
update(sim, "insert", 3, 4)
print("  paths after the last insert:", find_3aug_paths(sim.graph, sim.matching))

# deleting a matched edge frees both ends; each is repaired in turn
update(sim, "insert", 0, 5)
update(sim, "insert", 5, 6)
update(sim, "delete", 0, 5)

# a high-degree vertex: nobody in its neighbourhood is free
hub = new_simulation(SimConfig(n=202, k=4, beta=1, seed=3))
edges, matched = [(0, 1)], [(0, 1)]
for i in range(40):
    v, w, y, z, f = (2 + 5 * i + j for j in range(5))
    edges += [(0, v), (v, w), (w, y), (y, z), (z, f)]
    matched += [(v, w), (y, z)]
for u, v in edges:
    hub.insert_edge(u, v)
for u, v in matched:
    hub.match(u, v)
stats = hub.begin_update("delete")
fullydyn.apply_update(hub, "delete", 0, 1, debug=True)
hub.end_update()
print(f"\nhub deletion: rounds={stats.rounds}, sampling attempts={stats.extra['sampling_attempts']}, "
      f"hub now matched to {hub.matching.partner[0]}, ok={certify(hub.graph, hub.matching, exact=False).ok}")
