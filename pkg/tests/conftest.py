import random

import pytest

from dymatch.graphstate import Graph, Matching, Partition
from dymatch.simcore import SimConfig, new_simulation


def random_graph(rnd: random.Random, n: int, m: int) -> Graph:
    pairs = [(u, v) for u in range(n) for v in range(u + 1, n)]
    return Graph.from_edges(n, rnd.sample(pairs, min(m, len(pairs))))


def greedy_matching(g: Graph, order=None) -> Matching:
    m = Matching(g.n)
    for u, v in order if order is not None else g.edges():
        if m.is_free(u) and m.is_free(v):
            m.match(u, v)
    return m


def load_state(sim, edges, matched=()):
    """Install a graph and matching directly, bypassing the algorithms."""
    for u, v in edges:
        sim.insert_edge(u, v)
    for u, v in matched:
        sim.match(u, v)


@pytest.fixture
def small_sim():
    def make(n=10, k=2, beta=1, seed=0, partition=None):
        return new_simulation(SimConfig(n, k, beta, seed), partition)

    return make


@pytest.fixture
def rnd():
    return random.Random(12345)
