import numpy as np
import pytest

from dymatch import batchinc
from dymatch.adversary import (
    Delete,
    DeleteMatched,
    Insert,
    InsertBatch,
    apply_to_graph,
    build_lb_instance,
    dump_jsonl,
    flip_required,
    lb_partition,
    load_jsonl,
    random_workload,
    validate_update,
)
from dymatch.errors import BadDimensions, InvalidUpdate
from dymatch.graphstate import Graph
from dymatch.oracle import max_matching_size
from dymatch.simcore import SimConfig, new_simulation


def rng(seed=0):
    return np.random.default_rng(seed)


def test_random_workload_is_valid_against_the_evolving_graph():
    seq = random_workload(rng(1), 12, 300, p_delete=0.4, max_batch=3, max_edges=20)
    g = Graph(12)
    for upd in seq:
        validate_update(upd, g)
        apply_to_graph(upd, g)
        assert g.m <= 20
    assert any(isinstance(u, Delete) for u in seq)
    assert any(isinstance(u, InsertBatch) for u in seq)


def test_random_workload_is_deterministic():
    assert random_workload(rng(4), 10, 50, 0.3) == random_workload(rng(4), 10, 50, 0.3)


def test_no_deletions_without_delete_probability():
    seq = random_workload(rng(2), 10, 30, p_delete=0.0)
    assert all(isinstance(u, Insert) for u in seq)


def test_workload_stops_on_a_complete_graph():
    assert len(random_workload(rng(0), 4, 50, p_delete=0.0)) == 6


def test_invalid_updates_are_rejected():
    g = Graph.from_edges(4, [(0, 1)])
    with pytest.raises(InvalidUpdate):
        validate_update(Insert(0, 1), g)
    with pytest.raises(InvalidUpdate):
        validate_update(Delete(2, 3), g)
    with pytest.raises(InvalidUpdate):
        validate_update(InsertBatch(((1, 2), (2, 1))), g)
    with pytest.raises(InvalidUpdate):
        validate_update(Insert(3, 3), g)


def test_jsonl_round_trip():
    seq = [Insert(0, 1), Delete(0, 1), InsertBatch(((2, 3), (1, 4)))]
    assert load_jsonl(dump_jsonl(seq)) == seq
    with pytest.raises(InvalidUpdate):
        load_jsonl('{"op": "flip"}\n')


def test_delete_matched_targets_the_lowest_matched_edge():
    sim = new_simulation(SimConfig(6, 2))
    sim.insert_edge(2, 3)
    sim.insert_edge(0, 5)
    sim.match(2, 3)
    sim.match(0, 5)
    assert DeleteMatched(rng(), p_insert=0.0)(sim) == Delete(0, 5)


def test_delete_matched_inserts_on_an_empty_matching():
    sim = new_simulation(SimConfig(6, 2))
    assert isinstance(DeleteMatched(rng(), p_insert=0.0)(sim), Insert)


def test_delete_matched_respects_the_edge_cap():
    sim = new_simulation(SimConfig(6, 2))
    sim.insert_edge(0, 1)
    sim.match(0, 1)
    assert DeleteMatched(rng(), p_insert=1.0, max_edges=1)(sim) == Delete(0, 1)


# -- lower-bound construction ----------------------------------------------------------

def test_instance_shape():
    inst = build_lb_instance(40, 4, 2, rng())
    assert len(inst.segments) == 8
    assert len(inst.I_P) >= 2 and len(inst.J_P) == 2
    assert set(inst.J_P) <= set(inst.I_P)
    assert len(inst.setup_updates) == 16
    assert len(inst.challenge_batch.edges) == 2


def test_partition_is_balanced_and_separates_middle_vertices():
    for n, k in [(40, 4), (200, 4), (60, 3), (200, 8)]:
        part = lb_partition(n, k)
        assert part.loads() == [n // k] * k
        inst = build_lb_instance(n, k, 0, rng())
        for _, u, v, w, _ in inst.segments:
            assert len({part.owner[u], part.owner[v], part.owner[w]}) == 3


@pytest.mark.parametrize("n, k, ell", [(10, 3, 0), (40, 2, 1), (42, 4, 1), (40, 4, 3)])
def test_bad_dimensions(n, k, ell):
    with pytest.raises(BadDimensions):
        build_lb_instance(n, k, ell, rng())


def test_forced_bits_pick_the_edges():
    inst = build_lb_instance(40, 4, 2, rng(), gamma=[0, 0])
    for i, e in zip(inst.J_P, inst.challenge_batch.edges):
        t, u = inst.segments[i][:2]
        assert e == (min(t, u), max(t, u))
    with pytest.raises(BadDimensions):
        build_lb_instance(40, 4, 2, rng(), gamma=[1])


def test_flip_rule():
    assert flip_required(True, False, 0)
    assert not flip_required(True, False, 1)
    assert flip_required(False, True, 1)
    assert not flip_required(False, True, 0)


def test_setup_leaves_a_maximum_matching():
    # any maximal matching on disjoint 2-paths is maximum
    inst = build_lb_instance(40, 4, 2, rng(3))
    sim = new_simulation(SimConfig(40, 4, 1), inst.partition)
    for upd in inst.setup_updates:
        batchinc.process_batch(sim, upd.edges)
    assert sim.matching.size() == max_matching_size(sim.graph, cap=20) == 8
