import pytest

from dymatch.errors import DuplicateEdge, MissingEdge, SelfLoop, StateCorrupt, UnbalancedPartition
from dymatch.graphstate import (
    Graph,
    Matching,
    Partition,
    apply_delete,
    apply_insert,
    balance_bound,
    from_edge_list,
    local_view,
    to_edge_list,
    validate_partition,
)


def test_insert_is_symmetric():
    g = apply_insert(Graph(5), 1, 2)
    assert g.m == 1
    assert g.has_edge(1, 2) and g.has_edge(2, 1)


def test_insert_twice_rejected():
    g = apply_insert(Graph(5), 1, 2)
    with pytest.raises(DuplicateEdge):
        apply_insert(g, 2, 1)


def test_self_loop_rejected():
    with pytest.raises(SelfLoop):
        apply_insert(Graph(5), 3, 3)


def test_delete_matched_edge_frees_both_ends():
    g = Graph.from_edges(4, [(1, 2), (2, 3)])
    m = Matching.from_edges(4, [(1, 2)])
    apply_delete(g, 1, 2, m)
    assert g.m == 1
    assert m.is_free(1) and m.is_free(2)


def test_delete_unmatched_edge_keeps_matching():
    g = Graph.from_edges(4, [(1, 2), (2, 3)])
    m = Matching.from_edges(4, [(1, 2)])
    apply_delete(g, 2, 3, m)
    assert m.partner[1] == 2


def test_delete_missing_edge():
    with pytest.raises(MissingEdge):
        apply_delete(Graph.from_edges(10, [(1, 2)]), 1, 9)


def test_balance_bound_values():
    assert balance_bound(100, 10) == 70
    assert balance_bound(10, 2) == 20
    assert balance_bound(1, 1) == 1


def test_partition_validation():
    validate_partition(Partition.contiguous(100, 10), 100, 10)
    with pytest.raises(UnbalancedPartition) as info:
        validate_partition(Partition(owner=[0] * 100, k=10), 100, 10)
    assert info.value.load == 100 and info.value.bound == 70


def test_everything_on_one_player_is_within_the_bound():
    # ceil(10/2) * ceil(log2 10) = 20 >= 10
    validate_partition(Partition(owner=[1] * 10, k=2), 10, 2)


def test_contiguous_split():
    assert Partition.contiguous(10, 2).hosted == [[0, 1, 2, 3, 4], [5, 6, 7, 8, 9]]


def test_from_hosted_rejects_gaps():
    with pytest.raises(StateCorrupt):
        Partition.from_hosted([[0, 1], [3]], 4)


def test_matching_validate_catches_non_edges():
    g = Graph.from_edges(4, [(0, 1)])
    m = Matching(4)
    m.partner[2], m.partner[3] = 3, 2
    with pytest.raises(StateCorrupt):
        m.validate(g)


def test_local_view_only_shows_hosted_status():
    g = Graph.from_edges(4, [(0, 1), (1, 2), (2, 3)])
    m = Matching.from_edges(4, [(1, 2)])
    view = local_view(g, m, Partition.contiguous(4, 2), 0)
    assert view.hosted == (0, 1)
    assert set(view.partner) == {0, 1}
    assert view.partner[1] == 2
    # neighbours come with their owner but no status
    assert view.neighbors[1] == ((0, 0), (2, 1))


def test_edge_list_round_trip():
    g = Graph.from_edges(5, [(0, 1), (1, 2), (3, 4)])
    m = Matching.from_edges(5, [(1, 2)])
    text = to_edge_list(g, m)
    assert text == "0 1\n1 2 M\n3 4\n"
    g2, m2 = from_edge_list(text, 5)
    assert g2.edges() == g.edges() and m2.edges() == m.edges()
