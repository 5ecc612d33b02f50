import pytest

from dymatch import fullydyn
from dymatch.errors import BadConfig, LinkOverflow, StateCorrupt
from dymatch.graphstate import Partition
from dymatch.simcore import SimConfig, Token, TokenKind, default_token_bits, new_simulation, snapshot_player_state


def tok(*payload):
    return Token(TokenKind.VERTEX, payload)


def test_fresh_simulation(small_sim):
    sim = small_sim(10, 2, 1)
    assert sim.round == 0
    assert sim.graph.m == 0 and sim.matching.size() == 0
    assert [m.hosted for m in sim.players] == [[0, 1, 2, 3, 4], [5, 6, 7, 8, 9]]


def test_config_validation():
    with pytest.raises(BadConfig):
        SimConfig(10, 1)
    with pytest.raises(BadConfig):
        SimConfig(10, 2, beta=0)
    with pytest.raises(BadConfig):
        SimConfig(3, 4)


def test_token_bits_default():
    assert default_token_bits(10) == 10  # ceil(3 * 3.32)
    assert SimConfig(1024, 4).token_bits == 30


def test_token_payload_limit():
    with pytest.raises(ValueError):
        Token(TokenKind.CONTROL, (1, 2, 3, 4, 5))


def test_empty_round_advances_counter(small_sim):
    sim = small_sim()
    inboxes = sim.run_round({})
    assert sim.round == 1
    assert all(not box for box in inboxes)


def test_round_delivers_grouped_by_sender(small_sim):
    sim = small_sim(10, 3, 2)
    inboxes = sim.run_round({(1, 2): [tok(1), tok(2)]})
    assert inboxes[2] == {1: [tok(1), tok(2)]}
    assert sim.metrics.max_link_tokens_per_round == 2


def test_round_over_budget(small_sim):
    sim = small_sim(10, 3, 2)
    with pytest.raises(LinkOverflow) as info:
        sim.run_round({(1, 2): [tok(1), tok(2), tok(3)]})
    assert (info.value.sender, info.value.receiver, info.value.count) == (1, 2, 3)


def test_bits_received_are_tokens_times_token_bits(small_sim):
    sim = small_sim(10, 3, 2)
    sim.run_round({(0, 2): [tok(1)], (1, 2): [tok(2), tok(3)]})
    assert sim.metrics.bits_received_per_player == [0, 0, 3 * sim.config.token_bits]


def test_deliver_chunks_long_queues(small_sim):
    sim = small_sim(10, 2, 2)
    inboxes, rounds = sim.deliver({(0, 1): [tok(i) for i in range(5)]})
    assert rounds == 3
    assert [t.payload[0] for t in inboxes[1][0]] == [0, 1, 2, 3, 4]
    assert sim.metrics.max_link_tokens_per_round == 2


def test_deliver_to_self_is_free(small_sim):
    sim = small_sim()
    inboxes, rounds = sim.deliver({(0, 0): [tok(7)]})
    assert rounds == 0 and inboxes[0] == {0: [tok(7)]}


def test_deliver_pads_silent_replies(small_sim):
    sim = small_sim()
    _, rounds = sim.deliver({}, min_rounds=1)
    assert rounds == 1 and sim.round == 1


def test_snapshot_of_fresh_player(small_sim):
    sim = small_sim()
    state = snapshot_player_state(sim, 1)
    assert state == sim.snapshot_player_state(1)
    assert b'"hosted":[5,6,7,8,9]' in state
    assert b'"kept":{}' in state


def test_snapshot_rejected_mid_round(small_sim):
    sim = small_sim()
    sim._in_round = True
    with pytest.raises(StateCorrupt):
        sim.snapshot_player_state(0)


def test_kept_state_is_visible_to_the_memoryless_check(small_sim):
    sim = small_sim()
    sim.players[0].kept["cache"] = [1]
    assert sim.snapshot_player_state(0) != sim.expected_player_state(0)


def test_replay_determinism():
    """Same snapshots, same seed, same update: same resulting states."""
    def build():
        sim = new_simulation(SimConfig(12, 3, 1, seed=9))
        for u, v in [(0, 1), (1, 2), (2, 3), (4, 5), (5, 6), (1, 6), (0, 7)]:
            sim.begin_update("insert")
            fullydyn.apply_update(sim, "insert", u, v)
            sim.end_update()
        return sim

    a, b = build(), build()
    assert [a.snapshot_player_state(p) for p in range(3)] == [b.snapshot_player_state(p) for p in range(3)]
    u, v = a.matching.edges()[0]
    for sim in (a, b):
        sim.begin_update("delete")
        fullydyn.apply_update(sim, "delete", u, v)
        sim.end_update()
    assert [a.snapshot_player_state(p) for p in range(3)] == [b.snapshot_player_state(p) for p in range(3)]
    assert a.metrics == b.metrics


def test_rng_streams_differ_by_player_and_update(small_sim):
    sim = small_sim()
    x = sim.rng(0).integers(1 << 30)
    assert x == sim.rng(0).integers(1 << 30)
    assert x != sim.rng(1).integers(1 << 30)
    sim.update_index += 1
    assert x != sim.rng(0).integers(1 << 30)


def test_unbalanced_partition_rejected():
    from dymatch.errors import UnbalancedPartition

    with pytest.raises(UnbalancedPartition):
        new_simulation(SimConfig(100, 10), Partition(owner=[0] * 100, k=10))
