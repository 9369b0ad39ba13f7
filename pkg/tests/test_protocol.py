"""Marker relay rules and the reputation threshold."""
from __future__ import annotations

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from topomon.protocol import Disconnect, Marker, NodeState, Send, UnknownPeer, VerifiedMsg

MONITORS = {100, 101, 102, 103}


def node(nid=1, monitors=MONITORS, out=(), inb=(), safe_rounds=3) -> NodeState:
    st_ = NodeState(nid, set(monitors), safe_rounds)
    for p in out:
        st_.connect_out(p)
    for p in inb:
        st_.connect_in(p)
    return st_


# -- handle_marker -----------------------------------------------------------


def test_target_fans_marker_out_to_all_outbound():
    n = node(nid=1, out=(5, 3, 4))
    m = Marker(target=1, monitor=100, value=7)
    acts = n.handle_marker(100, m)
    assert acts == [Send(3, m), Send(4, m), Send(5, m)]


def test_peer_bounces_marker_from_inbound_target_to_monitor():
    p = node(nid=2, inb=(1,))
    m = Marker(target=1, monitor=100, value=7)
    assert p.handle_marker(1, m) == [Send(100, m)]


def test_marker_from_outbound_peer_is_dropped():
    p = node(nid=2, out=(1,))
    m = Marker(target=1, monitor=100, value=7)
    assert p.handle_marker(1, m) == []


def test_marker_with_mismatched_target_is_dropped():
    p = node(nid=2, inb=(9,))
    m = Marker(target=1, monitor=100, value=7)
    assert p.handle_marker(9, m) == []


def test_marker_from_unknown_monitor_is_dropped():
    n = node(nid=1, out=(5,), inb=(6,))
    m = Marker(target=1, monitor=999, value=7)
    assert n.handle_marker(999, m) == []
    relay = Marker(target=6, monitor=999, value=8)
    assert n.handle_marker(6, relay) == []


@given(
    sender=st.integers(0, 20),
    target=st.integers(0, 20),
    monitor=st.sampled_from(sorted(MONITORS) + [999]),
)
@settings(max_examples=300, deadline=None)
def test_relay_never_invents_monitors(sender, target, monitor):
    n = node(nid=1, out=(2, 3), inb=(4, 5))
    for act in n.handle_marker(sender, Marker(target, monitor, 42)):
        assert act.marker.monitor in (monitor,)
        if act.to in MONITORS or act.to == 999:
            # a bounce toward a monitor only happens for known monitors
            assert monitor in MONITORS


# -- reputation --------------------------------------------------------------


def age_past_safe_period(n: NodeState, peer: int) -> None:
    for m in n.monitors:
        n.rounds_seen[(peer, m)] = n.safe_rounds


def test_initial_reputation_is_full():
    n = node(out=(7,))
    assert n.reputation(7) == 4


@pytest.mark.parametrize(
    "gamma,phi,expect_drop",
    [
        (4, 2, True),
        (4, 3, False),
        (4, 4, False),
        (4, 0, True),
        (3, 2, False),
        (3, 1, True),
        (1, 0, True),
        (1, 1, False),
        (7, 3, True),
        (7, 4, False),
    ],
)
def test_majority_threshold_table(gamma, phi, expect_drop):
    monitors = set(range(200, 200 + gamma))
    n = node(monitors=monitors, out=(7,))
    age_past_safe_period(n, 7)
    for i, m in enumerate(sorted(monitors)):
        n.status[(7, m)] = 1 if i < phi else 0
    assert n.check_reputation(7) is expect_drop


def test_safe_period_blocks_disconnect_until_every_monitor_reports():
    n = node(out=(7,))
    for m in n.monitors:
        n.status[(7, m)] = 0
    assert n.check_reputation(7) is False
    for m in list(n.monitors)[:3]:
        n.rounds_seen[(7, m)] = 3
    assert n.check_reputation(7) is False  # one monitor still short
    age_past_safe_period(n, 7)
    assert n.check_reputation(7) is True


def test_check_reputation_rejects_strangers():
    n = node(out=(7,))
    with pytest.raises(UnknownPeer):
        n.check_reputation(8)


def test_handle_verified_updates_statuses_and_counts():
    n = node(nid=1, out=(7, 8), inb=(9,))
    n.handle_verified(100, VerifiedMsg(frozenset({7, 9})))
    assert n.status[(7, 100)] == 1
    assert n.status[(8, 100)] == 0
    assert n.status[(9, 100)] == 1
    assert n.rounds_seen[(8, 100)] == 1
    assert n.rounds_seen[(8, 101)] == 0


def test_handle_verified_disconnects_after_majority_loss():
    n = node(nid=1, out=(7,))
    absent = VerifiedMsg(frozenset())
    # three monitors stop vouching; one still does. The moment the last
    # monitor's third report lands, the safe period ends and phi=1 bites.
    for i in range(3):
        for m in (100, 101, 102):
            assert n.handle_verified(m, absent) == []
        expected = [Disconnect(7)] if i == 2 else []
        assert n.handle_verified(103, VerifiedMsg(frozenset({7}))) == expected


def test_verified_from_unknown_sender_is_ignored():
    n = node(nid=1, out=(7,))
    assert n.handle_verified(999, VerifiedMsg(frozenset())) == []
    assert n.rounds_seen[(7, 100)] == 0


def test_fresh_connection_resets_safe_period():
    n = node(nid=1, out=(7,))
    age_past_safe_period(n, 7)
    n.drop_peer(7)
    n.connect_out(7)
    assert n.rounds_seen[(7, 100)] == 0
    assert n.reputation(7) == 4


def test_drop_peer_with_ban_purges_and_bans():
    n = node(nid=1, out=(7,), inb=(8,))
    n.drop_peer(7, ban=True)
    assert 7 in n.banned
    assert 7 not in n.peers()
    assert all(p != 7 for p, _ in n.status)


@given(
    gamma=st.integers(1, 7),
    bits=st.lists(st.integers(0, 1), min_size=7, max_size=7),
)
@settings(max_examples=300, deadline=None)
def test_reputation_bounds_and_rule(gamma, bits):
    monitors = set(range(300, 300 + gamma))
    n = node(monitors=monitors, out=(7,))
    age_past_safe_period(n, 7)
    for m, b in zip(sorted(monitors), bits):
        n.status[(7, m)] = b
    phi = n.reputation(7)
    assert 0 <= phi <= gamma
    assert n.check_reputation(7) is (2 * phi <= gamma)
