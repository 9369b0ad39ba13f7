"""Malicious node behavior.

The default strategy is full collusion: a malicious node never answers
probes about its real links with honest peers (hiding them), spreads its
own round nonce to adjacent colluders so they can vouch for links that do
not exist, and leaks nonces received from honest targets through the
colluder clique so that further fabricated links pile up. Colluders know
each other out of band, so nonce sharing is modeled as instantaneous; only
the resulting answers to the monitor travel as real messages.

Each of the six isolated misbehaviors is also available on its own for
targeted security tests: wrong-direction forwarding, forwarding to a
non-peer, nonce replay, field tampering, probe dropping, and selective
relay dropping.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field

from topomon.protocol import Marker, NodeState


@dataclass(frozen=True)
class RelaySend:
    sender: int  # node the message is attributed to
    to: int
    marker: Marker


@dataclass(frozen=True)
class SingleBehavior:
    """One misbehavior in isolation; everything else stays honest.

    1: forward own-round markers to inbound peers instead of outbound
    2: leak own-round marker to a chosen non-peer victim (optionally via
       another colluder)
    3: withhold relays, replaying the previous round's nonce instead
    4: tamper one marker field before forwarding
    5: drop own-round markers outright
    6: drop relays owed to the monitors in drop_for
    """

    behavior: int
    victim: int | None = None
    relay_via: int | None = None
    drop_for: frozenset[int] = frozenset()


class AdversaryPolicy:
    """Shared collusion state: the clique roster and fabrication knobs."""

    def __init__(
        self,
        monitors: set[int],
        rng: random.Random,
        *,
        full_hiding: bool = True,
        share_hops: int = 2,
        second_hop_p: float = 1.0,
    ) -> None:
        self.monitors = frozenset(monitors)
        self.rng = rng
        self.full_hiding = full_hiding
        self.share_hops = share_hops
        self.second_hop_p = second_hop_p
        self.states: dict[int, NodeState] = {}  # colluder id -> its live state

    @property
    def colluders(self) -> set[int]:
        return set(self.states)

    def register(self, state: NodeState) -> None:
        self.states[state.id] = state

    def unregister(self, node_id: int) -> None:
        self.states.pop(node_id, None)

    def connected_colluders(self, node_id: int) -> list[int]:
        st = self.states.get(node_id)
        if st is None:
            return []
        return sorted((st.outbound | st.inbound) & self.colluders - {node_id})


class Adversary:
    """Wraps one malicious node's state with its behavior."""

    def __init__(
        self,
        state: NodeState,
        policy: AdversaryPolicy,
        single: SingleBehavior | None = None,
    ) -> None:
        self.state = state
        self.policy = policy
        self.single = single
        self.stored: dict[int, Marker] = {}  # behavior 3: last nonce per target
        policy.register(state)

    # -- dispatch -------------------------------------------------------------

    def handle_marker(self, sender: int, m: Marker) -> list[RelaySend]:
        if self.single is not None:
            return self._single(sender, m)
        return self._worst_case(sender, m)

    def handle_verified(self, sender: int, v) -> list:
        return []  # no reputation enforcement on the adversary's side

    # -- helpers ----------------------------------------------------------------

    def _own_probe(self, sender: int, m: Marker) -> bool:
        return (
            sender == m.monitor
            and m.target == self.state.id
            and m.monitor in self.state.monitors
        )

    def _relay_duty(self, sender: int, m: Marker) -> bool:
        return (
            sender == m.target
            and sender in self.state.inbound
            and m.monitor in self.state.monitors
        )

    def _honest(self, sender: int, m: Marker) -> list[RelaySend]:
        return [
            RelaySend(self.state.id, s.to, s.marker)
            for s in self.state.handle_marker(sender, m)
        ]

    def _fakes_for(self, ring: list[int], m: Marker) -> list[RelaySend]:
        acts = []
        for c in ring:
            cst = self.policy.states[c]
            if m.target not in cst.inbound and c != m.target:
                acts.append(RelaySend(c, m.monitor, m))
        return acts

    # -- full collusion -----------------------------------------------------------

    def _worst_case(self, sender: int, m: Marker) -> list[RelaySend]:
        pol, st = self.policy, self.state
        if self._own_probe(sender, m):
            acts = []
            if not pol.full_hiding:
                acts = [
                    RelaySend(st.id, p, m)
                    for p in sorted(st.outbound)
                    if p not in pol.colluders
                ]
            # adjacent colluders answer for links that do not exist
            return acts + self._fakes_for(pol.connected_colluders(st.id), m)
        if sender == m.target and sender in st.inbound:
            if sender in pol.colluders:
                return []  # clique-internal link stays hidden
            # hide the honest link, leak the nonce through the clique
            ring = set(pol.connected_colluders(st.id))
            if pol.share_hops >= 2:
                second: set[int] = set()
                for c in sorted(ring):
                    second.update(pol.connected_colluders(c))
                second -= ring | {st.id}
                for c in sorted(second):
                    if pol.rng.random() < pol.second_hop_p:
                        ring.add(c)
            return self._fakes_for(sorted(ring), m)
        return []

    # -- isolated misbehaviors -------------------------------------------------------

    def _single(self, sender: int, m: Marker) -> list[RelaySend]:
        st, b = self.state, self.single
        assert b is not None
        if b.behavior == 1:
            if self._own_probe(sender, m):
                return [RelaySend(st.id, p, m) for p in sorted(st.inbound)]
            return self._honest(sender, m)
        if b.behavior == 2:
            if self._own_probe(sender, m):
                acts = [RelaySend(st.id, p, m) for p in sorted(st.outbound)]
                if b.victim is not None:
                    hop = b.relay_via if b.relay_via is not None else st.id
                    acts.append(RelaySend(hop, b.victim, m))
                return acts
            return self._honest(sender, m)
        if b.behavior == 3:
            if self._relay_duty(sender, m):
                prev = self.stored.get(m.target)
                self.stored[m.target] = m
                if prev is not None:
                    return [RelaySend(st.id, prev.monitor, prev)]
                return []
            return self._honest(sender, m)
        if b.behavior == 4:
            if self._own_probe(sender, m):
                bad = self._tampered(m)
                return [RelaySend(st.id, p, bad) for p in sorted(st.outbound)]
            return self._honest(sender, m)
        if b.behavior == 5:
            if self._own_probe(sender, m):
                return []
            return self._honest(sender, m)
        if b.behavior == 6:
            if self._relay_duty(sender, m) and m.monitor in b.drop_for:
                return []
            return self._honest(sender, m)
        raise ValueError(f"unknown behavior {b.behavior}")

    def _tampered(self, m: Marker) -> Marker:
        which = self.policy.rng.choice(("target", "monitor", "value"))
        if which == "target":
            return Marker(m.target + 1_000_000_000, m.monitor, m.value)
        if which == "monitor":
            return Marker(m.target, m.monitor + 1_000_000_000, m.value)
        return Marker(m.target, m.monitor, m.value ^ 0xDEADBEEF)
