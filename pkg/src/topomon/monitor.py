"""Monitor-side scanning and snapshot aggregation.

A monitor probes one target at a time per node: it sends a nonce-carrying
marker to the target, collects the relays that bounce back within the
timeout, and rewrites the target's outbound row in its local view from the
collected set. The per-node scan frequency breathes with observed change:
idle rows slow down, churning rows speed up.

Two timeliness details matter for how fresh the view stays under churn:
relayed confirmations are inserted into the view the moment they arrive
(removals still wait for round close), and a departure triggers immediate
re-scans of every node whose row pointed at the departed peer.
"""
from __future__ import annotations

import random
from dataclasses import dataclass

from topomon.engine import sample_poisson
from topomon.protocol import Marker, VerifiedMsg


class RoundAlreadyOpen(Exception):
    pass


class NoOpenRound(Exception):
    pass


class EmptyInput(Exception):
    pass


@dataclass
class Round:
    target: int
    value: int
    started_at: int
    prior_row: frozenset[int]  # outbound row frozen at round start
    collected: set[int]


class Monitor:
    def __init__(
        self,
        mon_id: int,
        *,
        f_init: int = 5,
        f_min: int = 1,
        f_max: int = 10,
        timeout_ms: int = 1000,
        mode: str = "poisson",
    ) -> None:
        if not (f_min <= f_init <= f_max):
            raise ValueError("need f_min <= f_init <= f_max")
        if mode not in ("poisson", "fixed"):
            raise ValueError(f"unknown scheduling mode {mode!r}")
        self.id = mon_id
        self.f_init = f_init
        self.f_min = f_min
        self.f_max = f_max
        self.timeout_ms = timeout_ms
        self.mode = mode
        self.nodes: set[int] = set()
        self.edges: set[tuple[int, int]] = set()
        self.freq: dict[int, int] = {}
        self.rounds: dict[int, Round] = {}
        self.rescan_on_close: set[int] = set()

    # -- membership ----------------------------------------------------------

    def node_discovered(self, n: int) -> None:
        self.nodes.add(n)
        self.freq[n] = self.f_init

    def node_departed(self, n: int) -> list[int]:
        """Forget the node. Returns nodes whose row held an edge to it;
        callers should re-scan those right away, since the departed peer's
        replacement edges are already live in the ground truth."""
        self.nodes.discard(n)
        self.freq.pop(n, None)
        self.rounds.pop(n, None)
        self.rescan_on_close.discard(n)
        repair = sorted({a for a, b in self.edges if b == n})
        self.edges = {(a, b) for a, b in self.edges if a != n and b != n}
        return repair

    def outbound_row(self, target: int) -> frozenset[int]:
        return frozenset(b for a, b in self.edges if a == target)

    # -- verification rounds ---------------------------------------------------

    def has_open_round(self, target: int) -> bool:
        return target in self.rounds

    def start_round(self, target: int, rng: random.Random, now: int) -> Marker:
        if target in self.rounds:
            raise RoundAlreadyOpen(f"monitor {self.id} target {target}")
        value = rng.getrandbits(64)
        self.rounds[target] = Round(
            target, value, now, self.outbound_row(target), set()
        )
        return Marker(target=target, monitor=self.id, value=value)

    def receive_marker(self, sender: int, m: Marker) -> bool:
        """Accept a relayed marker into the open round it answers.

        Anything that does not match an open round exactly is dropped:
        stale nonce values (replays), wrong monitor, closed rounds, the
        target answering for itself, or senders no longer in the view.
        """
        rnd = self.rounds.get(m.target)
        if rnd is None or m.monitor != self.id or m.value != rnd.value:
            return False
        if sender == m.target or sender == self.id or sender not in self.nodes:
            return False
        rnd.collected.add(sender)
        self.edges.add((m.target, sender))  # confirmed link, visible at once
        return True

    def close_round(self, target: int) -> frozenset[int]:
        rnd = self.rounds.pop(target, None)
        if rnd is None:
            raise NoOpenRound(f"monitor {self.id} target {target}")
        return frozenset(rnd.collected)

    # -- view maintenance --------------------------------------------------------

    def update_topology(
        self, target: int, collected: frozenset[int], prior: frozenset[int] | None = None
    ) -> int:
        """Rewrite the target's outbound row from the collected set and
        return how many edges changed against the pre-round row."""
        if prior is None:
            prior = self.outbound_row(target)
        row = {p for p in collected if p in self.nodes}
        self.edges = {(a, b) for a, b in self.edges if a != target}
        self.edges |= {(target, p) for p in row}
        return len(prior.symmetric_difference(collected))

    def adjust_frequency(self, target: int, c: int) -> None:
        if target not in self.freq:
            return
        f = self.freq[target]
        if c == 0 and f < self.f_max:
            self.freq[target] = f + 1
        elif c > 1:
            self.freq[target] = max(self.f_min, f - c)
        # c == 1 leaves the frequency unchanged

    def build_verified_message(self, target: int) -> VerifiedMsg:
        peers = {b for a, b in self.edges if a == target}
        peers |= {a for a, b in self.edges if b == target}
        return VerifiedMsg(frozenset(peers))

    def schedule_next_round(self, target: int, rng: random.Random) -> int:
        """Delay in ms from round start to the next round's start."""
        f = self.freq.get(target, self.f_init)
        if self.mode == "fixed":
            return 1000 * f
        k = sample_poisson(rng, float(f))
        return 1000 * min(self.f_max, max(self.f_min, k))


# -- aggregation across monitors ---------------------------------------------


@dataclass(frozen=True)
class GlobalSnapshot:
    nodes: frozenset[int]
    edges: frozenset[tuple[int, int]]
    monitor_count: int


def verification_set(
    views: list[Monitor], edge: tuple[int, int]
) -> set[int]:
    return {i for i, v in enumerate(views) if edge in v.edges}


def compute_global_snapshot(views: list[Monitor]) -> GlobalSnapshot:
    """Keep the edges a strict majority of the views agrees on."""
    if not views:
        raise EmptyInput("no local views")
    gamma = len(views)
    nodes: set[int] = set()
    tally: dict[tuple[int, int], int] = {}
    for v in views:
        nodes |= v.nodes
        for e in v.edges:
            tally[e] = tally.get(e, 0) + 1
    edges = frozenset(e for e, k in tally.items() if 2 * k > gamma)
    return GlobalSnapshot(frozenset(nodes), edges, gamma)


def max_error_window(freqs: list[int]) -> int:
    """Longest time a single edge error can survive in the aggregate view:
    the smallest scan period shared by a strict majority of monitors."""
    if not freqs:
        raise EmptyInput("no frequencies")
    return sorted(freqs)[len(freqs) // 2]
