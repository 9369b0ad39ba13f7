"""Ground-truth overlay graph: roles, directed peer edges, churn, bans.

Edges are directed (opener -> target) and at most one edge exists per
unordered pair. Monitors are connected to every live non-monitor node; those
links are implicit here and never appear in peer sets or exports of peer
edges unless explicitly requested.
"""
from __future__ import annotations

import random
from dataclasses import dataclass, field
from enum import Enum


class Role(str, Enum):
    HONEST = "honest"
    MALICIOUS = "malicious"
    MONITOR = "monitor"


class TopologyError(Exception):
    pass


class UnknownNode(TopologyError):
    pass


class DuplicateEdge(TopologyError):
    pass


class MutualEdge(TopologyError):
    pass


class BannedPeer(TopologyError):
    pass


class InsufficientPeers(TopologyError):
    pass


@dataclass(frozen=True)
class NodeAdded:
    node: int
    role: Role
    targets: tuple[int, ...]


@dataclass(frozen=True)
class NodeRemoved:
    node: int
    role: Role
    severed_out: tuple[int, ...]  # targets that lost this node as inbound peer
    # (orphaned inbound peer, its replacement target or None)
    rewired: tuple[tuple[int, int | None], ...]


@dataclass
class ChurnConfig:
    variability_ms: int = 10_000
    target_population: int = 50
    malicious_fraction: float = 0.0


class Topology:
    """Mutable ground truth. NodeIds are never reused."""

    def __init__(self, target_outbound: int = 3) -> None:
        self.target_outbound = target_outbound
        self.roles: dict[int, Role] = {}
        self.out: dict[int, set[int]] = {}
        self.inb: dict[int, set[int]] = {}
        self.banned: dict[int, set[int]] = {}
        self.monitors: list[int] = []
        self._next_id = 0

    # -- registry ----------------------------------------------------------

    def new_id(self) -> int:
        nid = self._next_id
        self._next_id += 1
        return nid

    def peers_alive(self) -> list[int]:
        return sorted(n for n, r in self.roles.items() if r is not Role.MONITOR)

    def malicious_alive(self) -> list[int]:
        return sorted(n for n, r in self.roles.items() if r is Role.MALICIOUS)

    def population(self) -> int:
        return len(self.roles) - len(self.monitors)

    def peer_edges(self) -> set[tuple[int, int]]:
        return {(a, b) for a, row in self.out.items() for b in row}

    # -- construction ------------------------------------------------------

    def add_monitor(self) -> int:
        nid = self.new_id()
        self.roles[nid] = Role.MONITOR
        self.monitors.append(nid)
        return nid

    def add_node(
        self,
        role: Role,
        rng: random.Random,
        *,
        allow_short: bool = False,
    ) -> NodeAdded:
        """Join a node and open target_outbound uniformly random edges.

        allow_short permits fewer targets during bootstrap, when the network
        is younger than target_outbound nodes.
        """
        if role is Role.MONITOR:
            raise ValueError("monitors join via add_monitor")
        candidates = self.peers_alive()
        if len(candidates) < self.target_outbound and not allow_short:
            raise InsufficientPeers(
                f"need {self.target_outbound} eligible targets, have {len(candidates)}"
            )
        k = min(self.target_outbound, len(candidates))
        targets = tuple(sorted(rng.sample(candidates, k))) if k else ()
        nid = self.new_id()
        self.roles[nid] = role
        self.out[nid] = set()
        self.inb[nid] = set()
        self.banned[nid] = set()
        for t in targets:
            self.open_connection(nid, t)
        return NodeAdded(nid, role, targets)

    def open_connection(self, a: int, b: int) -> None:
        if a not in self.out or b not in self.out:
            raise UnknownNode(f"{a}->{b}: unknown endpoint")
        if a == b:
            raise TopologyError("self edge")
        if b in self.out[a]:
            raise DuplicateEdge(f"{a}->{b}")
        if a in self.out[b]:
            raise MutualEdge(f"{a}->{b} vs existing {b}->{a}")
        if b in self.banned[a]:
            raise BannedPeer(f"{a}->{b}")
        self.out[a].add(b)
        self.inb[b].add(a)

    def close_connection(self, a: int, b: int) -> None:
        if b not in self.out.get(a, ()):
            raise UnknownNode(f"no edge {a}->{b}")
        self.out[a].discard(b)
        self.inb[b].discard(a)

    def ban(self, a: int, b: int) -> None:
        """Permanent, symmetric: neither endpoint accepts the other again."""
        self.banned[a].add(b)
        self.banned[b].add(a)

    def eligible_targets(self, source: int) -> list[int]:
        return [
            t
            for t in self.peers_alive()
            if t != source
            and t not in self.out[source]
            and t not in self.inb[source]
            and t not in self.banned[source]
        ]

    def remove_node(self, node: int, rng: random.Random) -> NodeRemoved:
        """Depart a node; every orphaned inbound peer opens one replacement
        edge so it keeps target_outbound outbound connections."""
        if node not in self.roles or self.roles[node] is Role.MONITOR:
            raise UnknownNode(str(node))
        role = self.roles[node]
        orphans = sorted(self.inb[node])
        severed = tuple(sorted(self.out[node]))
        for t in severed:
            self.inb[t].discard(node)
        for p in orphans:
            self.out[p].discard(node)
        del self.roles[node], self.out[node], self.inb[node], self.banned[node]
        rewired: list[tuple[int, int | None]] = []
        for p in orphans:
            choices = self.eligible_targets(p)
            if choices:
                t = rng.choice(choices)
                self.open_connection(p, t)
                rewired.append((p, t))
            else:
                rewired.append((p, None))
        return NodeRemoved(node, role, severed, tuple(rewired))

    # -- churn -------------------------------------------------------------

    def steer_add_role(self, cfg: ChurnConfig) -> Role:
        mal = len(self.malicious_alive())
        want = cfg.malicious_fraction * (self.population() + 1)
        return Role.MALICIOUS if mal < want - 0.5 else Role.HONEST

    def steer_remove_node(self, cfg: ChurnConfig, rng: random.Random) -> int:
        mal = set(self.malicious_alive())
        hon = [n for n in self.peers_alive() if n not in mal]
        want = cfg.malicious_fraction * (self.population() - 1)
        take_malicious = len(mal) >= want + 0.5
        pool = sorted(mal) if (take_malicious and mal) else (hon or sorted(mal))
        return rng.choice(pool)

    def churn_tick(self, cfg: ChurnConfig, rng: random.Random) -> NodeAdded | NodeRemoved:
        """One network event, biased to hold population at the target:
        below -> add, above -> remove, at target -> fair coin."""
        pop = self.population()
        if pop < cfg.target_population:
            add = True
        elif pop > cfg.target_population:
            add = False
        else:
            add = rng.random() < 0.5
        if add:
            return self.add_node(self.steer_add_role(cfg), rng)
        return self.remove_node(self.steer_remove_node(cfg, rng), rng)

    # -- validation & export -------------------------------------------------

    def audit(self) -> list[str]:
        """Invariant check; returns human-readable violations (empty == ok)."""
        bad: list[str] = []
        for a, row in self.out.items():
            for b in row:
                if b not in self.out:
                    bad.append(f"dangling edge {a}->{b}")
                    continue
                if a == b:
                    bad.append(f"self edge {a}")
                if a in self.out[b]:
                    bad.append(f"mutual pair {a}<->{b}")
                if self.roles[b] is Role.MONITOR:
                    bad.append(f"edge targets monitor {a}->{b}")
                if a not in self.inb[b]:
                    bad.append(f"missing inbound mirror {a}->{b}")
        for b, row in self.inb.items():
            for a in row:
                if b not in self.out.get(a, ()):
                    bad.append(f"stale inbound mirror {a}->{b}")
        for a, row in self.banned.items():
            for b in row:
                if b in self.out[a] or b in self.inb[a]:
                    bad.append(f"banned pair still connected {a}~{b}")
        return bad

    def edge_list_lines(self, *, include_monitors: bool = False) -> list[str]:
        lines = [f"{a} {b}" for a, b in sorted(self.peer_edges())]
        if include_monitors:
            lines = [
                f"{m} {n}" for m in self.monitors for n in self.peers_alive()
            ] + lines
        return lines

    def to_dot(self) -> str:
        out = ["digraph overlay {"]
        for n in sorted(self.roles):
            role = self.roles[n]
            shape = {"honest": "ellipse", "malicious": "box", "monitor": "diamond"}[role.value]
            out.append(f'  n{n} [label="{n}" shape={shape}];')
        for a, b in sorted(self.peer_edges()):
            out.append(f"  n{a} -> n{b};")
        out.append("}")
        return "\n".join(out) + "\n"
