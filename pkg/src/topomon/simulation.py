"""End-to-end simulation: one engine driving ground truth, monitors,
honest nodes, and colluders.

Event flow per scan: a round-start event sends the marker to the target;
the matching timeout event closes the round, rewrites the monitor's view,
adapts the scan frequency, sends the confirmation list to the target, and
schedules the next round. Round spacing is measured start to start, with
the timeout as a floor so rounds for one target never overlap.

Monitors learn joins and departures from the registry the moment they
happen: a join triggers an immediate first scan, a departure triggers
repair scans of every node whose row pointed at the departed peer (their
replacement edges are already live).

Reputation disconnects close the ground-truth edge in the same event and
ban both endpoints for the rest of the run. Honest nodes refill the lost
outbound slot right away; malicious nodes do not (flag-controlled), which
slowly strands them on clique-internal links only.
"""
from __future__ import annotations

from dataclasses import dataclass

from topomon.adversary import Adversary, AdversaryPolicy, SingleBehavior
from topomon.engine import Engine, sample_exponential, substream
from topomon.metrics import OverheadLedger, classify_edges
from topomon.monitor import Monitor, compute_global_snapshot
from topomon.protocol import NodeState
from topomon.topology import ChurnConfig, NodeAdded, NodeRemoved, Role, Topology


class ConfigInvalid(Exception):
    def __init__(self, problems: list[str]) -> None:
        super().__init__("; ".join(problems))
        self.problems = problems


@dataclass(frozen=True)
class ExperimentConfig:
    nodes: int = 50
    monitors: int = 4
    outbound_per_node: int = 3
    variability_s: float = 10.0  # mean churn inter-arrival; 0 disables churn
    malicious_pct: float = 0.0
    duration_ms: int = 600_000
    probe_every_ms: int = 30_000
    round_timeout_ms: int = 1_000
    f_init: int = 5
    f_min: int = 1
    f_max: int = 10
    safe_rounds: int = 3
    scheduling_mode: str = "poisson"  # or "fixed"
    seed: int = 0
    latency_ms_range: tuple[int, int] = (5, 50)
    # adversary shape
    full_hiding: bool = True
    share_hops: int = 2
    second_hop_p: float = 1.0
    malicious_refill: bool = False
    # analysis aids
    adaptive: bool = True  # False pins every scan frequency at f_init
    monitor_f_init: tuple[int, ...] | None = None  # per-monitor override

    def validate(self) -> list[str]:
        bad = []
        if self.nodes < 1:
            bad.append("nodes must be >= 1")
        if self.monitors < 1:
            bad.append("monitors must be >= 1")
        if self.outbound_per_node < 0:
            bad.append("outbound_per_node must be >= 0")
        if not 0.0 <= self.malicious_pct <= 1.0:
            bad.append("malicious_pct must be in [0, 1]")
        if self.variability_s < 0:
            bad.append("variability_s must be >= 0")
        if not self.f_min <= self.f_init <= self.f_max:
            bad.append("need f_min <= f_init <= f_max")
        if self.f_min < 1:
            bad.append("f_min must be >= 1")
        if self.probe_every_ms > self.duration_ms:
            bad.append("probe_every_ms must not exceed duration_ms")
        if self.round_timeout_ms < 1:
            bad.append("round_timeout_ms must be >= 1")
        if self.scheduling_mode not in ("poisson", "fixed"):
            bad.append(f"unknown scheduling_mode {self.scheduling_mode!r}")
        lo, hi = self.latency_ms_range
        if not 0 <= lo <= hi:
            bad.append("latency_ms_range must satisfy 0 <= lo <= hi")
        if self.monitor_f_init is not None and len(self.monitor_f_init) != self.monitors:
            bad.append("monitor_f_init must list one frequency per monitor")
        if not 1 <= self.share_hops <= 2:
            bad.append("share_hops must be 1 or 2")
        if not 0.0 <= self.second_hop_p <= 1.0:
            bad.append("second_hop_p must be in [0, 1]")
        return bad


@dataclass(frozen=True)
class ProbeSample:
    time_ms: int
    tp: int
    fp: int
    fn: int


class World:
    def __init__(self, cfg: ExperimentConfig, trace_sink=None, snapshot_sink=None) -> None:
        problems = cfg.validate()
        if problems:
            raise ConfigInvalid(problems)
        self.cfg = cfg
        self.engine = Engine(cfg.seed, trace=trace_sink)
        self.snapshot_sink = snapshot_sink
        self.topo = Topology(cfg.outbound_per_node)
        self.churn_cfg = ChurnConfig(
            variability_ms=max(1, int(cfg.variability_s * 1000)),
            target_population=cfg.nodes,
            malicious_fraction=cfg.malicious_pct,
        )
        self.nodes: dict[int, NodeState] = {}
        self.advs: dict[int, Adversary] = {}
        self.monitors: dict[int, Monitor] = {}
        self.policy = AdversaryPolicy(
            set(),  # monitor ids filled in below
            substream(cfg.seed, "adversary"),
            full_hiding=cfg.full_hiding,
            share_hops=cfg.share_hops,
            second_hop_p=cfg.second_hop_p,
        )
        self.ledger = OverheadLedger()
        self.pending: dict[tuple[int, int], object] = {}
        self.probes: list[ProbeSample] = []

        eng = self.engine
        eng.on("round_start", self._on_round_start)
        eng.on("round_timeout", self._on_round_timeout)
        eng.on("deliver", self._on_deliver)
        eng.on("churn", self._on_churn)
        eng.on("probe", self._on_probe)
        self._bootstrap()

    # -- construction -----------------------------------------------------------

    def _bootstrap(self) -> None:
        cfg = self.cfg
        for k in range(cfg.monitors):
            mid = self.topo.add_monitor()
            f0 = cfg.monitor_f_init[k] if cfg.monitor_f_init else cfg.f_init
            self.monitors[mid] = Monitor(
                mid,
                f_init=f0,
                f_min=cfg.f_min,
                f_max=cfg.f_max,
                timeout_ms=cfg.round_timeout_ms,
                mode=cfg.scheduling_mode,
            )
        self.policy.monitors = frozenset(self.monitors)
        for _ in range(cfg.nodes):
            role = self.topo.steer_add_role(self.churn_cfg)
            ev = self.topo.add_node(role, self.engine.rng_topology, allow_short=True)
            self._node_joined(ev)
        if cfg.variability_s > 0:
            self.engine.schedule(
                sample_exponential(self.engine.rng_churn, self.churn_cfg.variability_ms),
                "churn",
            )
        if cfg.probe_every_ms <= cfg.duration_ms:
            self.engine.schedule(cfg.probe_every_ms, "probe")

    def run(self) -> list[ProbeSample]:
        self.engine.run_until(self.cfg.duration_ms)
        return self.probes

    # -- membership plumbing ------------------------------------------------------

    def _node_joined(self, ev: NodeAdded) -> None:
        state = NodeState(ev.node, set(self.monitors), self.cfg.safe_rounds)
        for t in ev.targets:
            state.connect_out(t)
            self.nodes[t].connect_in(ev.node)
        self.nodes[ev.node] = state
        if ev.role is Role.MALICIOUS:
            self.advs[ev.node] = Adversary(state, self.policy)
        self.engine.trace("join", ev.node, "-", ev.role.value)
        for mid in sorted(self.monitors):
            self.monitors[mid].node_discovered(ev.node)
            self._schedule_round(mid, ev.node, 0)

    def _node_left(self, ev: NodeRemoved) -> None:
        nid = ev.node
        for t in ev.severed_out:
            self.nodes[t].drop_peer(nid)
        for p, new_target in ev.rewired:
            self.nodes[p].drop_peer(nid)
            if new_target is not None:
                self.nodes[p].connect_out(new_target)
                self.nodes[new_target].connect_in(p)
        self.nodes.pop(nid, None)
        if nid in self.advs:
            self.policy.unregister(nid)
            del self.advs[nid]
        self.engine.trace("leave", nid, "-", ev.role.value)
        for mid in sorted(self.monitors):
            repair = self.monitors[mid].node_departed(nid)
            entry = self.pending.pop((mid, nid), None)
            if entry is not None:
                entry.cancelled = True
            for p in repair:
                self._request_scan(mid, p)

    def convert_to_malicious(self, nid: int, single: SingleBehavior | None = None) -> Adversary:
        """Test aid: flip an existing honest node to a malicious one."""
        if self.topo.roles[nid] is not Role.HONEST:
            raise ValueError(f"node {nid} is not honest")
        self.topo.roles[nid] = Role.MALICIOUS
        adv = Adversary(self.nodes[nid], self.policy, single)
        self.advs[nid] = adv
        return adv

    def open_edge(self, a: int, b: int) -> None:
        """Ground-truth mutation without any notification; scans must find it."""
        self.topo.open_connection(a, b)
        self.nodes[a].connect_out(b)
        self.nodes[b].connect_in(a)
        self.engine.trace("edge_open", a, b)

    def close_edge(self, a: int, b: int) -> None:
        self.topo.close_connection(a, b)
        self.nodes[a].drop_peer(b)
        self.nodes[b].drop_peer(a)
        self.engine.trace("edge_close", a, b)

    # -- scan scheduling ---------------------------------------------------------

    def _schedule_round(self, mid: int, target: int, delay: int) -> None:
        self.pending[(mid, target)] = self.engine.schedule(
            delay, "round_start", mid, target
        )

    def _request_scan(self, mid: int, target: int) -> None:
        mon = self.monitors[mid]
        if target not in mon.nodes:
            return
        if mon.has_open_round(target):
            mon.rescan_on_close.add(target)
            return
        entry = self.pending.pop((mid, target), None)
        if entry is not None:
            entry.cancelled = True
        self._schedule_round(mid, target, 0)

    def _on_round_start(self, mid: int, target: int) -> None:
        mon = self.monitors[mid]
        if target not in mon.nodes or mon.has_open_round(target):
            return
        marker = mon.start_round(target, self.engine.rng_marker, self.engine.now)
        self.pending[(mid, target)] = self.engine.schedule(
            self.cfg.round_timeout_ms, "round_timeout", mid, target
        )
        self._send("marker_from_monitor", mid, target, marker)

    def _on_round_timeout(self, mid: int, target: int) -> None:
        mon = self.monitors[mid]
        if not mon.has_open_round(target):
            return
        rnd = mon.rounds[target]
        started, prior = rnd.started_at, rnd.prior_row
        collected = mon.close_round(target)
        c = mon.update_topology(target, collected, prior)
        if self.cfg.adaptive:
            mon.adjust_frequency(target, c)
        self._send("verified", mid, target, mon.build_verified_message(target))
        if target in mon.rescan_on_close:
            mon.rescan_on_close.discard(target)
            delay = 0
        else:
            full = mon.schedule_next_round(target, self.engine.rng_sched)
            delay = max(0, full - (self.engine.now - started))
        self._schedule_round(mid, target, delay)

    # -- message transport ---------------------------------------------------------

    def _send(self, kind: str, frm: int, to: int, payload) -> None:
        lo, hi = self.cfg.latency_ms_range
        latency = self.engine.rng_latency.randint(lo, hi)
        self.ledger.count(kind, frm, to)
        self.engine.schedule(latency, "deliver", kind, frm, to, payload)

    def _marker_kind(self, to: int) -> str:
        return "marker_to_monitor" if to in self.monitors else "marker_forwarded"

    def _on_deliver(self, kind: str, frm: int, to: int, payload) -> None:
        if to in self.monitors:
            accepted = self.monitors[to].receive_marker(frm, payload)
            self.engine.trace(
                kind, frm, to, f"{payload.target}:{payload.value}:{int(accepted)}"
            )
            return
        if to not in self.nodes:
            return  # recipient departed while the message was in flight
        if kind == "verified":
            peers = ",".join(str(p) for p in sorted(payload.verified_peers))
            self.engine.trace(kind, frm, to, peers)
            if to in self.advs:
                self.advs[to].handle_verified(frm, payload)
                return
            for act in self.nodes[to].handle_verified(frm, payload):
                self._apply_disconnect(to, act.peer)
            return
        self.engine.trace(kind, frm, to, f"{payload.target}:{payload.value}")
        if to in self.advs:
            for r in self.advs[to].handle_marker(frm, payload):
                self._send(self._marker_kind(r.to), r.sender, r.to, r.marker)
            return
        for s in self.nodes[to].handle_marker(frm, payload):
            self._send(self._marker_kind(s.to), to, s.to, s.marker)

    # -- enforcement -----------------------------------------------------------------

    def _apply_disconnect(self, owner: int, peer: int) -> None:
        self.nodes[owner].drop_peer(peer, ban=True)
        if peer not in self.nodes:
            return  # already departed; nothing left to sever
        self.nodes[peer].drop_peer(owner, ban=True)
        if peer in self.topo.out.get(owner, ()):
            edge = (owner, peer)
        elif owner in self.topo.out.get(peer, ()):
            edge = (peer, owner)
        else:
            self.topo.ban(owner, peer)
            return
        self.topo.close_connection(*edge)
        self.topo.ban(owner, peer)
        self.engine.trace("disconnect", owner, peer, f"edge={edge[0]}>{edge[1]}")
        self._refill(edge[0])

    def _refill(self, nid: int) -> None:
        if nid in self.advs and not self.cfg.malicious_refill:
            return
        while len(self.topo.out[nid]) < self.cfg.outbound_per_node:
            choices = self.topo.eligible_targets(nid)
            if not choices:
                return
            t = self.engine.rng_topology.choice(choices)
            self.topo.open_connection(nid, t)
            self.nodes[nid].connect_out(t)
            self.nodes[t].connect_in(nid)
            self.engine.trace("refill", nid, t)

    # -- background processes -----------------------------------------------------------

    def _on_churn(self) -> None:
        ev = self.topo.churn_tick(self.churn_cfg, self.engine.rng_churn)
        if isinstance(ev, NodeAdded):
            self._node_joined(ev)
        else:
            self._node_left(ev)
        self.engine.schedule(
            sample_exponential(self.engine.rng_churn, self.churn_cfg.variability_ms),
            "churn",
        )

    def global_snapshot(self):
        views = [self.monitors[mid] for mid in sorted(self.monitors)]
        return compute_global_snapshot(views)

    def _on_probe(self) -> None:
        snap = self.global_snapshot()
        truth = self.topo.peer_edges()
        counts = classify_edges(snap.edges, truth)
        self.probes.append(
            ProbeSample(self.engine.now, counts.tp, counts.fp, counts.fn)
        )
        if self.snapshot_sink is not None:
            now = self.engine.now
            for mid in sorted(self.monitors):
                edges = ",".join(
                    f"{a}>{b}" for a, b in sorted(self.monitors[mid].edges)
                )
                self.snapshot_sink.write(f"{now}\tm{mid}\t{edges}\n")
            edges = ",".join(f"{a}>{b}" for a, b in sorted(snap.edges))
            self.snapshot_sink.write(f"{now}\tglobal\t{edges}\n")
        if self.engine.now + self.cfg.probe_every_ms <= self.cfg.duration_ms:
            self.engine.schedule(self.cfg.probe_every_ms, "probe")
