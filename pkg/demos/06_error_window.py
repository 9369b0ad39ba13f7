"""How stale can the agreed global view get?  Bounded by the majority window.

With monitors scanning at fixed periods [1,5,5,10] seconds, an edge change
enters the agreed view once a strict majority of monitors has re-scanned:
the worst case is the median period (5s) plus one round (1s).  We cut an
edge mid-run and time both each monitor's own catch-up and the global view.
"""
import random

from topomon.monitor import max_error_window
from topomon.simulation import ExperimentConfig, World

FREQS = [1, 5, 5, 10]
window_s = max_error_window(FREQS)
print(f"fixed scan periods {FREQS}s -> majority refresh window "
      f"{window_s}s + 1s round\n")

cfg = ExperimentConfig(
    nodes=20,
    monitors=4,
    monitor_f_init=tuple(FREQS),
    variability_s=0.0,
    duration_ms=28_000,
    probe_every_ms=28_000,
    scheduling_mode="fixed",
    adaptive=False,
    f_init=5,
    f_min=1,
    f_max=10,
    seed=3,
)
world = World(cfg)
rng = random.Random(3)
t0 = 13_000
edge = rng.choice(sorted(world.topo.peer_edges()))
seen_by = {}
global_at = []


def inject():
    print(f"t={t0 / 1000:.0f}s: cutting edge {edge[0]} -> {edge[1]} "
          "(no notification to anyone)")
    world.close_edge(*edge)
    world.engine.schedule(0, "demo_check")


def check():
    for mid, mon in world.monitors.items():
        if mid not in seen_by and edge not in mon.edges:
            seen_by[mid] = world.engine.now
    if not global_at and edge not in world.global_snapshot().edges:
        global_at.append(world.engine.now)
    if len(seen_by) < len(world.monitors) or not global_at:
        world.engine.schedule(100, "demo_check")


world.engine.on("demo_inject", inject)
world.engine.on("demo_check", check)
world.engine.schedule(t0, "demo_inject")
world.run()

for mid, t in sorted(seen_by.items()):
    print(f"  monitor {mid} (period {FREQS[mid]:2}s) caught up after "
          f"{(t - t0) / 1000:4.1f}s")
print(f"\nagreed view dropped the edge after {(global_at[0] - t0) / 1000:.1f}s "
      f"(bound: {window_s + 1:.0f}s)")
