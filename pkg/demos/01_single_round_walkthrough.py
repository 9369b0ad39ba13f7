"""One verification round, message by message.

A monitor checks who node 1 is connected to without trusting node 1's word
for it: it hands node 1 a marker carrying a fresh nonce, node 1 forwards it
to its outbound peers, and each peer that recognizes node 1 as an inbound
neighbor bounces the marker back to the monitor.  Whoever echoes the right
nonce is a verified peer.
"""
from topomon.engine import substream
from topomon.monitor import Monitor
from topomon.protocol import NodeState

MON = 100

# Overlay under inspection: 1 -> 2, 1 -> 3, and 4 -> 1.
nodes = {i: NodeState(i, {MON}) for i in (1, 2, 3, 4)}
nodes[1].connect_out(2), nodes[2].connect_in(1)
nodes[1].connect_out(3), nodes[3].connect_in(1)
nodes[4].connect_out(1), nodes[1].connect_in(4)

mon = Monitor(MON, mode="fixed")
for i in nodes:
    mon.node_discovered(i)

rng = substream(7, "walkthrough")
marker = mon.start_round(1, rng, now=0)
print(f"monitor opens a round on node 1, nonce {marker.value:#018x}")

fanout = nodes[1].handle_marker(MON, marker)
print(f"node 1 forwards the marker to its outbound peers: {[s.to for s in fanout]}")

for send in fanout:
    bounce = nodes[send.to].handle_marker(1, send.marker)
    for b in bounce:
        print(f"  node {send.to} sees node 1 in its inbound set, relays to {b.to}")
        accepted = mon.receive_marker(send.to, b.marker)
        print(f"  monitor checks the nonce: {'accepted' if accepted else 'rejected'}")

# node 4 only points AT node 1; it never saw the marker and stays silent.
collected = mon.close_round(1)
changes = mon.update_topology(1, collected)
print(f"round closes; verified outbound row for node 1: {sorted(collected)}")
print(f"changes vs previous round: {changes}")

msg = mon.build_verified_message(1)
print(f"confirmation sent back to node 1 lists: {sorted(msg.verified_peers)}")
print("(4 is absent: its edge 4->1 gets verified in node 4's own round)")
