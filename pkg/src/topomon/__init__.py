"""Active topology monitoring for P2P overlays.

Deterministic discrete-event simulator plus the protocol pieces it drives:
marker-based link verification, monitor-side adaptive scanning, node-side
peer reputation, colluding adversaries, churn, and a precision/recall
evaluation harness.
"""

__version__ = "0.1.0"
