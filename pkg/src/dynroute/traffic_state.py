"""Live edge observations, the discrete Markov congestion model, signal-wait
expectation, and per-edge/per-path travel-time prediction.

Edges occupy one of three congestion states keyed by the speed ratio
v_avg/v_max. State transitions are counted online with Laplace smoothing,
and predicted travel time mixes representative speeds by the transition row
of the currently observed state.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

FREE_THRESHOLD = 0.7
SLOW_THRESHOLD = 0.3
# representative fraction of v_max while in each state
REP_SPEED = {"FREE": 0.85, "SLOW": 0.5, "CONGESTED": 0.15}
V_EFF_FLOOR = 0.5  # m/s, keeps jammed-edge estimates finite
SMOOTHING = 1.0  # Laplace constant for transition counts


class EdgeState(enum.IntEnum):
    """Congestion level; higher value means faster traffic."""

    CONGESTED = 0
    SLOW = 1
    FREE = 2

    @property
    def rep_fraction(self):
        return REP_SPEED[self.name]


STATES = (EdgeState.CONGESTED, EdgeState.SLOW, EdgeState.FREE)


@dataclass(frozen=True)
class EdgeObservation:
    edge: str
    v_avg: float
    vehicle_count: int = 0
    density: float = 0.0
    timestamp: float = 0.0

    def __post_init__(self):
        if self.v_avg < 0:
            raise ValueError(f"v_avg must be >= 0, got {self.v_avg}")
        if self.vehicle_count < 0:
            raise ValueError("vehicle_count must be >= 0")


def observe(edge, v_avg, vehicle_count=0, timestamp=0.0):
    """Build an observation, clamping v_avg to the speed limit and deriving
    density from the count and edge geometry."""
    v = min(max(v_avg, 0.0), edge.v_max)
    density = vehicle_count / (edge.length * edge.lane_count)
    return EdgeObservation(edge.id, v, vehicle_count, density, timestamp)


def classify(v_avg, v_max):
    """Map a speed ratio to a congestion state (0.7 / 0.3 thresholds)."""
    if v_max <= 0:
        raise ValueError(f"v_max must be > 0, got {v_max}")
    ratio = v_avg / v_max
    if ratio >= FREE_THRESHOLD:
        return EdgeState.FREE
    if ratio >= SLOW_THRESHOLD:
        return EdgeState.SLOW
    return EdgeState.CONGESTED


class TransitionModel:
    """Per-edge 3x3 transition counts with Laplace-smoothed probabilities."""

    def __init__(self, alpha=SMOOTHING):
        if alpha <= 0:
            raise ValueError("smoothing constant must be > 0")
        self.alpha = float(alpha)
        self._counts = {}

    def counts(self, edge):
        return self._counts.get(edge, [[0, 0, 0], [0, 0, 0], [0, 0, 0]])

    def record(self, edge, prev, nxt):
        rows = self._counts.setdefault(edge, [[0, 0, 0], [0, 0, 0], [0, 0, 0]])
        rows[int(prev)][int(nxt)] += 1

    def probability(self, edge, prev, nxt):
        row = self.counts(edge)[int(prev)]
        return (row[int(nxt)] + self.alpha) / (sum(row) + 3 * self.alpha)

    def row(self, edge, prev):
        return [self.probability(edge, prev, s) for s in STATES]

    def total_count(self, edge):
        return sum(sum(r) for r in self.counts(edge))

    def copy(self):
        dup = TransitionModel(self.alpha)
        dup._counts = {e: [r[:] for r in rows] for e, rows in self._counts.items()}
        return dup


def record_transition(model, edge, prev, nxt):
    """Count one observed state change (in place; returns the model)."""
    model.record(edge, prev, nxt)
    return model


def transition_probability(model, edge, prev, nxt):
    return model.probability(edge, prev, nxt)


def expected_signal_wait(program, incoming_edge):
    """Mean wait under uniform arrival over the cycle: sum of red-gap^2 / 2C.

    A single green window of length g gives the familiar r^2/(2C) with
    r = C - g.
    """
    gaps = program.red_intervals(incoming_edge)
    return sum(g * g for g in gaps) / (2.0 * program.cycle)


def effective_speed(edge, obs, model):
    """Transition-weighted representative speed for the edge's current state."""
    state = classify(obs.v_avg, edge.v_max)
    v_eff = sum(
        model.probability(edge.id, state, s) * s.rep_fraction * edge.v_max for s in STATES
    )
    return max(v_eff, V_EFF_FLOOR)


def estimate_edge_time(edge, obs, model, program=None):
    """Predicted traversal time: length over effective speed, plus the
    expected signal wait when the downstream junction is signalized."""
    if obs.edge != edge.id:
        raise ValueError(f"observation is for {obs.edge}, not {edge.id}")
    t = edge.length / effective_speed(edge, obs, model)
    if program is not None:
        t += expected_signal_wait(program, edge.id)
    return t


def estimate_path_time(net, edges, observations, model):
    """(predicted seconds, light count) for an edge path.

    Sums per-edge estimates; each edge contributes its own downstream signal
    wait exactly once, so concatenating paths adds their times.
    """
    edges = list(edges)
    total = 0.0
    for eid in edges:
        edge = net.edge(eid)
        total += estimate_edge_time(
            edge, observations[eid], model, net.program_for_edge(eid)
        )
    lights = sum(1 for e in edges[:-1] if net.signalized_downstream(e))
    return total, lights


def live_weights(net, observations, model):
    """Per-edge predicted travel times, usable as routing weights."""
    return {
        eid: estimate_edge_time(e, observations[eid], model, net.program_for_edge(eid))
        for eid, e in net.edges.items()
    }


def free_flow_observations(net, timestamp=0.0):
    """Observations for an empty network: every edge at its speed limit."""
    return {eid: observe(e, e.v_max, 0, timestamp) for eid, e in net.edges.items()}
