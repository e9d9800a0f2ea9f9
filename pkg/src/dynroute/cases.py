"""Bundled reference decision cases on the Manhattan-style grid.

Three scenarios at the same junction with the same candidate set: an
unconstrained pick, a mandatory-edge pick, and an emergency detour around a
forbidden edge. They double as golden tests: the chosen path and the exact
rationale text are fixed outputs of the engine.
"""

from __future__ import annotations

from . import decision, traffic_state
from .network import generate_manhattan
from .routing import RouteConstraints, yen_k_shortest

CASE_SOURCE = "A3A2"
CASE_TARGET = "B2C2"

EXPECTED_CANDIDATES = (
    ("A3A2", "A2B2", "B2C2"),
    ("A3A2", "A2A1", "A1B1", "B1B2", "B2C2"),
    ("A3A2", "A2A1", "A1A0", "A0B0", "B0B1", "B1B2", "B2C2"),
)


def _expected_rationale(chosen, mandatory=None, forbidden=None):
    lines = [
        "Total time: path1 < path2 < path3",
        "Traffic light count: path1 < path2 < path3",
        "Error edges: " + (forbidden if forbidden else "none"),
    ]
    if mandatory:
        lines.append("Mandatory path: " + mandatory)
    lines.append(f"Taking all factors into consideration, path{chosen} is selected.")
    return "\n".join(lines)


REFERENCE_CASES = (
    {
        "name": "standard route selection",
        "constraints": RouteConstraints(),
        "expected_choice": 0,
        "expected_rationale": _expected_rationale(1),
    },
    {
        "name": "mandatory route",
        "constraints": RouteConstraints(mandatory_edges={"A2A1"}),
        "expected_choice": 1,
        "expected_rationale": _expected_rationale(2, mandatory="A2A1"),
    },
    {
        "name": "emergency avoidance",
        "constraints": RouteConstraints(mandatory_edges={"A2A1"}, forbidden_edges={"A1B1"}),
        "expected_choice": 2,
        "expected_rationale": _expected_rationale(3, mandatory="A2A1", forbidden="A1B1"),
    },
)


def reference_network():
    return generate_manhattan(4, 4)


def reference_candidates(net):
    """The three alternatives between the reference source and target under
    uncongested conditions (fresh transition model, free-flow observations)."""
    observations = traffic_state.free_flow_observations(net)
    model = traffic_state.TransitionModel()
    weights = traffic_state.live_weights(net, observations, model)
    return yen_k_shortest(net, weights, CASE_SOURCE, CASE_TARGET, 3)


def run_reference_cases(net=None):
    """Decide each reference case; yields (case, record, ok) triples."""
    net = net or reference_network()
    candidates = reference_candidates(net)
    results = []
    for case in REFERENCE_CASES:
        evals = decision.evaluate_candidates(candidates, case["constraints"])
        record = decision.choose(
            evals,
            decision.PathPrior.uniform(len(evals)),
            case["constraints"],
            vehicle_id="veh_42",
            junction_id="A2",
        )
        ok = (
            record.chosen_index == case["expected_choice"]
            and record.rationale == case["expected_rationale"]
            and tuple(tuple(ev.path.path.edges) for ev in record.candidates)
            == EXPECTED_CANDIDATES
        )
        results.append((case, record, ok))
    return results
