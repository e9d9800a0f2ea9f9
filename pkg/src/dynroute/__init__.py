"""Dynamic multi-vehicle route guidance: road-network model, k-shortest
candidate routing, Markov travel-time prediction, Bayesian per-intersection
route choice with an optional external decision service, and a deterministic
traffic simulator with metric reporting."""

from .decision import (
    CandidateEvaluation,
    DecisionRecord,
    PathPrior,
    choose,
    evaluate_candidates,
    likelihood,
    posterior,
    render_rationale,
    update_prior,
)
from .gateway import BackendConfig, BackendVerdict, DecisionPrompt, build_prompt, decide
from .kernels import BACKEND as KERNEL_BACKEND
from .kernels import idm_acceleration
from .metrics import (
    SummaryMetrics,
    VehicleRecord,
    aggregate,
    pr_sweep,
    run_comparison,
    run_scenario,
    vehicle_metrics,
)
from .network import (
    Edge,
    Junction,
    RoadNetwork,
    SignalProgram,
    generate_grid4x4,
    generate_manhattan,
    parse_network,
    serialize_network,
    successors,
)
from .routing import (
    CostedPath,
    NoAdmissibleCandidateError,
    NoRouteError,
    Path,
    RouteConstraints,
    critical_waypoints,
    dijkstra,
    filter_candidates,
    free_flow_weights,
    yen_k_shortest,
)
from .sim import ScenarioConfig, Simulation, assign_fleet, build_simulation, generate_demand
from .traffic_state import (
    EdgeObservation,
    EdgeState,
    TransitionModel,
    classify,
    estimate_edge_time,
    estimate_path_time,
    expected_signal_wait,
    record_transition,
    transition_probability,
)

__version__ = "0.1.0"
