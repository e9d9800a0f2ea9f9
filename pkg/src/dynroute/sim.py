"""Deterministic discrete-time multi-vehicle simulator.

Vehicles follow IDM car-following on a directed road network with
fixed-cycle signals (a red light acts as a standing virtual leader at the
stop line). Controlled vehicles re-plan per approached junction through
either the Bayesian candidate pipeline or a full live-weight reroute;
human-driven vehicles keep their static route. Given the same configuration,
seed and backend transcript, a run is bit-reproducible.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace

from . import decision as decision_mod
from . import gateway, kernels, traffic_state
from .gateway import BackendConfig
from .network import RoadNetwork, boundary_entry_edges, boundary_exit_edges, parse_network
from .network import generate_grid4x4, generate_manhattan
from .routing import (
    NoAdmissibleCandidateError,
    NoRouteError,
    RouteConstraints,
    critical_waypoints,
    dijkstra,
    free_flow_weights,
    yen_k_shortest,
)

METHODS = ("static_dijkstra", "dynamic_dijkstra", "dynamicroutegpt")

WAITING_SPEED = 0.1  # m/s, below this a vehicle counts as waiting
MIN_SEPARATION = 0.1  # m, enforced bumper gap floor


class SimulationError(RuntimeError):
    pass


class InvariantViolation(SimulationError):
    """A step produced a state the simulator promises never to produce."""


@dataclass(frozen=True)
class IDMParams:
    a_max: float = 2.6
    b_comfort: float = 4.5
    s_zero: float = 2.5
    headway: float = 1.0
    b_emergency: float = 9.0
    veh_length: float = 5.0


@dataclass(frozen=True)
class Trip:
    vehicle_id: str
    depart_time: float
    origin: str
    destination: str


@dataclass
class Vehicle:
    id: str
    seq: int
    kind: str  # "AV" | "HV"
    route: list
    global_path: tuple
    depart_time: float
    edge_index: int = 0
    offset: float = 0.0
    speed: float = 0.0
    inserted_time: float = None
    arrival_time: float = None
    visited_junctions: set = field(default_factory=set)
    decided_junctions: set = field(default_factory=set)
    waiting: float = 0.0
    route_length: float = 0.0
    ideal_time: float = 0.0
    traversed: list = field(default_factory=list)
    prior: object = None
    pending_leg: dict = None

    @property
    def current_edge(self):
        return self.route[self.edge_index]

    @property
    def on_final_edge(self):
        return self.edge_index == len(self.route) - 1

    @property
    def destination(self):
        return self.route[-1]


@dataclass(frozen=True)
class ScenarioConfig:
    network: dict
    vehicles: int
    rate: float
    od: object = "boundary_random"  # or {"start_edge":..., "end_edge":...}
    penetration_rate: float = 0.0
    seed: int = 1
    step_length: float = 1.0
    max_steps: int = 10000
    method: str = "dynamicroutegpt"
    backend: BackendConfig = field(default_factory=BackendConfig)
    constraints: RouteConstraints = field(default_factory=RouteConstraints)
    k: int = 3
    allow_uturns: bool = False
    decision_horizon: int = 1
    trigger_distance: float = 50.0
    observe_every: int = 10
    literal_revisit: bool = False
    reanchor_global: bool = False
    idm: IDMParams = field(default_factory=IDMParams)

    def __post_init__(self):
        if self.rate <= 0:
            raise ValueError("demand rate must be > 0")
        if not 0.0 <= self.penetration_rate <= 1.0:
            raise ValueError("penetration_rate must be in [0, 1]")
        if self.method not in METHODS:
            raise ValueError(f"unknown method {self.method!r}; expected one of {METHODS}")
        if self.decision_horizon not in (1, 2):
            raise ValueError("decision_horizon must be 1 or 2")

    def build_network(self):
        spec = self.network
        if "file" in spec:
            with open(spec["file"], encoding="utf-8") as fh:
                return parse_network(fh.read())
        gen = spec.get("generator")
        if gen == "manhattan":
            return generate_manhattan(spec.get("rows", 4), spec.get("cols", 4))
        if gen == "grid4x4":
            return generate_grid4x4()
        raise ValueError(f"bad network spec {spec!r}")


def load_scenario(path):
    """Read a scenario config (JSON, schema in the README) from disk."""
    with open(path, encoding="utf-8") as fh:
        raw = json.load(fh)
    return scenario_from_dict(raw)


def scenario_from_dict(raw):
    backend_raw = raw.get("backend", {})
    backend = BackendConfig(
        endpoint=backend_raw.get("endpoint", ""),
        timeout_ms=backend_raw.get("timeout_ms", 2000.0),
        enabled=backend_raw.get("enabled", False),
        retries=backend_raw.get("retries", 0),
    )
    cons_raw = raw.get("constraints", {})
    if "av" in cons_raw:
        cons_raw = cons_raw["av"]
    constraints = RouteConstraints(
        mandatory_edges=cons_raw.get("mandatory", ()),
        forbidden_edges=cons_raw.get("forbidden", ()),
    )
    demand = raw["demand"]
    params = raw.get("params", {})
    return ScenarioConfig(
        network=raw["network"],
        vehicles=demand["vehicles"],
        rate=demand.get("rate", 1.0),
        od=demand.get("od", "boundary_random"),
        penetration_rate=raw.get("penetration_rate", 0.0),
        seed=raw.get("seed", 1),
        step_length=raw.get("step_length", 1.0),
        max_steps=raw.get("max_steps", 10000),
        method=raw.get("method", "dynamicroutegpt"),
        backend=backend,
        constraints=constraints,
        **{kw: params[kw] for kw in (
            "k", "allow_uturns", "decision_horizon", "trigger_distance",
            "observe_every", "literal_revisit", "reanchor_global",
        ) if kw in params},
    )


def assign_fleet(total, pr, rng):
    """Fleet split at penetration rate pr: (n_av, n_hv, av indices).

    n_av = round(pr * total); the controlled identities are drawn uniformly
    without replacement.
    """
    if total < 0:
        raise ValueError("total must be >= 0")
    n_av = int(round(pr * total))
    n_av = min(max(n_av, 0), total)
    av_ids = frozenset(rng.sample(range(total), n_av))
    return n_av, total - n_av, av_ids


def generate_demand(net, config, rng, max_resamples=100):
    """Timed OD trips: fixed per config or uniform over boundary stub edges.

    Every OD pair is verified reachable on free-flow weights; random draws
    resample up to `max_resamples` before giving up.
    """
    weights = free_flow_weights(net)

    def reachable(a, b):
        try:
            dijkstra(net, weights, a, b, allow_uturn=config.allow_uturns)
            return True
        except NoRouteError:
            return False

    trips = []
    if isinstance(config.od, dict):
        origin = config.od["start_edge"]
        dest = config.od["end_edge"]
        net.edge(origin)
        net.edge(dest)
        if not reachable(origin, dest):
            raise NoRouteError(f"fixed OD {origin} -> {dest} is unreachable")
        for i in range(config.vehicles):
            trips.append(Trip(f"veh_{i}", i / config.rate, origin, dest))
        return trips

    origins = boundary_entry_edges(net)
    dests = boundary_exit_edges(net)
    if not origins or not dests:
        origins = dests = sorted(net.edges)
    ok_pairs = {}
    for i in range(config.vehicles):
        for attempt in range(max_resamples):
            origin = rng.choice(origins)
            dest = rng.choice(dests)
            if dest == origin or dest == net.reverse_of(origin):
                continue
            key = (origin, dest)
            if key not in ok_pairs:
                ok_pairs[key] = reachable(origin, dest)
            if ok_pairs[key]:
                break
        else:
            raise NoRouteError(f"no reachable OD pair found in {max_resamples} draws")
        trips.append(Trip(f"veh_{i}", i / config.rate, origin, dest))
    return trips


class Simulation:
    """Owns all mutable state; `run()` executes the full scenario."""

    def __init__(self, net, trips, av_seqs, config):
        self.net = net
        self.config = config
        self.dt = config.step_length
        self.time = 0.0
        self.steps = 0
        self.decisions = []
        self.events = []

        static = free_flow_weights(net)
        route_cache = {}
        self.vehicles = []
        for seq, trip in enumerate(trips):
            key = (trip.origin, trip.destination)
            if key not in route_cache:
                route_cache[key] = dijkstra(
                    net, static, trip.origin, trip.destination,
                    allow_uturn=config.allow_uturns,
                ).path.edges
            route = list(route_cache[key])
            kind = "AV" if seq in av_seqs and config.method != "static_dijkstra" else "HV"
            self.vehicles.append(
                Vehicle(
                    id=trip.vehicle_id,
                    seq=seq,
                    kind=kind,
                    route=route,
                    global_path=tuple(route),
                    depart_time=trip.depart_time,
                    prior=decision_mod.PathPrior.uniform(config.k),
                )
            )
        self.pending = sorted(self.vehicles, key=lambda v: (v.depart_time, v.seq))
        self.queues = {}
        self.arrived = []

        self.model = traffic_state.TransitionModel()
        self.observations = traffic_state.free_flow_observations(net)
        self._last_state = {
            eid: traffic_state.classify(obs.v_avg, net.edge(eid).v_max)
            for eid, obs in self.observations.items()
        }
        self._speed_sum = {eid: 0.0 for eid in net.edges}
        self._speed_n = {eid: 0 for eid in net.edges}
        self._step_weights = None

    # -- bookkeeping ------------------------------------------------------

    def _event(self, kind, vehicle, detail=""):
        self.events.append(
            f"{self.time:.1f} {kind} {vehicle.id}" + (f" {detail}" if detail else "")
        )

    def _enter_edge(self, vehicle, edge_id):
        e = self.net.edge(edge_id)
        vehicle.traversed.append(edge_id)
        vehicle.route_length += e.length
        vehicle.ideal_time += e.length / e.v_max

    # -- step phases ------------------------------------------------------

    def _insert_due(self):
        blocked = set()
        still = []
        idm = self.config.idm
        for v in self.pending:
            if v.depart_time > self.time or v.current_edge in blocked:
                still.append(v)
                continue
            queue = self.queues.setdefault(v.current_edge, [])
            if queue and queue[-1].offset < idm.veh_length + idm.s_zero:
                blocked.add(v.current_edge)
                still.append(v)
                continue
            v.inserted_time = self.time
            v.offset = 0.0
            v.speed = 0.0
            queue.append(v)
            self._enter_edge(v, v.current_edge)
            self._event("insert", v, f"edge={v.current_edge}")
        self.pending = still

    def _head_constraints(self, edge_id, queue):
        """(idm_gap, leader_speed, max_advance) for the queue's front vehicle."""
        front = queue[0]
        e = self.net.edge(edge_id)
        remaining = e.length - front.offset
        idm = self.config.idm
        if front.on_final_edge:
            return kernels.INFINITY, 0.0, kernels.INFINITY
        if not self.net.is_green(edge_id, self.time):
            # red: standing virtual leader at the stop line
            return max(remaining, 0.0), 0.0, max(remaining, 0.0)
        next_edge = front.route[front.edge_index + 1]
        next_queue = self.queues.get(next_edge)
        if next_queue:
            rear = next_queue[-1]
            gap = remaining + rear.offset - idm.veh_length
            advance = remaining + rear.offset - idm.veh_length - MIN_SEPARATION
            return max(gap, 0.0), rear.speed, max(advance, 0.0)
        return kernels.INFINITY, 0.0, kernels.INFINITY

    def _move(self):
        idm = self.config.idm
        plans = []
        for edge_id in sorted(self.queues):
            queue = self.queues[edge_id]
            if not queue:
                continue
            head_gap, head_speed, head_adv = self._head_constraints(edge_id, queue)
            plans.append((edge_id, queue, head_gap, head_speed, head_adv))
        for edge_id, queue, head_gap, head_speed, head_adv in plans:
            e = self.net.edge(edge_id)
            offsets = [v.offset for v in queue]
            speeds = [v.speed for v in queue]
            new_off, new_sp = kernels.advance_queue(
                offsets, speeds, e.v_max, self.dt, head_gap, head_speed,
                head_adv, idm.veh_length, MIN_SEPARATION, idm.a_max,
                idm.b_comfort, idm.s_zero, idm.headway, idm.b_emergency,
            )
            for v, off, sp in zip(queue, new_off, new_sp):
                v.offset = off
                v.speed = sp

    def _hand_offs(self):
        arrived_now = self.time + self.dt
        idm = self.config.idm
        for edge_id in sorted(self.queues):
            queue = self.queues[edge_id]
            e = self.net.edge(edge_id)
            while queue and queue[0].offset >= e.length:
                v = queue[0]
                if v.on_final_edge:
                    queue.pop(0)
                    v.arrival_time = arrived_now
                    v.offset = e.length
                    self.arrived.append(v)
                    self._event("arrive", v, f"edge={edge_id}")
                    self._complete_leg(v, edge_id, arrived_now)
                    continue
                next_edge_id = v.route[v.edge_index + 1]
                next_e = self.net.edge(next_edge_id)
                next_queue = self.queues.setdefault(next_edge_id, [])
                overshoot = v.offset - e.length
                if next_queue:
                    room = next_queue[-1].offset - idm.veh_length - MIN_SEPARATION
                    if room < 0.0:
                        # jammed entry: hold at the stop line
                        v.offset = e.length
                        v.speed = 0.0
                        break
                    overshoot = min(overshoot, room)
                queue.pop(0)
                v.edge_index += 1
                v.offset = max(overshoot, 0.0)
                v.speed = min(v.speed, next_e.v_max)
                v.visited_junctions.add(e.to_junction)
                next_queue.append(v)
                self._enter_edge(v, next_edge_id)
                self._complete_leg(v, edge_id, arrived_now)

    def _complete_leg(self, vehicle, finished_edge, now):
        leg = vehicle.pending_leg
        if leg is None:
            return
        if finished_edge == leg["decision_edge"] and leg["t0"] is None:
            leg["t0"] = now
        elif finished_edge == leg["target"]:
            if leg["t0"] is not None and now > leg["t0"]:
                vehicle.prior = decision_mod.update_prior(
                    vehicle.prior, leg["chosen_index"], now - leg["t0"],
                    max(leg["predicted_leg"], 1e-9),
                )
            vehicle.pending_leg = None

    def _accumulate_waiting_and_speeds(self):
        for edge_id, queue in self.queues.items():
            for v in queue:
                if v.speed < WAITING_SPEED:
                    v.waiting += self.dt
                self._speed_sum[edge_id] += v.speed
                self._speed_n[edge_id] += 1

    def _refresh_observations(self):
        for eid, e in self.net.edges.items():
            n = self._speed_n[eid]
            v_avg = self._speed_sum[eid] / n if n else e.v_max
            count = len(self.queues.get(eid, ()))
            obs = traffic_state.observe(e, v_avg, count, timestamp=self.time)
            new_state = traffic_state.classify(obs.v_avg, e.v_max)
            self.model.record(eid, self._last_state[eid], new_state)
            self._last_state[eid] = new_state
            self.observations[eid] = obs
            self._speed_sum[eid] = 0.0
            self._speed_n[eid] = 0

    def _live_weights(self):
        if self._step_weights is None:
            self._step_weights = traffic_state.live_weights(
                self.net, self.observations, self.model
            )
        return self._step_weights

    # -- control hooks ----------------------------------------------------

    def _control(self):
        if self.config.method == "static_dijkstra":
            return
        active = sorted(
            (v for q in self.queues.values() for v in q if v.kind == "AV"),
            key=lambda v: v.seq,
        )
        for v in active:
            if v.on_final_edge:
                continue
            e = self.net.edge(v.current_edge)
            if e.length - v.offset > self.config.trigger_distance:
                continue
            junction = e.to_junction
            if junction in v.decided_junctions:
                continue
            if self.config.literal_revisit and junction not in v.visited_junctions:
                # literal reading: only re-plan when approaching a junction
                # seen before; first approaches are merely recorded
                continue
            v.decided_junctions.add(junction)
            if self.config.method == "dynamic_dijkstra":
                self._reroute_dynamic_dijkstra(v)
            else:
                self._reroute_candidates(v, junction)

    def _reroute_dynamic_dijkstra(self, v):
        weights = self._live_weights()
        try:
            best = dijkstra(
                self.net, weights, v.current_edge, v.destination,
                allow_uturn=self.config.allow_uturns,
            )
        except NoRouteError:
            return
        v.route = v.route[: v.edge_index] + list(best.path.edges)

    def _candidate_target(self, v, weights):
        """Waypoint on the global path; escalates the horizon when the near
        target admits no alternative or sits on a forbidden edge."""
        global_path = v.global_path
        if self.config.reanchor_global:
            try:
                global_path = dijkstra(
                    self.net, weights, v.current_edge, v.destination,
                    allow_uturn=self.config.allow_uturns,
                ).path.edges
                v.global_path = tuple(global_path)
            except NoRouteError:
                pass
        route_ctx = v.route[v.edge_index:]
        target = critical_waypoints(
            global_path, v.current_edge, self.config.decision_horizon, route=route_ctx
        )
        if (
            self.config.decision_horizon == 1
            and target in self.config.constraints.forbidden_edges
        ):
            target = critical_waypoints(global_path, v.current_edge, 2, route=route_ctx)
        return target, global_path

    def _reroute_candidates(self, v, junction_id):
        weights = self._live_weights()
        cfg = self.config
        try:
            target, global_path = self._candidate_target(v, weights)
        except (NoRouteError, ValueError):
            return
        candidates = yen_k_shortest(
            self.net, weights, v.current_edge, target, cfg.k,
            allow_uturn=cfg.allow_uturns,
        )
        if len(candidates) < 2 and cfg.decision_horizon == 1:
            wider = critical_waypoints(
                global_path, v.current_edge, 2, route=v.route[v.edge_index:]
            )
            if wider != target:
                target = wider
                candidates = yen_k_shortest(
                    self.net, weights, v.current_edge, target, cfg.k,
                    allow_uturn=cfg.allow_uturns,
                )
        evals = decision_mod.evaluate_candidates(candidates, cfg.constraints)
        junction = self.net.junction(junction_id)
        try:
            record = gateway.decide(
                v.id, junction, evals, cfg.constraints, v.prior, cfg.backend,
                time=self.time,
            )
        except NoAdmissibleCandidateError:
            self._fallback_route(v, weights)
            return
        chosen = record.candidates[record.chosen_index]
        chosen_edges = list(chosen.path.path.edges)
        target_idx = list(global_path).index(target)
        v.route = v.route[: v.edge_index] + chosen_edges + list(global_path[target_idx + 1:])
        v.pending_leg = {
            "decision_edge": v.current_edge,
            "target": target,
            "chosen_index": record.chosen_index,
            "predicted_leg": chosen.predicted_time - weights[v.current_edge],
            "t0": None,
        }
        self.decisions.append(record)
        self._event(
            "decide", v,
            f"junction={junction_id} chosen=path{record.chosen_index + 1} "
            f"engine={record.engine}",
        )

    def _fallback_route(self, v, weights):
        """All candidates inadmissible: reroute to the destination avoiding
        forbidden edges, chaining through any mandatory edges."""
        cons = self.config.constraints
        banned = frozenset(cons.forbidden_edges)
        stops = [m for m in sorted(cons.mandatory_edges) if m not in v.traversed]
        legs = []
        src = v.current_edge
        try:
            for stop in stops + [v.destination]:
                cp = dijkstra(
                    self.net, weights, src, stop,
                    allow_uturn=self.config.allow_uturns, banned_edges=banned,
                )
                legs.append(list(cp.path.edges))
                src = stop
        except NoRouteError:
            self._event("fallback-failed", v)
            return
        route = legs[0]
        for leg in legs[1:]:
            route += leg[1:]
        v.route = v.route[: v.edge_index] + route
        self._event("fallback", v, f"route_len={len(route)}")

    # -- invariants -------------------------------------------------------

    def _check_invariants(self):
        idm = self.config.idm
        n_active = sum(len(q) for q in self.queues.values())
        if len(self.pending) + n_active + len(self.arrived) != len(self.vehicles):
            raise InvariantViolation(
                f"vehicle conservation broken at t={self.time}: "
                f"{len(self.pending)}+{n_active}+{len(self.arrived)} != {len(self.vehicles)}"
            )
        for edge_id, queue in self.queues.items():
            e = self.net.edge(edge_id)
            for i, v in enumerate(queue):
                if not 0.0 <= v.offset <= e.length:
                    raise InvariantViolation(
                        f"{v.id} offset {v.offset} outside [0, {e.length}] on {edge_id}"
                    )
                if not 0.0 <= v.speed <= e.v_max + 0.5:
                    raise InvariantViolation(f"{v.id} speed {v.speed} out of range")
                if i > 0:
                    gap = queue[i - 1].offset - v.offset - idm.veh_length
                    if gap <= 0.0:
                        raise InvariantViolation(
                            f"collision on {edge_id} at t={self.time}: gap {gap}"
                        )

    # -- main loop --------------------------------------------------------

    @property
    def done(self):
        return not self.pending and not any(self.queues.values())

    def step(self):
        self._step_weights = None
        self._insert_due()
        self._move()
        self._hand_offs()
        self._accumulate_waiting_and_speeds()
        if self.config.observe_every and (self.steps + 1) % self.config.observe_every == 0:
            self._refresh_observations()
        self._control()
        self.time += self.dt
        self.steps += 1
        self._check_invariants()

    def run(self):
        while not self.done and self.steps < self.config.max_steps:
            self.step()
        return self


def build_simulation(config, net=None, method=None, seed=None, pr=None):
    """Construct a ready-to-run Simulation from a scenario config.

    Demand and the AV identity draw depend only on (config, seed, pr), so two
    methods compared under the same seed see identical traffic.
    """
    if method is not None or seed is not None or pr is not None:
        config = replace(
            config,
            method=method if method is not None else config.method,
            seed=seed if seed is not None else config.seed,
            penetration_rate=pr if pr is not None else config.penetration_rate,
        )
    net = net or config.build_network()
    rng = random.Random(config.seed)
    trips = generate_demand(net, config, rng)
    _, _, av_seqs = assign_fleet(len(trips), config.penetration_rate, rng)
    return Simulation(net, trips, av_seqs, config)
