"""Shortest-path search over the edge graph, k-shortest candidate generation,
and hard route-constraint filtering.

Paths are sequences of edge ids; a path is loopless when its junction
sequence (from-junction of the first edge, then every downstream junction)
has no repeats. Searches honour the u-turn flag via the successor map.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass, field

from .network import RoadNetwork


class NoRouteError(ValueError):
    """Destination unreachable from the source edge."""


class NoAdmissibleCandidateError(ValueError):
    """Every candidate violates the hard constraints."""


@dataclass(frozen=True)
class Path:
    edges: tuple

    def __init__(self, edges):
        object.__setattr__(self, "edges", tuple(edges))
        if not self.edges:
            raise ValueError("path must be non-empty")

    def __len__(self):
        return len(self.edges)

    def __iter__(self):
        return iter(self.edges)

    def __getitem__(self, i):
        return self.edges[i]


@dataclass(frozen=True)
class CostedPath:
    path: Path
    cost: float
    light_count: int


@dataclass(frozen=True)
class RouteConstraints:
    mandatory_edges: frozenset = frozenset()
    forbidden_edges: frozenset = frozenset()

    def __init__(self, mandatory_edges=(), forbidden_edges=()):
        mandatory = frozenset(mandatory_edges)
        forbidden = frozenset(forbidden_edges)
        if mandatory & forbidden:
            raise ValueError(f"edges both mandatory and forbidden: {sorted(mandatory & forbidden)}")
        object.__setattr__(self, "mandatory_edges", mandatory)
        object.__setattr__(self, "forbidden_edges", forbidden)

    def __bool__(self):
        return bool(self.mandatory_edges or self.forbidden_edges)

    def violations(self, edges):
        """(kind, edge) pairs for every constraint the edge sequence breaks."""
        present = set(edges)
        out = [("mandatory-missing", e) for e in sorted(self.mandatory_edges - present)]
        out += [("forbidden-hit", e) for e in sorted(self.forbidden_edges & present)]
        return out


def path_junctions(net, edges):
    """Junction sequence visited by an edge path."""
    seq = [net.edge(edges[0]).from_junction]
    seq += [net.edge(e).to_junction for e in edges]
    return seq


def is_loopless(net, edges):
    seq = path_junctions(net, edges)
    return len(seq) == len(set(seq))


def validate_path(net, edges, allow_uturn=False):
    """Raise if the edge sequence is disconnected or revisits a junction."""
    edges = list(edges)
    if not edges:
        raise ValueError("path must be non-empty")
    for a, b in zip(edges, edges[1:]):
        if b not in net.successors(a, allow_uturn=allow_uturn):
            raise ValueError(f"edge {b} does not follow {a}")
    if not is_loopless(net, edges):
        raise ValueError(f"path revisits a junction: {edges}")


def light_count(net, edges):
    """Signalized junctions passed through, i.e. downstream ends of all edges
    but the last."""
    return sum(1 for e in list(edges)[:-1] if net.signalized_downstream(e))


def cost_of(weights, edges):
    return sum(weights[e] for e in edges)


def costed(net, weights, edges):
    return CostedPath(Path(edges), cost_of(weights, edges), light_count(net, edges))


def _check_weights(net, weights):
    for eid in net.edges:
        w = weights[eid]
        if not (w > 0) or w != w or w == float("inf"):
            raise ValueError(f"weight for edge {eid} must be finite and > 0, got {w}")


def _plain_dijkstra(net, weights, src, dst, allow_uturn, banned_junctions, banned_first,
                    banned_edges):
    """Cheapest edge path by heap search; lexicographic edge-id tie-break.

    May return a path that revisits junctions when turn restrictions make the
    loop-free optimum unreachable; callers wanting looplessness must check.
    """
    heap = [(weights[src], (src,))]
    sealed = set()
    while heap:
        cost, path = heapq.heappop(heap)
        edge = path[-1]
        if edge in sealed:
            continue
        sealed.add(edge)
        if edge == dst:
            return cost, path
        for nxt in sorted(net.successors(edge, allow_uturn=allow_uturn)):
            if nxt in sealed or nxt in banned_edges:
                continue
            if len(path) == 1 and nxt in banned_first:
                continue
            if net.edge(nxt).to_junction in banned_junctions:
                continue
            heapq.heappush(heap, (cost + weights[nxt], path + (nxt,)))
    return None


def _loopless_dijkstra(net, weights, src, dst, allow_uturn, banned_junctions, banned_first,
                       banned_edges, max_pops=500_000):
    """Exact cheapest loopless path: uniform-cost search over (edge, visited).

    Exponential in the worst case; used only when the plain search returns a
    junction-revisiting path, which turn restrictions make possible.
    """
    start_seen = frozenset(
        {net.edge(src).from_junction, net.edge(src).to_junction} | set(banned_junctions)
    )
    heap = [(weights[src], (src,), start_seen)]
    sealed = set()
    pops = 0
    while heap:
        cost, path, seen = heapq.heappop(heap)
        pops += 1
        if pops > max_pops:
            raise NoRouteError(f"loopless search exhausted between {src} and {dst}")
        edge = path[-1]
        if edge == dst:
            return cost, path
        key = (edge, seen)
        if key in sealed:
            continue
        sealed.add(key)
        for nxt in sorted(net.successors(edge, allow_uturn=allow_uturn)):
            if nxt in banned_edges:
                continue
            if len(path) == 1 and nxt in banned_first:
                continue
            j = net.edge(nxt).to_junction
            if j in seen:
                continue
            heapq.heappush(heap, (cost + weights[nxt], path + (nxt,), seen | {j}))
    return None


def _shortest(net, weights, src, dst, allow_uturn, banned_junctions=frozenset(),
              banned_first=frozenset(), banned_edges=frozenset()):
    net.edge(src)
    net.edge(dst)
    if src == dst:
        return weights[src], (src,)
    hit = _plain_dijkstra(net, weights, src, dst, allow_uturn, banned_junctions,
                          banned_first, banned_edges)
    if hit is not None and is_loopless(net, hit[1]):
        return hit
    # plain optimum loops (or nothing found): fall back to the exact search
    hit = _loopless_dijkstra(net, weights, src, dst, allow_uturn, banned_junctions,
                             banned_first, banned_edges)
    if hit is None:
        raise NoRouteError(f"no route from {src} to {dst}")
    return hit


def dijkstra(net, weights, src, dst, allow_uturn=False, banned_edges=frozenset()):
    """Cheapest loopless edge path from src to dst, inclusive of both edges.

    Cost is the sum of the supplied weights over every edge of the path.
    Ties are broken toward the lexicographically smallest edge-id sequence.
    `banned_edges` removes edges from consideration (the source is exempt).
    """
    _check_weights(net, weights)
    if src in banned_edges or dst in banned_edges:
        raise NoRouteError(f"endpoint of {src} -> {dst} is banned")
    cost, path = _shortest(net, weights, src, dst, allow_uturn,
                           banned_edges=frozenset(banned_edges))
    return costed(net, weights, path)


def yen_k_shortest(net, weights, src, dst, k, allow_uturn=False):
    """Up to k cheapest loopless paths, nondecreasing in cost.

    Element 0 is the dijkstra result; later equal-cost paths order by fewer
    lights, then lexicographic edge ids. Returns fewer than k paths when the
    graph has fewer loopless alternatives.
    """
    if k < 1:
        raise ValueError(f"k must be >= 1, got {k}")
    _check_weights(net, weights)
    first_cost, first = _shortest(net, weights, src, dst, allow_uturn)
    accepted = [first]
    accepted_set = {first}
    candidates = []  # heap of (cost, lights, path tuple)
    in_candidates = set()

    while len(accepted) < k:
        prev = accepted[-1]
        for i in range(len(prev) - 1):
            root = prev[: i + 1]
            spur_edge = root[-1]
            banned_first = {
                p[i + 1] for p in accepted if len(p) > i + 1 and p[: i + 1] == root
            }
            banned_first |= {
                p[i + 1] for _, _, p in candidates if len(p) > i + 1 and p[: i + 1] == root
            }
            banned_junctions = frozenset(net.edge(e).from_junction for e in root)
            try:
                spur = _shortest(
                    net, weights, spur_edge, dst, allow_uturn,
                    banned_junctions=banned_junctions, banned_first=banned_first,
                )
            except NoRouteError:
                continue
            total = root[:-1] + spur[1]
            if total in accepted_set or total in in_candidates:
                continue
            cost = cost_of(weights, total)
            heapq.heappush(candidates, (cost, light_count(net, total), total))
            in_candidates.add(total)
        if not candidates:
            break
        _, _, best = heapq.heappop(candidates)
        in_candidates.discard(best)
        accepted.append(best)
        accepted_set.add(best)

    return [costed(net, weights, p) for p in accepted]


def filter_candidates(candidates, constraints):
    """Candidates containing every mandatory edge and no forbidden edge.

    Order-preserving. An empty survivor set raises NoAdmissibleCandidateError
    so callers cannot mistake it for a routine empty input.
    """
    survivors = [c for c in candidates if not constraints.violations(c.path.edges)]
    if candidates and not survivors:
        raise NoAdmissibleCandidateError(
            f"all {len(candidates)} candidates violate the constraints"
        )
    return survivors


def critical_waypoints(global_path, current_edge, horizon, route=None):
    """Edge on the global path `horizon` segments past the vehicle's progress.

    Progress is the position of current_edge on the global path; when the
    vehicle is mid-detour (current_edge off the path), progress is recovered
    from `route` as the planned re-entry edge. Clamps to the destination edge
    when fewer segments remain.
    """
    if horizon not in (1, 2):
        raise ValueError(f"horizon must be 1 or 2, got {horizon}")
    edges = list(global_path.edges if isinstance(global_path, Path) else global_path)
    if current_edge in edges:
        progress = edges.index(current_edge)
    else:
        if route is None:
            raise ValueError(f"{current_edge} not on the global path and no route context given")
        route = list(route.edges if isinstance(route, Path) else route)
        if current_edge not in route:
            raise ValueError(f"{current_edge} not on the vehicle route")
        reentry = next(
            (e for e in route[route.index(current_edge) + 1:] if e in edges), None
        )
        if reentry is None:
            raise ValueError("route never re-enters the global path")
        progress = edges.index(reentry) - 1
    if progress >= len(edges) - 1:
        raise NoRouteError("global path exhausted: vehicle already on the final edge")
    return edges[min(progress + horizon, len(edges) - 1)]


def free_flow_weights(net):
    """Per-edge traversal time at the speed limit, ignoring signals."""
    return {eid: e.length / e.v_max for eid, e in net.edges.items()}
