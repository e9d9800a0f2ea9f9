"""Road-network data model, plain-text file format, and synthetic grid generators.

A network is a directed graph: junctions are intersections, edges are one-way
road segments (a two-way street is two directed edges). Fixed-cycle signal
programs live on junctions and define per-incoming-edge green windows.
"""

from __future__ import annotations

import math
import string
from dataclasses import dataclass

DEFAULT_SPEED = 13.89  # m/s
DEFAULT_LANES = 2
HORIZONTAL_LEN = 300.0  # m, east-west segments
VERTICAL_LEN = 200.0  # m, north-south segments

DEFAULT_CYCLE = 60.0
NS_GREEN = (0.0, 27.0)  # green window for north-south approaches
EW_GREEN = (30.0, 57.0)  # green window for east-west approaches; 3 s all-red between


class NetworkError(ValueError):
    """Invalid network definition."""


class NetworkFormatError(NetworkError):
    """Malformed network file; carries the offending line/column."""

    def __init__(self, message, line=None, column=None):
        loc = ""
        if line is not None:
            loc = f" (line {line}" + (f", col {column}" if column is not None else "") + ")"
        super().__init__(message + loc)
        self.line = line
        self.column = column


class DanglingReferenceError(NetworkError):
    """Edge or signal refers to an id that does not exist."""


@dataclass(frozen=True)
class Junction:
    id: str
    x: float
    y: float
    signalized: bool = False

    def __post_init__(self):
        if not self.id:
            raise NetworkError("junction id must be non-empty")
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise NetworkError(f"junction {self.id}: position must be finite")


@dataclass(frozen=True)
class Edge:
    id: str
    from_junction: str
    to_junction: str
    length: float
    v_max: float
    lane_count: int = 1

    def __post_init__(self):
        if self.length <= 0:
            raise NetworkError(f"edge {self.id}: length must be > 0, got {self.length}")
        if self.v_max <= 0:
            raise NetworkError(f"edge {self.id}: v_max must be > 0, got {self.v_max}")
        if self.lane_count < 1:
            raise NetworkError(f"edge {self.id}: lane_count must be >= 1")
        if self.from_junction == self.to_junction:
            raise NetworkError(f"edge {self.id}: self-loops are not allowed")

    @property
    def free_flow_time(self):
        return self.length / self.v_max


class SignalProgram:
    """Fixed-cycle signal plan: per incoming edge, a list of green windows.

    Windows are (start, end) seconds within the cycle, green on [start, end).
    Every governed edge must have positive total green (an all-red plan is
    rejected), and windows must lie within the cycle.
    """

    def __init__(self, cycle, windows, offset=0.0):
        if cycle <= 0:
            raise NetworkError(f"signal cycle must be > 0, got {cycle}")
        self.cycle = float(cycle)
        self.offset = float(offset)
        self.windows = {}
        for edge_id, spans in windows.items():
            spans = [(float(a), float(b)) for a, b in spans]
            for a, b in spans:
                if not (0.0 <= a < b <= self.cycle):
                    raise NetworkError(
                        f"green window {a}-{b} for edge {edge_id} outside cycle [0, {self.cycle}]"
                    )
            if not spans:
                raise NetworkError(f"edge {edge_id} listed with no green window")
            self.windows[edge_id] = sorted(spans)

    def governs(self, edge_id):
        return edge_id in self.windows

    def green_windows(self, edge_id):
        if edge_id not in self.windows:
            raise NetworkError(f"edge {edge_id} not governed by this signal program")
        return list(self.windows[edge_id])

    def is_green(self, edge_id, t):
        phase = (t - self.offset) % self.cycle
        return any(a <= phase < b for a, b in self.green_windows(edge_id))

    def red_intervals(self, edge_id):
        """Maximal red gaps for an edge, as durations (wrap-around merged)."""
        spans = self.green_windows(edge_id)
        gaps = []
        # gap between consecutive green windows
        for (_, end), (start, _) in zip(spans, spans[1:]):
            if start > end:
                gaps.append(start - end)
        # wrap-around gap from last green end to first green start
        wrap = (self.cycle - spans[-1][1]) + spans[0][0]
        if wrap > 0:
            gaps.append(wrap)
        return gaps

    def __eq__(self, other):
        if not isinstance(other, SignalProgram):
            return NotImplemented
        return (
            self.cycle == other.cycle
            and self.offset == other.offset
            and self.windows == other.windows
        )

    def __repr__(self):
        return f"SignalProgram(cycle={self.cycle}, edges={sorted(self.windows)})"


class RoadNetwork:
    """Immutable directed road graph with per-junction signal programs.

    The successor map is fixed at construction: for each edge, the edges
    departing its downstream junction (including the reverse edge; u-turn
    exclusion is applied per query).
    """

    def __init__(self, junctions, edges, programs=None):
        self.junctions = {j.id: j for j in junctions}
        if len(self.junctions) != len(junctions):
            raise NetworkError("duplicate junction id")
        self.edges = {}
        for e in edges:
            if e.id in self.edges:
                raise NetworkError(f"duplicate edge id {e.id}")
            for ref in (e.from_junction, e.to_junction):
                if ref not in self.junctions:
                    raise DanglingReferenceError(
                        f"edge {e.id} references unknown junction {ref!r}"
                    )
            self.edges[e.id] = e
        self.programs = dict(programs or {})
        for jid, prog in self.programs.items():
            if jid not in self.junctions:
                raise DanglingReferenceError(f"signal references unknown junction {jid!r}")
            for eid in prog.windows:
                if eid not in self.edges:
                    raise DanglingReferenceError(
                        f"signal at {jid} references unknown edge {eid!r}"
                    )
                if self.edges[eid].to_junction != jid:
                    raise NetworkError(f"signal at {jid} lists edge {eid} that does not enter it")

        self._out = {jid: [] for jid in self.junctions}
        self._in = {jid: [] for jid in self.junctions}
        for e in self.edges.values():
            self._out[e.from_junction].append(e.id)
            self._in[e.to_junction].append(e.id)
        for lst in self._out.values():
            lst.sort()
        for lst in self._in.values():
            lst.sort()

        # every incoming edge of a signalized junction needs a green window
        for j in self.junctions.values():
            if j.signalized and self._in[j.id]:
                prog = self.programs.get(j.id)
                if prog is None:
                    raise NetworkError(f"signalized junction {j.id} has no signal program")
                missing = [eid for eid in self._in[j.id] if not prog.governs(eid)]
                if missing:
                    raise NetworkError(
                        f"signalized junction {j.id} has no green window for {missing}"
                    )

        self._reverse = {}
        by_endpoints = {(e.from_junction, e.to_junction): e.id for e in self.edges.values()}
        for e in self.edges.values():
            self._reverse[e.id] = by_endpoints.get((e.to_junction, e.from_junction))

        self._successors = {
            eid: tuple(s for s in self._out[e.to_junction] if s != eid)
            for eid, e in self.edges.items()
        }

    def edge(self, edge_id):
        try:
            return self.edges[edge_id]
        except KeyError:
            raise NetworkError(f"unknown edge id {edge_id!r}") from None

    def junction(self, junction_id):
        try:
            return self.junctions[junction_id]
        except KeyError:
            raise NetworkError(f"unknown junction id {junction_id!r}") from None

    def out_edges(self, junction_id):
        return list(self._out[junction_id])

    def in_edges(self, junction_id):
        return list(self._in[junction_id])

    def reverse_of(self, edge_id):
        self.edge(edge_id)
        return self._reverse[edge_id]

    def successors(self, edge_id, allow_uturn=False):
        """Edges reachable through the downstream junction of `edge_id`."""
        self.edge(edge_id)
        succ = self._successors[edge_id]
        if allow_uturn:
            return set(succ)
        rev = self._reverse[edge_id]
        return {s for s in succ if s != rev}

    def program_for_edge(self, edge_id):
        """Signal program governing the downstream end of an edge, or None."""
        e = self.edge(edge_id)
        j = self.junctions[e.to_junction]
        if not j.signalized:
            return None
        return self.programs.get(j.id)

    def is_green(self, edge_id, t):
        prog = self.program_for_edge(edge_id)
        return True if prog is None else prog.is_green(edge_id, t)

    def signalized_downstream(self, edge_id):
        return self.junctions[self.edge(edge_id).to_junction].signalized

    def strongly_connected_junctions(self):
        """True if every junction can reach every other along directed edges."""

        def sweep(adjacency):
            start = next(iter(self.junctions), None)
            if start is None:
                return True
            seen = {start}
            stack = [start]
            while stack:
                j = stack.pop()
                for eid in adjacency[j]:
                    e = self.edges[eid]
                    nxt = e.to_junction if adjacency is self._out else e.from_junction
                    if nxt not in seen:
                        seen.add(nxt)
                        stack.append(nxt)
            return len(seen) == len(self.junctions)

        return sweep(self._out) and sweep(self._in)

    def __eq__(self, other):
        if not isinstance(other, RoadNetwork):
            return NotImplemented
        return (
            self.junctions == other.junctions
            and self.edges == other.edges
            and self.programs == other.programs
        )

    def __repr__(self):
        return f"RoadNetwork(|V|={len(self.junctions)}, |E|={len(self.edges)})"


# ---------------------------------------------------------------------------
# text format


def parse_network(text):
    """Parse the line-oriented `network v1` format into a RoadNetwork.

    Lines: `junction <id> <x> <y> <signalized:0|1>`,
    `edge <id> <from> <to> <length_m> <vmax_mps> <lanes>`,
    `signal <junction_id> <cycle_s> <edge>:<green_start>-<green_end> ...`.
    `#` starts a comment.
    """
    junctions = []
    edges = []
    programs = {}
    saw_header = False

    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        fields = line.split()
        if not saw_header:
            if fields != ["network", "v1"]:
                raise NetworkFormatError(
                    f"expected header 'network v1', got {line!r}", line=lineno, column=1
                )
            saw_header = True
            continue

        kind = fields[0]
        if kind == "junction":
            if len(fields) != 5:
                raise NetworkFormatError(
                    f"junction line needs 4 fields, got {len(fields) - 1}", line=lineno, column=1
                )
            jid, xs, ys, sig = fields[1:]
            try:
                junctions.append(
                    Junction(jid, float(xs), float(ys), signalized=_parse_flag(sig))
                )
            except (ValueError, NetworkError) as exc:
                raise NetworkFormatError(str(exc), line=lineno, column=2) from None
        elif kind == "edge":
            if len(fields) != 7:
                raise NetworkFormatError(
                    f"edge line needs 6 fields, got {len(fields) - 1}", line=lineno, column=1
                )
            eid, src, dst, length, vmax, lanes = fields[1:]
            try:
                edges.append(Edge(eid, src, dst, float(length), float(vmax), int(lanes)))
            except NetworkError:
                raise
            except ValueError as exc:
                raise NetworkFormatError(str(exc), line=lineno, column=2) from None
        elif kind == "signal":
            if len(fields) < 4:
                raise NetworkFormatError(
                    "signal line needs a junction, a cycle and at least one window",
                    line=lineno,
                    column=1,
                )
            jid = fields[1]
            try:
                cycle = float(fields[2])
            except ValueError:
                raise NetworkFormatError(
                    f"bad cycle {fields[2]!r}", line=lineno, column=3
                ) from None
            windows = {}
            for col, token in enumerate(fields[3:], start=4):
                try:
                    eid, span = token.split(":", 1)
                    a, b = span.split("-", 1)
                    windows.setdefault(eid, []).append((float(a), float(b)))
                except ValueError:
                    raise NetworkFormatError(
                        f"bad green window token {token!r}", line=lineno, column=col
                    ) from None
            if jid in programs:
                raise NetworkFormatError(
                    f"duplicate signal line for junction {jid}", line=lineno, column=2
                )
            programs[jid] = SignalProgram(cycle, windows)
        else:
            raise NetworkFormatError(f"unknown record {kind!r}", line=lineno, column=1)

    if not saw_header:
        raise NetworkFormatError("empty file: missing 'network v1' header", line=1, column=1)
    return RoadNetwork(junctions, edges, programs)


def _parse_flag(token):
    if token == "0":
        return False
    if token == "1":
        return True
    raise ValueError(f"expected 0 or 1, got {token!r}")


def _fmt(x):
    return repr(float(x))


def serialize_network(net):
    """Render a RoadNetwork in the `network v1` text format."""
    lines = ["network v1"]
    for j in sorted(net.junctions.values(), key=lambda j: j.id):
        lines.append(f"junction {j.id} {_fmt(j.x)} {_fmt(j.y)} {1 if j.signalized else 0}")
    for e in sorted(net.edges.values(), key=lambda e: e.id):
        lines.append(
            f"edge {e.id} {e.from_junction} {e.to_junction} "
            f"{_fmt(e.length)} {_fmt(e.v_max)} {e.lane_count}"
        )
    for jid in sorted(net.programs):
        prog = net.programs[jid]
        tokens = []
        for eid in sorted(prog.windows):
            for a, b in prog.windows[eid]:
                tokens.append(f"{eid}:{_fmt(a)}-{_fmt(b)}")
        lines.append(f"signal {jid} {_fmt(prog.cycle)} " + " ".join(tokens))
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# generators


def _col_name(c):
    if c >= len(string.ascii_uppercase):
        raise NetworkError("grid generators support at most 26 columns")
    return string.ascii_uppercase[c]


def default_signal_program(net_edges, junction_id, positions):
    """Default two-phase plan: N-S green 0-27 s, E-W green 30-57 s, 60 s cycle."""
    windows = {}
    for e in net_edges:
        if e.to_junction != junction_id:
            continue
        x0, y0 = positions[e.from_junction]
        x1, y1 = positions[e.to_junction]
        windows[e.id] = [NS_GREEN if x0 == x1 else EW_GREEN]
    return SignalProgram(DEFAULT_CYCLE, windows)


def _generate_grid(rows, cols, h_len, v_len, v_max, lanes):
    """Grid of signalized junctions with bidirectional streets and boundary stubs.

    Junctions are named <column letter><row digit> (A0 bottom-left, row index
    grows northward). Boundary stubs top<i>/bottom<i> attach above/below column
    i; left<i>/right<i> attach beside row i. Edge ids concatenate the endpoint
    names, e.g. A2B2, top1B3, D2right2.
    """
    if rows < 2 or cols < 2:
        raise NetworkError(f"grid dimensions must be >= 2, got {rows}x{cols}")

    positions = {}
    junctions = []

    def add_junction(name, x, y, signalized):
        positions[name] = (x, y)
        junctions.append(Junction(name, x, y, signalized=signalized))

    for c in range(cols):
        for r in range(rows):
            add_junction(f"{_col_name(c)}{r}", c * h_len, r * v_len, True)
    for c in range(cols):
        add_junction(f"bottom{c}", c * h_len, -v_len, False)
        add_junction(f"top{c}", c * h_len, rows * v_len, False)
    for r in range(rows):
        add_junction(f"left{r}", -h_len, r * v_len, False)
        add_junction(f"right{r}", cols * h_len, r * v_len, False)

    edges = []

    def add_street(a, b, length):
        edges.append(Edge(f"{a}{b}", a, b, length, v_max, lanes))
        edges.append(Edge(f"{b}{a}", b, a, length, v_max, lanes))

    for c in range(cols):
        for r in range(rows):
            name = f"{_col_name(c)}{r}"
            if c + 1 < cols:
                add_street(name, f"{_col_name(c + 1)}{r}", h_len)
            if r + 1 < rows:
                add_street(name, f"{_col_name(c)}{r + 1}", v_len)
    for c in range(cols):
        add_street(f"bottom{c}", f"{_col_name(c)}0", v_len)
        add_street(f"{_col_name(c)}{rows - 1}", f"top{c}", v_len)
    for r in range(rows):
        add_street(f"left{r}", f"A{r}", h_len)
        add_street(f"{_col_name(cols - 1)}{r}", f"right{r}", h_len)

    programs = {}
    for j in junctions:
        if j.signalized:
            programs[j.id] = default_signal_program(edges, j.id, positions)
    return RoadNetwork(junctions, edges, programs)


def generate_manhattan(rows, cols, v_max=DEFAULT_SPEED, lanes=DEFAULT_LANES):
    """Manhattan-style grid: 300 m east-west segments, 200 m north-south."""
    return _generate_grid(rows, cols, HORIZONTAL_LEN, VERTICAL_LEN, v_max, lanes)


def generate_grid4x4(v_max=DEFAULT_SPEED, lanes=DEFAULT_LANES):
    """4x4 grid with 16 signalized intersections; every segment 300 m."""
    return _generate_grid(4, 4, HORIZONTAL_LEN, HORIZONTAL_LEN, v_max, lanes)


def successors(net, edge_id, allow_uturn=False):
    """Module-level alias for RoadNetwork.successors."""
    return net.successors(edge_id, allow_uturn=allow_uturn)


def boundary_entry_edges(net):
    """Edges departing a stub junction (degree-2 dead ends), sorted by id."""
    return sorted(
        eid
        for eid, e in net.edges.items()
        if len(net.out_edges(e.from_junction)) == 1 and len(net.in_edges(e.from_junction)) == 1
    )


def boundary_exit_edges(net):
    """Edges entering a stub junction, sorted by id."""
    return sorted(
        eid
        for eid, e in net.edges.items()
        if len(net.out_edges(e.to_junction)) == 1 and len(net.in_edges(e.to_junction)) == 1
    )
