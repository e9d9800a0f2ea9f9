"""Per-vehicle and aggregate trip metrics, scenario runners for the three
routing methods, and CSV/table emitters.

Travel time runs from the requested departure, duration from the actual
network entry; waiting accumulates below-threshold-speed time and time loss
is duration beyond the free-flow ideal of the traversed route. Averages
cover completed trips only; incompletes are counted, never averaged in.
"""

from __future__ import annotations

from dataclasses import dataclass

from .sim import METHODS, build_simulation


class IncompleteTripError(ValueError):
    pass


@dataclass(frozen=True)
class VehicleRecord:
    id: str
    kind: str
    depart_time: float
    inserted_time: float
    arrival_time: float  # None while the trip is incomplete
    route: tuple
    route_length: float
    waiting: float
    ideal_time: float

    @property
    def completed(self):
        return self.arrival_time is not None


@dataclass(frozen=True)
class SummaryMetrics:
    avg_travel_time: float
    avg_duration: float
    avg_waiting: float
    avg_time_loss: float
    completed: int
    incomplete: int

    def as_row(self):
        return (
            self.avg_travel_time, self.avg_duration, self.avg_waiting,
            self.avg_time_loss, self.completed, self.incomplete,
        )


def record_from_vehicle(v):
    return VehicleRecord(
        id=v.id,
        kind=v.kind,
        depart_time=v.depart_time,
        inserted_time=v.inserted_time,
        arrival_time=v.arrival_time,
        route=tuple(v.traversed),
        route_length=v.route_length,
        waiting=v.waiting,
        ideal_time=v.ideal_time,
    )


def vehicle_metrics(record):
    """(travel_time, duration, waiting, time_loss) of a completed trip."""
    if record.arrival_time is None or record.inserted_time is None:
        raise IncompleteTripError(f"{record.id} never finished its trip")
    travel = record.arrival_time - record.depart_time
    duration = record.arrival_time - record.inserted_time
    return travel, duration, record.waiting, duration - record.ideal_time


def aggregate(records):
    """Arithmetic means over completed trips; incompletes counted apart."""
    done = [r for r in records if r.completed]
    incomplete = len(records) - len(done)
    if not done:
        return SummaryMetrics(0.0, 0.0, 0.0, 0.0, 0, incomplete)
    per = [vehicle_metrics(r) for r in done]
    n = len(per)
    sums = [sum(vals[i] for vals in per) for i in range(4)]
    return SummaryMetrics(
        sums[0] / n, sums[1] / n, sums[2] / n, sums[3] / n, n, incomplete
    )


@dataclass
class RunResult:
    config: object
    records: list
    decisions: list
    events: list
    summary: SummaryMetrics
    steps: int

    @property
    def av_records(self):
        return [r for r in self.records if r.kind == "AV"]


def run_scenario(config, method=None, seed=None, pr=None, net=None):
    """Simulate one scenario variant to completion and summarize it."""
    sim = build_simulation(config, net=net, method=method, seed=seed, pr=pr)
    sim.run()
    records = [record_from_vehicle(v) for v in sim.vehicles]
    return RunResult(
        config=sim.config,
        records=records,
        decisions=sim.decisions,
        events=sim.events,
        summary=aggregate(records),
        steps=sim.steps,
    )


def run_dynamic_dijkstra_baseline(config, seed=None, pr=None, net=None):
    """The per-junction full-reroute baseline on the same scenario."""
    return run_scenario(config, method="dynamic_dijkstra", seed=seed, pr=pr, net=net)


def run_comparison(config, methods, seed=None, net=None):
    """One summary row per method on identical demand and seed."""
    for m in methods:
        if m not in METHODS:
            raise ValueError(f"unknown method {m!r}; expected one of {METHODS}")
    rows = []
    for m in methods:
        result = run_scenario(config, method=m, seed=seed, net=net)
        rows.append((m, result.summary))
    return rows


def pr_sweep(config, prs, net=None):
    """Summary per penetration rate; (pr, n_av, SummaryMetrics) rows."""
    rows = []
    for pr in prs:
        result = run_scenario(config, pr=pr, net=net)
        n_av = sum(1 for r in result.records if r.kind == "AV")
        rows.append((pr, n_av, result.summary))
    return rows


# ---------------------------------------------------------------------------
# emitters

_VEHICLE_HEADER = (
    "id,kind,depart_time,inserted_time,arrival_time,travel_time,duration,"
    "waiting,time_loss,route_length,ideal_time,completed"
)
_SUMMARY_FIELDS = (
    "avg_travel_time", "avg_duration", "avg_waiting", "avg_time_loss",
    "completed", "incomplete",
)


def _num(x):
    if x is None:
        return ""
    return repr(float(x))


def vehicle_metrics_csv(records):
    """Per-vehicle metrics table; floats use repr so the CSV re-parses to the
    in-memory values exactly."""
    lines = [_VEHICLE_HEADER]
    for r in records:
        if r.completed:
            travel, duration, waiting, loss = vehicle_metrics(r)
        else:
            travel = duration = loss = None
            waiting = r.waiting
        lines.append(
            ",".join(
                [
                    r.id, r.kind, _num(r.depart_time), _num(r.inserted_time),
                    _num(r.arrival_time), _num(travel), _num(duration),
                    _num(waiting), _num(loss), _num(r.route_length),
                    _num(r.ideal_time), "1" if r.completed else "0",
                ]
            )
        )
    return "\n".join(lines) + "\n"


def summary_csv(rows, label_name="method"):
    """Label + SummaryMetrics per row, e.g. per method or penetration rate."""
    lines = [label_name + "," + ",".join(_SUMMARY_FIELDS)]
    for label, summary in rows:
        cells = [str(label)]
        for value in summary.as_row():
            cells.append(_num(value) if isinstance(value, float) else str(value))
        lines.append(",".join(cells))
    return "\n".join(lines) + "\n"


def summary_table(rows, label_name="method"):
    """Human-readable aligned table of summary rows."""
    headers = [label_name, "travel_time", "duration", "waiting", "time_loss",
               "completed", "incomplete"]
    body = []
    for label, s in rows:
        body.append(
            [str(label)]
            + [f"{v:.2f}" for v in s.as_row()[:4]]
            + [str(s.completed), str(s.incomplete)]
        )
    widths = [max(len(h), *(len(r[i]) for r in body)) if body else len(h)
              for i, h in enumerate(headers)]
    fmt = "  ".join("{:>%d}" % w for w in widths)
    out = [fmt.format(*headers)]
    out += [fmt.format(*row) for row in body]
    return "\n".join(out) + "\n"


def decisions_log(decisions):
    return "".join(rec.to_json_line() + "\n" for rec in decisions)


def events_log(events):
    return "".join(line + "\n" for line in events)
