"""Bayesian route choice over candidate paths, with hard-constraint handling,
prior maintenance, and human-readable rationale rendering.

Candidates are scored by a travel-time/light-count likelihood, combined with
a prior over candidate ranks via Bayes' rule, and the admissible candidate
with the highest posterior wins. Mandatory and forbidden edges are filters,
never soft penalties.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass, field

from .routing import CostedPath, NoAdmissibleCandidateError, RouteConstraints

TIME_SCALE = 60.0  # s of predicted-time gap per e-fold likelihood drop
LIGHT_DISCOUNT = 0.9  # likelihood factor per extra traffic light
FORGETTING = 0.95  # prior retained per update
PRIOR_FLOOR = 1e-6
GOOD_OUTCOME_SLACK = 1.1  # realized within 10% of predicted counts as good


@dataclass(frozen=True)
class CandidateEvaluation:
    path: CostedPath
    predicted_time: float
    light_count: int
    admissible: bool
    violations: tuple = ()

    def __post_init__(self):
        if self.admissible != (len(self.violations) == 0):
            raise ValueError("admissible flag inconsistent with violations")


def evaluate_candidates(candidates, constraints):
    """Flag each costed path against the constraints, keeping the order."""
    out = []
    for cp in candidates:
        violations = tuple(constraints.violations(cp.path.edges))
        out.append(
            CandidateEvaluation(
                path=cp,
                predicted_time=cp.cost,
                light_count=cp.light_count,
                admissible=not violations,
                violations=violations,
            )
        )
    return out


class PathPrior:
    """Probability over candidate ranks (rank 1 = cheapest predicted)."""

    def __init__(self, probs):
        probs = [float(p) for p in probs]
        if not probs:
            raise ValueError("prior must be non-empty")
        if any(p <= 0 for p in probs):
            raise ValueError("prior must be strictly positive")
        if abs(sum(probs) - 1.0) > 1e-9:
            raise ValueError(f"prior must sum to 1, got {sum(probs)}")
        self.probs = tuple(probs)

    @classmethod
    def uniform(cls, k):
        return cls([1.0 / k] * k)

    def for_candidates(self, n):
        """Prior truncated/renormalized to the first n ranks."""
        if n > len(self.probs):
            raise ValueError(f"prior covers {len(self.probs)} ranks, need {n}")
        head = self.probs[:n]
        total = sum(head)
        return [p / total for p in head]

    def __len__(self):
        return len(self.probs)

    def __repr__(self):
        return f"PathPrior({[round(p, 4) for p in self.probs]})"


def likelihood(evals, time_scale=TIME_SCALE, light_discount=LIGHT_DISCOUNT):
    """Evidence weight per candidate; inadmissible candidates weigh zero."""
    admissible = [ev for ev in evals if ev.admissible]
    if not admissible:
        raise NoAdmissibleCandidateError("no admissible candidate to score")
    t_min = min(ev.predicted_time for ev in admissible)
    l_min = min(ev.light_count for ev in admissible)
    weights = []
    for ev in evals:
        if not ev.admissible:
            weights.append(0.0)
            continue
        weights.append(
            math.exp(-(ev.predicted_time - t_min) / time_scale)
            * light_discount ** (ev.light_count - l_min)
        )
    return weights


def posterior(prior, weights):
    """Bayes update: normalize prior x likelihood."""
    probs = prior.for_candidates(len(weights)) if isinstance(prior, PathPrior) else list(prior)
    if len(probs) != len(weights):
        raise ValueError("prior and likelihood lengths differ")
    joint = [p * w for p, w in zip(probs, weights)]
    total = sum(joint)
    if total <= 0:
        raise NoAdmissibleCandidateError("all-zero evidence: no candidate has support")
    return [j / total for j in joint]


@dataclass(frozen=True)
class DecisionRecord:
    vehicle_id: str
    junction_id: str
    candidates: tuple
    posterior: tuple
    chosen_index: int
    rationale: str
    constraints: RouteConstraints = field(default_factory=RouteConstraints)
    engine: str = "builtin"
    time: float = 0.0

    @property
    def chosen(self):
        return self.candidates[self.chosen_index]

    def to_json_line(self):
        return json.dumps(
            {
                "time": self.time,
                "vehicle": self.vehicle_id,
                "junction": self.junction_id,
                "engine": self.engine,
                "chosen": f"path{self.chosen_index + 1}",
                "chosen_edges": list(self.chosen.path.path.edges),
                "posterior": [round(p, 6) for p in self.posterior],
                "candidates": [list(ev.path.path.edges) for ev in self.candidates],
                "rationale": self.rationale,
            },
            sort_keys=True,
        )


def _ordering_line(label, values):
    """Render e.g. 'Total time: path2 < path1 = path3' from per-index values."""
    order = sorted(range(len(values)), key=lambda i: (values[i], i))
    parts = [f"path{order[0] + 1}"]
    for prev, cur in zip(order, order[1:]):
        sep = " = " if values[cur] == values[prev] else " < "
        parts.append(sep + f"path{cur + 1}")
    return f"{label}: " + "".join(parts)


def render_rationale(record):
    """Fixed-format explanation: orderings, constraint lines, final pick."""
    evals = record.candidates
    lines = [
        _ordering_line("Total time", [ev.predicted_time for ev in evals]),
        _ordering_line("Traffic light count", [ev.light_count for ev in evals]),
    ]
    forbidden = sorted(record.constraints.forbidden_edges)
    lines.append("Error edges: " + (", ".join(forbidden) if forbidden else "none"))
    mandatory = sorted(record.constraints.mandatory_edges)
    if mandatory:
        lines.append("Mandatory path: " + ", ".join(mandatory))
    lines.append(
        f"Taking all factors into consideration, path{record.chosen_index + 1} is selected."
    )
    return "\n".join(lines)


def choose(evals, prior, constraints=None, vehicle_id="", junction_id="", time=0.0):
    """Pick the admissible candidate with the highest posterior.

    Ties break toward lower predicted time, then fewer lights, then the
    lexicographically smallest edge sequence. Raises when nothing is
    admissible; the caller owns the fallback.
    """
    evals = list(evals)
    constraints = constraints if constraints is not None else RouteConstraints()
    weights = likelihood(evals)
    post = posterior(prior, weights)
    candidates = [
        (-post[i], ev.predicted_time, ev.light_count, ev.path.path.edges, i)
        for i, ev in enumerate(evals)
        if ev.admissible
    ]
    chosen = min(candidates)[-1]
    record = DecisionRecord(
        vehicle_id=vehicle_id,
        junction_id=junction_id,
        candidates=tuple(evals),
        posterior=tuple(post),
        chosen_index=chosen,
        rationale="",
        constraints=constraints,
        engine="builtin",
        time=time,
    )
    return dataclasses.replace(record, rationale=render_rationale(record))


def update_prior(prior, chosen_index, realized_time, predicted_time):
    """Exponential-forgetting update of the rank prior after a completed leg.

    A leg that arrived within the slack of its prediction reinforces the
    chosen rank; a blown prediction shifts mass to the other ranks.
    """
    if realized_time <= 0:
        raise ValueError(f"realized_time must be > 0, got {realized_time}")
    k = len(prior)
    if not 0 <= chosen_index < k:
        raise ValueError(f"chosen_index {chosen_index} out of range for {k} ranks")
    good = realized_time <= GOOD_OUTCOME_SLACK * predicted_time
    if good:
        target = [1.0 if i == chosen_index else 0.0 for i in range(k)]
    elif k == 1:
        target = [1.0]
    else:
        target = [0.0 if i == chosen_index else 1.0 / (k - 1) for i in range(k)]
    mixed = [FORGETTING * p + (1.0 - FORGETTING) * t for p, t in zip(prior.probs, target)]
    floored = [max(p, PRIOR_FLOOR) for p in mixed]
    total = sum(floored)
    return PathPrior([p / total for p in floored])
