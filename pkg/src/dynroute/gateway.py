"""Client for an external decision service, with prompt construction,
verdict validation, and a fallback to the built-in Bayesian engine.

The service is an interchangeable HTTP endpoint: POST a JSON body with the
prompt, the candidate manifest, and the constraints; receive
{"chosen": "<candidate id>", "rationale": "..."}. Any transport or
validation failure falls back to the built-in engine so a misbehaving
service can never stall or derail a vehicle.
"""

from __future__ import annotations

import dataclasses
import json
import socket
import urllib.error
import urllib.request
from dataclasses import dataclass

from . import decision
from .routing import RouteConstraints


class BackendError(Exception):
    """Base for decision-service failures."""


class BackendTimeoutError(BackendError):
    pass


class BackendConnectionError(BackendError):
    """Connection failure or non-success HTTP status."""


class MalformedResponseError(BackendError):
    pass


class VerdictValidationError(BackendError):
    """Verdict names an unknown or inadmissible candidate."""


@dataclass(frozen=True)
class BackendConfig:
    endpoint: str = ""
    timeout_ms: float = 2000.0
    enabled: bool = False
    retries: int = 0

    def __post_init__(self):
        if self.timeout_ms <= 0:
            raise ValueError(f"timeout_ms must be > 0, got {self.timeout_ms}")
        if self.retries < 0:
            raise ValueError("retries must be >= 0")


@dataclass(frozen=True)
class ManifestEntry:
    id: str
    edges: tuple
    predicted_time_s: float
    light_count: int
    admissible: bool


@dataclass(frozen=True)
class DecisionPrompt:
    text: str
    candidate_manifest: tuple


@dataclass(frozen=True)
class BackendVerdict:
    chosen_candidate_id: str
    rationale: str


def candidate_label(index):
    return f"path{index + 1}"


def build_prompt(vehicle_id, junction, evals, constraints):
    """Render the arrival-and-alternatives prompt for one decision point.

    Deterministic for identical inputs; every manifest candidate's edge list,
    predicted time and light count appear verbatim in the text.
    """
    if not evals:
        raise ValueError("at least one candidate required")
    manifest = tuple(
        ManifestEntry(
            id=candidate_label(i),
            edges=tuple(ev.path.path.edges),
            predicted_time_s=ev.predicted_time,
            light_count=ev.light_count,
            admissible=ev.admissible,
        )
        for i, ev in enumerate(evals)
    )
    props = "traffic_light_right_on_red" if junction.signalized else "priority"
    target = manifest[0].edges[-1]
    lines = [
        f"Vehicle {vehicle_id} has arrived at intersection {junction.id}. "
        f"The current properties of intersection {junction.id} are {props}, "
        f"and the node ID is {junction.id}, with the target edge being {target}.",
        "",
        "There are several alternative paths available:",
    ]
    for i, entry in enumerate(manifest):
        edges_text = "[" + ", ".join(entry.edges) + "]"
        lines.append(
            f"Alternative path {i + 1}: {edges_text} "
            f"(predicted travel time {entry.predicted_time_s!r} s, "
            f"{entry.light_count} traffic lights)"
        )
    if constraints.forbidden_edges:
        lines.append("Error edges: " + ", ".join(sorted(constraints.forbidden_edges)))
    if constraints.mandatory_edges:
        lines.append("Mandatory path: " + ", ".join(sorted(constraints.mandatory_edges)))
    lines.append(
        "Respond with the chosen path id (path1..path"
        f"{len(manifest)}) and a short rationale."
    )
    return DecisionPrompt(text="\n".join(lines), candidate_manifest=manifest)


def _wire_request(prompt, constraints):
    return {
        "prompt": prompt.text,
        "candidates": [
            {
                "id": e.id,
                "edges": list(e.edges),
                "predicted_time_s": e.predicted_time_s,
                "light_count": e.light_count,
            }
            for e in prompt.candidate_manifest
        ],
        "constraints": {
            "mandatory": sorted(constraints.mandatory_edges),
            "forbidden": sorted(constraints.forbidden_edges),
        },
    }


def query_backend(prompt, config, constraints=None):
    """POST the decision request; one retry per config.retries on transport
    failures. Raises a typed BackendError on any failure."""
    if not config.enabled:
        raise BackendConnectionError("backend disabled")
    body = json.dumps(_wire_request(prompt, constraints or RouteConstraints())).encode("utf-8")
    last_error = None
    for _ in range(config.retries + 1):
        try:
            return _post_once(config, body)
        except (BackendTimeoutError, BackendConnectionError) as exc:
            last_error = exc
    raise last_error


def _post_once(config, body):
    req = urllib.request.Request(
        config.endpoint, data=body, headers={"Content-Type": "application/json"}, method="POST"
    )
    try:
        with urllib.request.urlopen(req, timeout=config.timeout_ms / 1000.0) as resp:
            if resp.status != 200:
                raise BackendConnectionError(f"status {resp.status}")
            raw = resp.read()
    except BackendError:
        raise
    except urllib.error.HTTPError as exc:
        raise BackendConnectionError(f"status {exc.code}") from exc
    except (socket.timeout, TimeoutError) as exc:
        raise BackendTimeoutError(str(exc)) from exc
    except urllib.error.URLError as exc:
        if isinstance(exc.reason, (socket.timeout, TimeoutError)):
            raise BackendTimeoutError(str(exc)) from exc
        raise BackendConnectionError(str(exc)) from exc
    except OSError as exc:
        raise BackendConnectionError(str(exc)) from exc
    try:
        payload = json.loads(raw.decode("utf-8"))
        chosen = payload["chosen"]
        rationale = payload.get("rationale", "")
        if not isinstance(chosen, str) or not isinstance(rationale, str):
            raise TypeError("wrong field types")
    except (ValueError, KeyError, TypeError, UnicodeDecodeError) as exc:
        raise MalformedResponseError(f"unparsable response body: {exc}") from exc
    return BackendVerdict(chosen_candidate_id=chosen, rationale=rationale)


def validate_verdict(verdict, manifest):
    """Index of the manifest candidate the verdict picked; rejects ids that
    are unknown or inadmissible."""
    for i, entry in enumerate(manifest):
        if entry.id == verdict.chosen_candidate_id:
            if not entry.admissible:
                raise VerdictValidationError(
                    f"backend chose inadmissible candidate {entry.id}"
                )
            return i
    raise VerdictValidationError(
        f"backend chose unknown candidate {verdict.chosen_candidate_id!r}"
    )


def decide(vehicle_id, junction, evals, constraints, prior, config, time=0.0):
    """Route choice via the backend when enabled, else the built-in engine.

    Every backend failure (transport, parse, validation) silently falls back;
    the record's `engine` field says who actually decided.
    """
    builtin = decision.choose(
        evals, prior, constraints, vehicle_id=vehicle_id, junction_id=junction.id, time=time
    )
    if not config.enabled:
        return builtin
    try:
        prompt = build_prompt(vehicle_id, junction, evals, constraints)
        verdict = query_backend(prompt, config, constraints)
        chosen = validate_verdict(verdict, prompt.candidate_manifest)
    except BackendError:
        return dataclasses.replace(builtin, engine="fallback")
    record = dataclasses.replace(builtin, chosen_index=chosen, engine="backend")
    rationale = verdict.rationale or decision.render_rationale(record)
    return dataclasses.replace(record, rationale=rationale)
