"""Reference decision-service stub: picks the admissible candidate with the
lowest predicted travel time.

Implements the wire contract of `gateway`: POST / with
{prompt, candidates: [{id, edges, predicted_time_s, light_count}],
constraints: {mandatory, forbidden}} and a 200 {chosen, rationale} reply.

Run standalone with `python -m dynroute.stub_server --port 8088`.
"""

from __future__ import annotations

import argparse
import json
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer


def pick_candidate(payload):
    """Lowest predicted-time candidate satisfying the request constraints."""
    constraints = payload.get("constraints", {})
    mandatory = set(constraints.get("mandatory", []))
    forbidden = set(constraints.get("forbidden", []))
    admissible = []
    for cand in payload["candidates"]:
        edges = set(cand["edges"])
        if mandatory <= edges and not (forbidden & edges):
            admissible.append(cand)
    if not admissible:
        return None
    best = min(admissible, key=lambda c: (c["predicted_time_s"], c["id"]))
    return {
        "chosen": best["id"],
        "rationale": (
            f"{best['id']} has the lowest predicted travel time "
            f"({best['predicted_time_s']:.1f} s) among admissible candidates."
        ),
    }


class StubHandler(BaseHTTPRequestHandler):
    def do_POST(self):
        length = int(self.headers.get("Content-Length", 0))
        try:
            payload = json.loads(self.rfile.read(length).decode("utf-8"))
            reply = pick_candidate(payload)
        except (ValueError, KeyError, TypeError):
            self.send_error(400, "bad request body")
            return
        if reply is None:
            self.send_error(409, "no admissible candidate")
            return
        body = json.dumps(reply).encode("utf-8")
        self.send_response(200)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def log_message(self, fmt, *args):  # keep test output quiet
        pass


def make_server(host="127.0.0.1", port=0):
    """ThreadingHTTPServer bound to (host, port); port 0 picks a free one."""
    return ThreadingHTTPServer((host, port), StubHandler)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8088)
    args = parser.parse_args(argv)
    server = make_server(args.host, args.port)
    print(f"decision stub listening on http://{args.host}:{server.server_address[1]}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        pass


if __name__ == "__main__":
    main()
