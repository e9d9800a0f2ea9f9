"""Command-line entry points: simulate, compare, sweep, generate-network,
and the bundled golden decision cases.

Outputs land in --out (default '.'): metrics.csv, summary.txt, and for
simulate runs decisions.log and events.log. Exit code 0 on success, nonzero
on failure or any invariant violation.
"""

from __future__ import annotations

import argparse
import dataclasses
import difflib
import sys
from pathlib import Path

from . import cases, metrics
from .gateway import BackendConfig
from .network import generate_grid4x4, generate_manhattan, serialize_network
from .sim import METHODS, SimulationError, load_scenario


def _write(out_dir, name, content):
    path = Path(out_dir) / name
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(content, encoding="utf-8")
    return path


def _load(args):
    config = load_scenario(args.scenario)
    if getattr(args, "seed", None) is not None:
        config = dataclasses.replace(config, seed=args.seed)
    backend = getattr(args, "backend", None)
    if backend is not None:
        if backend == "off":
            config = dataclasses.replace(config, backend=BackendConfig(enabled=False))
        else:
            config = dataclasses.replace(
                config,
                backend=BackendConfig(endpoint=backend, enabled=True,
                                      timeout_ms=config.backend.timeout_ms,
                                      retries=config.backend.retries),
            )
    return config


def cmd_simulate(args):
    config = _load(args)
    result = metrics.run_scenario(config)
    _write(args.out, "metrics.csv", metrics.vehicle_metrics_csv(result.records))
    _write(args.out, "decisions.log", metrics.decisions_log(result.decisions))
    _write(args.out, "events.log", metrics.events_log(result.events))
    table = metrics.summary_table([(config.method, result.summary)])
    _write(args.out, "summary.txt", table)
    print(table, end="")
    print(f"steps: {result.steps}, decisions: {len(result.decisions)}")
    return 0


def cmd_compare(args):
    config = _load(args)
    methods = [m.strip() for m in args.methods.split(",") if m.strip()]
    rows = metrics.run_comparison(config, methods, seed=args.seed)
    _write(args.out, "metrics.csv", metrics.summary_csv(rows, label_name="method"))
    table = metrics.summary_table(rows, label_name="method")
    _write(args.out, "summary.txt", table)
    print(table, end="")
    return 0


def cmd_sweep(args):
    config = _load(args)
    prs = [float(p) for p in args.pr.split(",") if p.strip()]
    rows = metrics.pr_sweep(config, prs)
    labelled = [(f"{pr:g} (n_av={n_av})", summary) for pr, n_av, summary in rows]
    csv_rows = [(f"{pr:g}", summary) for pr, _, summary in rows]
    _write(args.out, "metrics.csv", metrics.summary_csv(csv_rows, label_name="pr"))
    table = metrics.summary_table(labelled, label_name="pr")
    _write(args.out, "summary.txt", table)
    print(table, end="")
    return 0


def cmd_generate_network(args):
    if args.kind == "manhattan":
        net = generate_manhattan(args.rows, args.cols)
    else:
        net = generate_grid4x4()
    text = serialize_network(net)
    if args.out:
        path = _write(".", args.out, text)
        print(f"wrote {path} ({len(net.junctions)} junctions, {len(net.edges)} edges)")
    else:
        print(text, end="")
    return 0


def cmd_golden(args):
    failures = 0
    for case, record, ok in cases.run_reference_cases():
        status = "PASS" if ok else "FAIL"
        print(f"[{status}] {case['name']}: chose path{record.chosen_index + 1}")
        print(record.rationale)
        if not ok:
            failures += 1
            diff = difflib.unified_diff(
                case["expected_rationale"].splitlines(),
                record.rationale.splitlines(),
                fromfile="expected",
                tofile="actual",
                lineterm="",
            )
            print("\n".join(diff))
        print()
    return 1 if failures else 0


def build_parser():
    parser = argparse.ArgumentParser(prog="dynroute", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run one scenario and emit metrics")
    p.add_argument("scenario")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--backend", default=None,
                   help="decision-service URL, or 'off' to force the built-in engine")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("compare", help="run several methods on identical demand")
    p.add_argument("scenario")
    p.add_argument("--methods", required=True,
                   help="comma list from: " + ",".join(METHODS))
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="run a scenario across penetration rates")
    p.add_argument("scenario")
    p.add_argument("--pr", required=True, help="comma list of fractions, e.g. 0.05,0.10")
    p.add_argument("--out", default=".")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("generate-network", help="write a synthetic grid network file")
    p.add_argument("kind", choices=["manhattan", "grid4x4"])
    p.add_argument("--rows", type=int, default=4)
    p.add_argument("--cols", type=int, default=4)
    p.add_argument("--out", default=None)
    p.set_defaults(func=cmd_generate_network)

    p = sub.add_parser("golden-appendix-a",
                       help="run the bundled reference decision cases and diff rationales")
    p.set_defaults(func=cmd_golden)
    return parser


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SimulationError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
