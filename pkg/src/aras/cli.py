"""Command-line entry point: ``aras validate | run | compare | demos``."""

from __future__ import annotations

import argparse
import dataclasses
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ArasError
from .pipeline import PHASES, close_phases, run_pipeline
from .report import compare_reports, emit_run_report, load_report
from .scenario import Scenario, load_scenario, load_scenario_file

DEMOS = ("baseline", "ip-dropping", "sinkhole")


@dataclass
class RunOptions:
    scenario: str
    out: Path
    seed: int | None = None
    deterministic: bool = False
    phases: tuple[str, ...] = PHASES
    until_us: int | None = None


def demo_path(name: str):
    return resources.files("aras.scenarios").joinpath(f"{name}.json")


def open_scenario(ref: str) -> Scenario:
    """Load a scenario from a path, or a bundled one written as ``demo:<name>``."""
    if ref.startswith("demo:"):
        name = ref[5:]
        if name not in DEMOS:
            raise ArasError(f"unknown demo {name!r}; choose from {list(DEMOS)}")
        return load_scenario(demo_path(name).read_bytes())
    return load_scenario_file(ref)


def execute(opts: RunOptions) -> str:
    scenario = open_scenario(opts.scenario)
    if opts.seed is not None:
        scenario = dataclasses.replace(scenario, master_seed=opts.seed)
    result = run_pipeline(scenario, opts.phases, opts.until_us)
    emit_run_report(result, opts.out, opts.deterministic)
    lines = [f"scenario {scenario.name} (seed {scenario.master_seed}) -> {opts.out}",
             f"  events {result.kernel.events_executed}, clock {result.kernel.clock} us"]
    for m in result.flow_metrics():
        pdr = "n/a" if m["pdr"] is None else f"{m['pdr']:.4f}"
        dr = "n/a" if m["dr"] is None else f"{m['dr']:.4f}"
        lines.append(f"  flow {m['flow']} {m['src']}->{m['dst']}: "
                     f"Pt={m['Pt']} Pd={m['Pd']} Pl={m['Pl']} PDR={pdr} DR={dr}")
    lines.append(f"  assets {len(result.inventory)}, findings {len(result.findings)}, "
                 f"threats {len(result.threats)}, anomalies {len(result.anomalies)}")
    for i, e in enumerate(result.risk_register[:5], start=1):
        lines.append(f"  risk #{i} {e.scenario.threat_name} @ {e.scenario.asset}: "
                     f"score {e.risk_score}/{e.score_max} -> {e.mitigation}")
    return "\n".join(lines)


def cmd_validate(args) -> int:
    try:
        s = open_scenario(args.scenario)
    except OSError as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return 1
    except ArasError as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return 1
    print(f"ok: {s.name}: {len(s.nodes)} nodes, {len(s.links)} links, "
          f"{len(s.flows)} flows, {len(s.attacks)} attacks")
    return 0


def cmd_run(args) -> int:
    try:
        phases = close_phases(args.phases.split(",") if args.phases else None)
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    out = Path(args.out or os.environ.get("ARAS_OUT") or "aras-out")
    refs = args.scenario
    jobs = []
    for ref in refs:
        target = out
        if len(refs) > 1:
            target = out / Path(ref.replace("demo:", "")).stem
        jobs.append(RunOptions(ref, target, args.seed, args.deterministic, phases,
                               args.until_us))
    status = 0
    if args.jobs > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            futures = [pool.submit(execute, j) for j in jobs]
            for job, fut in zip(jobs, futures):
                status |= _report_outcome(job, fut.result)
    else:
        for job in jobs:
            status |= _report_outcome(job, lambda job=job: execute(job))
    return status


def _report_outcome(job: RunOptions, produce) -> int:
    try:
        print(produce())
        return 0
    except (ArasError, OSError) as exc:
        print(f"error: {job.scenario}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1


def cmd_compare(args) -> int:
    try:
        delta = compare_reports(load_report(args.baseline), load_report(args.attacked))
    except (ArasError, OSError) as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 1
    for f in delta["flows"]:
        d = "n/a" if f["delta_pdr"] is None else f"{f['delta_pdr']:+.4f}"
        print(f"flow {f['flow']} {f['src']}->{f['dst']}: PDR {f['baseline_pdr']} -> "
              f"{f['attacked_pdr']} (delta {d})")
    if delta["new_risks"]:
        print("new risks:")
        for e in delta["new_risks"]:
            print(f"  {e['threat_name']} @ {e['asset']}: score {e['risk_score']} "
                  f"-> {e['mitigation']}")
    else:
        print("no new risks")
    return 0


def cmd_demos(args) -> int:
    for name in DEMOS:
        print(f"demo:{name}\t{demo_path(name)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aras", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario document")
    p.add_argument("scenario")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", help="simulate and assess one or more scenarios")
    p.add_argument("--scenario", action="append", required=True,
                   help="scenario file or demo:<name>; repeat for a batch")
    p.add_argument("--out", help="output directory (default: $ARAS_OUT or ./aras-out)")
    p.add_argument("--seed", type=int, help="override the scenario master seed")
    p.add_argument("--deterministic", action="store_true",
                   help="omit the generated_at timestamp so outputs are byte-stable")
    p.add_argument("--phases", help=f"comma-separated subset of {','.join(PHASES)}")
    p.add_argument("--until-us", type=int, help="simulation horizon in microseconds")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for batches")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("compare", help="diff a baseline report against an attacked one")
    p.add_argument("baseline")
    p.add_argument("attacked")
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("demos", help="list bundled demo scenarios")
    p.set_defaults(func=cmd_demos)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
