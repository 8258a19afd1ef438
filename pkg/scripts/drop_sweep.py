"""Delivery ratio of the line demo's sensor flow as the relay's drop probability grows.

    python3 scripts/drop_sweep.py --packets 2000 --steps 11 --csv sweep.csv
"""

import argparse
import csv
import json
import sys

from aras.cli import demo_path
from aras.network import build_network, route
from aras.pipeline import run_pipeline
from aras.scenario import scenario_from_dict


def sweep(packets: int, steps: int, seed: int | None):
    base = json.loads(demo_path("baseline").read_text())
    f0 = {**base["flows"][0], "packets": packets}
    base["flows"] = [f0]
    if seed is not None:
        base["master_seed"] = seed
    relay = route(build_network(scenario_from_dict(base)), f0["src"], f0["dst"])[1]
    rows = []
    for i in range(steps):
        p = i / (steps - 1) if steps > 1 else 1.0
        doc = {**base, "attacks": [{"kind": "ip-dropping", "target": relay, "drop_prob": p}]}
        m = run_pipeline(scenario_from_dict(doc), []).flow_metrics()[0]
        rows.append({"drop_prob": p, "Pt": m["Pt"], "Pd": m["Pd"], "Pl": m["Pl"],
                     "pdr": m["pdr"], "dr": m["dr"]})
    return relay, rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--packets", type=int, default=1000)
    ap.add_argument("--steps", type=int, default=11)
    ap.add_argument("--seed", type=int)
    ap.add_argument("--csv", help="also write the table to this file")
    args = ap.parse_args(argv)
    relay, rows = sweep(args.packets, args.steps, args.seed)
    print(f"relay {relay}, {args.packets} packets per point")
    print(f"{'drop_prob':>9} {'Pd':>6} {'Pl':>6} {'PDR':>7} {'DR':>7}")
    for r in rows:
        print(f"{r['drop_prob']:9.2f} {r['Pd']:6d} {r['Pl']:6d} {r['pdr']:7.4f} {r['dr']:7.4f}")
    if args.csv:
        with open(args.csv, "w", newline="") as fh:
            w = csv.DictWriter(fh, fieldnames=list(rows[0]))
            w.writeheader()
            w.writerows(rows)
    return 0


if __name__ == "__main__":
    sys.exit(main())
