"""Per-flow delivery in the mesh demo with no attack, sinkhole only, and sinkhole plus drop.

    python3 scripts/sinkhole_compare.py
"""

import argparse
import json
import sys

from aras.attacks import flows_through, sinkhole_activate
from aras.cli import demo_path
from aras.network import build_network
from aras.pipeline import run_pipeline
from aras.scenario import scenario_from_dict

VARIANTS = ("none", "sinkhole", "sinkhole+drop")


def variant_doc(base: dict, variant: str) -> dict:
    attacks = base["attacks"]
    if variant == "none":
        attacks = []
    elif variant == "sinkhole":
        attacks = [a for a in attacks if a["kind"] == "sinkhole"]
    return {**base, "attacks": attacks}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int)
    args = ap.parse_args(argv)
    base = json.loads(demo_path("sinkhole").read_text())
    if args.seed is not None:
        base["master_seed"] = args.seed
    s = scenario_from_dict(base)
    cfg = next(a for a in s.attacks if a.kind == "sinkhole")
    net = build_network(s)
    before = flows_through(net, s.flows, cfg.target)
    sinkhole_activate(net, cfg)
    after = flows_through(net, s.flows, cfg.target)
    print(f"flows through {cfg.target}: {sum(before)}/{len(before)} before, "
          f"{sum(after)}/{len(after)} after activation")

    pdrs = {v: [m["pdr"] for m in run_pipeline(scenario_from_dict(variant_doc(base, v)),
                                               []).flow_metrics()]
            for v in VARIANTS}
    print(f"{'flow':<16} {'attracted':>9} " + " ".join(f"{v:>14}" for v in VARIANTS))
    for i, f in enumerate(s.flows):
        cells = " ".join(f"{pdrs[v][i]:14.4f}" for v in VARIANTS)
        print(f"{f.src + '->' + f.dst:<16} {str(after[i]):>9} {cells}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
