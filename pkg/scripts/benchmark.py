"""Time explanation queries on random forests of growing size.

Prints one CSV row per (size, configuration), with mean seconds per AXp and
CXp and the mean oracle call count.  Queries past --time-limit count as inf.  Configurations switch the MaxSAT
accelerators off one at a time so their effect can be compared.

    python3 scripts/benchmark.py --variants rfmv bt --trees 10 25 50 --instances 5
"""

from __future__ import annotations

import argparse
import csv
import random
import statistics
import sys
import time
from dataclasses import replace

from texpl.explain import ExplainerConfig, ExplanationProblem, find_axp, find_cxp
from texpl.sat import SolverTimeout
from texpl.synth import random_ensemble, random_instance

CONFIGS = {
    "default": ExplainerConfig(),
    "no-stratify": ExplainerConfig(stratify=False),
    "no-early-stop": ExplainerConfig(early_termination=False),
    "no-core-reuse": ExplainerConfig(reuse_cores=False),
    "no-class-order": ExplainerConfig(class_order=False),
    "no-core-pruning": ExplainerConfig(use_cores=False),
}


def time_one(e, v, cfg):
    out = {}
    for name, fn in (("axp", find_axp), ("cxp", find_cxp)):
        p = ExplanationProblem(e, v, cfg)
        t0 = time.perf_counter()
        try:
            fn(p)
            out[name] = time.perf_counter() - t0
        except SolverTimeout:
            out[name] = float("inf")
        out[name + "_calls"] = p.calls
    return out


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--variants", nargs="+", default=["rfmv", "rfwv", "bt"])
    ap.add_argument("--trees", nargs="+", type=int, default=[5, 10, 20])
    ap.add_argument("--features", type=int, default=8)
    ap.add_argument("--classes", type=int, default=3)
    ap.add_argument("--depth", type=int, default=4)
    ap.add_argument("--instances", type=int, default=3)
    ap.add_argument("--configs", nargs="+", default=list(CONFIGS), choices=list(CONFIGS))
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--time-limit", type=float, default=20.0, help="seconds per query; timeouts show as inf")
    args = ap.parse_args(argv)

    w = csv.writer(sys.stdout)
    w.writerow(["variant", "trees", "mode", "config", "axp_s", "cxp_s", "axp_calls", "cxp_calls"])
    for variant in args.variants:
        for n in args.trees:
            rng = random.Random(f"{args.seed}-{variant}-{n}")
            e = random_ensemble(rng, variant, m=args.features, n=n, depth=args.depth, K=args.classes, coarse=False)
            vs = [random_instance(rng, e) for _ in range(args.instances)]
            modes = ["sat", "maxsat"] if variant == "rfmv" else ["maxsat"]
            for mode in modes:
                names = ["default"] if mode == "sat" else args.configs
                for name in names:
                    cfg = replace(CONFIGS[name], mode=mode, time_limit=args.time_limit)
                    rows = [time_one(e, v, cfg) for v in vs]
                    mean = lambda k: statistics.mean(r[k] for r in rows)
                    w.writerow([variant, n, mode, name, f"{mean('axp'):.4f}", f"{mean('cxp'):.4f}",
                                f"{mean('axp_calls'):.1f}", f"{mean('cxp_calls'):.1f}"])
                    sys.stdout.flush()


if __name__ == "__main__":
    main()
