"""Cross-check the solvers against exhaustive enumeration on random small forests.

For each random ensemble and instance this compares every subset-minimal AXp
and CXp found by enumeration with the brute-force answer, checks the smallest
explanations have the brute-force minimum size, and for majority-vote forests
compares robustness and fairness verdicts.  Exits non-zero on any mismatch.

    python3 scripts/random_check.py --count 200 --seed 7
"""

from __future__ import annotations

import argparse
import random
import sys

from texpl.explain import (
    AXP,
    CXP,
    ExplainerConfig,
    ExplanationProblem,
    enumerate_xps,
    smallest_axp,
    smallest_cxp,
)
from texpl.oracle import brute_adversarial, brute_pair_unfair, brute_xps, cell_grid, is_constant
from texpl.synth import random_ensemble, random_instance
from texpl.verify import FairnessQuery, RobustnessQuery, check_fairness, check_robustness


def check_ensemble(rng, e, failures):
    grid = cell_grid(e)
    v = random_instance(rng, e)
    axps, cxps = brute_xps(e, v, grid=grid)
    modes = ["sat", "maxsat"] if e.variant == "rfmv" else ["maxsat"]
    for mode in modes:
        p = ExplanationProblem(e, v, ExplainerConfig(mode=mode))
        got = list(enumerate_xps(p))
        got_a = sorted((frozenset(x.features) for x in got if x.kind == AXP), key=lambda s: (len(s), sorted(s)))
        got_c = sorted((frozenset(x.features) for x in got if x.kind == CXP), key=lambda s: (len(s), sorted(s)))
        if got_a != axps or got_c != cxps:
            failures.append(f"{mode}: enumeration differs for v={v}")
        small = ExplanationProblem(e, v, ExplainerConfig(mode=mode))
        if len(smallest_axp(small)) != len(axps[0]):
            failures.append(f"{mode}: smallest AXp size differs for v={v}")
        if cxps and len(smallest_cxp(small)) != len(cxps[0]):
            failures.append(f"{mode}: smallest CXp size differs for v={v}")
    if e.variant != "rfmv":
        return
    delta = rng.randint(0, e.n_features)
    expect = brute_adversarial(e, v, delta, grid=grid) is None
    if check_robustness(RobustnessQuery(e, v, delta)).holds != expect:
        failures.append(f"robustness verdict differs for v={v}, delta={delta}")
    protected = rng.sample(range(e.n_features), rng.randint(1, e.n_features))
    expect = brute_pair_unfair(e, protected, grid=grid) is None
    if check_fairness(FairnessQuery(e, protected)).holds != expect:
        failures.append(f"fairness verdict differs for protected={protected}")
    if is_constant(grid) and not check_fairness(FairnessQuery(e, range(e.n_features))).holds:
        failures.append("constant forest reported unfair")


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--count", type=int, default=100)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    rng = random.Random(args.seed)
    failures = []
    for i in range(args.count):
        e = random_ensemble(rng, mixed=rng.random() < 0.5)
        before = len(failures)
        check_ensemble(rng, e, failures)
        for f in failures[before:]:
            print(f"[{i}] {e.variant} m={e.n_features} n={len(e.trees)}: {f}")
    print(f"{args.count} ensembles checked, {len(failures)} mismatches")
    return 1 if failures else 0


if __name__ == "__main__":
    sys.exit(main())
