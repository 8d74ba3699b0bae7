"""Explain and verify a few Iris instances with the three bundled models."""

from texpl.explain import ExplanationProblem, enumerate_xps, smallest_axp
from texpl.model import class_scores, fmt_number, load_bundled, parse_instance
from texpl.verify import FairnessQuery, RobustnessQuery, check_fairness, check_robustness

CASES = [
    ("iris_rfmv", ["6.0", "3.5", "1.4", "0.2"]),
    ("iris_rfwv", ["5.1", "2.75", "1.4", "0.8"]),
    ("iris_bt", ["5.1", "3.5", "1.4", "0.2"]),
]


def names(e, feats):
    return "{" + ", ".join(e.features[i].name for i in feats) + "}"


def main():
    for model, raw in CASES:
        e = load_bundled(model)
        v = parse_instance(e, raw)
        p = ExplanationProblem(e, v)
        scores = ", ".join(fmt_number(s) for s in class_scores(e, v))
        print(f"{model}: v={raw} -> {e.classes[p.prediction]} (scores {scores}, {p.mode} route)")
        for x in enumerate_xps(p):
            print(f"  {x.kind} {names(e, x.features)}")
        print(f"  smallest AXp {names(e, smallest_axp(ExplanationProblem(e, v)).features)}")
        if e.variant == "rfmv":
            for d in range(e.n_features + 1):
                print(f"  robust at l0 distance {d}: {check_robustness(RobustnessQuery(e, v, d)).holds}")
            print(f"  fair w.r.t. sepal.width: {check_fairness(FairnessQuery(e, [1])).holds}")
        print()


if __name__ == "__main__":
    main()
