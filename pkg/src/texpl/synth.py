"""Random small ensembles and instances for property tests and benchmarks."""

from __future__ import annotations

import random
from fractions import Fraction

from .model import (
    BINARY,
    BT,
    CATEGORICAL,
    REAL,
    RFMV,
    RFWV,
    Ensemble,
    Feature,
    Internal,
    Leaf,
    Split,
    Threshold,
    Tree,
    validate,
)

DOMAIN = (Fraction(0), Fraction(10))
CATEGORIES = ("a", "b", "c")


def random_features(rng: random.Random, m: int, mixed: bool = False) -> tuple:
    feats = []
    for i in range(m):
        kind = rng.choice((REAL, REAL, CATEGORICAL, BINARY)) if mixed else REAL
        if kind == REAL:
            feats.append(Feature(i, f"f{i}", REAL, DOMAIN))
        elif kind == BINARY:
            feats.append(Feature(i, f"f{i}", BINARY, (0, 1)))
        else:
            feats.append(Feature(i, f"f{i}", CATEGORICAL, CATEGORIES))
    return tuple(feats)


def _random_split(rng, f: Feature, coarse: bool) -> Split:
    if f.kind == REAL:
        # a small threshold pool makes trees share split points
        d = Fraction(rng.choice((2, 5, 8)) if coarse else rng.randint(1, 9))
        return Split(f.index, "<", threshold=Threshold(d, rng.random() < 0.2))
    if f.kind == BINARY:
        return Split(f.index, "=1")
    k = rng.randint(1, len(f.domain) - 1)
    return Split(f.index, "in", values=frozenset(rng.sample(f.domain, k)))


def _random_leaf(rng, variant: str, K: int, tree_class: int) -> Leaf:
    if variant == RFMV:
        vec = [Fraction(0)] * K
        vec[rng.randrange(K)] = Fraction(1)
    elif variant == RFWV:
        vec = [Fraction(rng.randint(0, 10), 10) for _ in range(K)]
    else:
        vec = [Fraction(0)] * K
        vec[tree_class] = Fraction(rng.randint(-100, 100), 100)
    return Leaf(tuple(vec))


def _random_node(rng, feats, depth, variant, K, tree_class, coarse, split_prob):
    if depth == 0 or rng.random() > split_prob:
        return _random_leaf(rng, variant, K, tree_class)
    f = rng.choice(feats)
    args = (rng, feats, depth - 1, variant, K, tree_class, coarse, split_prob)
    return Internal(_random_split(rng, f, coarse), _random_node(*args), _random_node(*args))


def random_ensemble(
    rng: random.Random,
    variant: str | None = None,
    m: int | None = None,
    n: int | None = None,
    depth: int = 3,
    K: int | None = None,
    mixed: bool = False,
    coarse: bool = True,
    split_prob: float = 0.85,
) -> Ensemble:
    variant = variant or rng.choice((RFMV, RFWV, BT))
    m = m or rng.randint(1, 6)
    n = n or rng.randint(1, 9)
    K = K or rng.randint(2, 4)
    feats = random_features(rng, m, mixed)
    trees = tuple(
        Tree(_random_node(rng, feats, depth, variant, K, t % K, coarse, split_prob), t) for t in range(n)
    )
    e = Ensemble(feats, tuple(f"c{k}" for k in range(K)), trees, variant)
    validate(e)
    return e


def random_instance(rng: random.Random, e: Ensemble) -> tuple:
    v = []
    for f in e.features:
        if f.kind == REAL:
            # half-integers hit thresholds exactly now and then
            v.append(Fraction(rng.randint(0, 20), 2))
        elif f.kind == BINARY:
            v.append(rng.randint(0, 1))
        else:
            v.append(rng.choice(f.domain))
    return tuple(v)
