"""Split points, per-feature intervals and cells.

A cell picks one interval per feature; every tree (hence the ensemble) is
constant on a cell, so cells are the unit of reasoning for all encoders and
for the brute-force oracle.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .model import BINARY, REAL, Ensemble, Feature, fmt_number


@dataclass(frozen=True)
class FeatureIntervals:
    """Intervals of one feature.

    For a real feature with splits ``s_1 < ... < s_k`` the intervals are
    ``[lo, s_1), [s_1, s_2), ..., [s_k, hi]`` (an inclusive split ``d+`` makes
    ``d`` belong to the interval on its left).  Categorical features get one
    pseudo-interval per tested-relevant value, binary features two.
    """

    feature: Feature
    splits: tuple = ()  # of Threshold, real features only
    values: tuple = ()  # categorical/binary: domain values, one per interval

    @property
    def count(self) -> int:
        if self.feature.kind == REAL:
            return len(self.splits) + 1
        return len(self.values) if self.values else 1

    def locate(self, x) -> int:
        """Index of the interval containing ``x``."""
        if self.feature.kind == REAL:
            for k, s in enumerate(self.splits):
                if s.admits(x):
                    return k
            return len(self.splits)
        if not self.values:
            return 0
        return self.values.index(x)

    def representative(self, k: int):
        """A concrete value inside interval ``k``."""
        f = self.feature
        if f.kind != REAL:
            return self.values[k] if self.values else f.domain[0]
        lo = self.splits[k - 1] if k > 0 else None
        hi = self.splits[k] if k < len(self.splits) else None
        a = f.lo if lo is None else lo.value
        b = f.hi if hi is None else hi.value
        if a < b:
            return (a + b) / 2
        return a  # degenerate interval {a} between the bounds a and a+

    def describe(self, k: int) -> str:
        f = self.feature
        if f.kind != REAL:
            if not self.values:
                return f"{f.name} any"
            return f"{f.name} = {self.values[k]}"
        if k > 0:
            s = self.splits[k - 1]
            left = ("(" if s.inclusive else "[") + fmt_number(s.value)
        else:
            left = "[" + fmt_number(f.lo)
        if k < len(self.splits):
            s = self.splits[k]
            right = fmt_number(s.value) + ("]" if s.inclusive else ")")
        else:
            right = fmt_number(f.hi) + "]"
        return f"{f.name} ∈ {left}, {right}"


@dataclass(frozen=True)
class IntervalMap:
    features: tuple  # of FeatureIntervals

    def __getitem__(self, i) -> FeatureIntervals:
        return self.features[i]

    def __len__(self) -> int:
        return len(self.features)

    @property
    def counts(self) -> tuple:
        return tuple(fi.count for fi in self.features)

    @property
    def free_features(self) -> tuple:
        """Features with more than one interval (the only ones worth fixing)."""
        return tuple(i for i, fi in enumerate(self.features) if fi.count > 1)

    def locate(self, v: Sequence) -> tuple:
        return tuple(fi.locate(x) for fi, x in zip(self.features, v))

    def representative(self, cell: Sequence) -> tuple:
        return tuple(fi.representative(k) for fi, k in zip(self.features, cell))

    def describe(self, cell: Sequence, features=None) -> list:
        idx = range(len(self.features)) if features is None else sorted(features)
        return [self.features[i].describe(cell[i]) for i in idx]


def collect_split_points(e: Ensemble) -> tuple:
    """Sorted, deduplicated thresholds per feature (empty for non-real or untested)."""
    per = [set() for _ in e.features]
    for t in e.trees:
        for path, _ in t.paths():
            for test, _ in path:
                if test.op == "<":
                    per[test.feature].add(test.threshold)
    return tuple(tuple(sorted(s)) for s in per)


def _tested_sets(e: Ensemble) -> list:
    used = [False] * e.n_features
    for t in e.trees:
        for path, _ in t.paths():
            for test, _ in path:
                used[test.feature] = True
    return used


def build_interval_map(e: Ensemble) -> IntervalMap:
    splits = collect_split_points(e)
    tested = _tested_sets(e)
    out = []
    for f in e.features:
        if f.kind == REAL:
            out.append(FeatureIntervals(f, splits=splits[f.index]))
        elif tested[f.index]:
            vals = (0, 1) if f.kind == BINARY else tuple(f.domain)
            out.append(FeatureIntervals(f, values=vals))
        else:
            out.append(FeatureIntervals(f))
    return IntervalMap(tuple(out))


def locate(v: Sequence, im: IntervalMap) -> tuple:
    return im.locate(v)
