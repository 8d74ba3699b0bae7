"""Fairness and local robustness checks for majority-vote forests.

Both queries build a two-copy formula (copies ``a`` and ``b`` of the forest
over a shared interval map) and make one SAT call.  A satisfying assignment
decodes into a pair of cells, which is turned into concrete points and
re-checked with the plain prediction path before being reported.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .encode import EncodingError, encode_fairness, encode_robustness
from .model import RFMV, Ensemble, class_scores, fmt_number, predict
from .sat import SatSolver

HOLDS, VIOLATED = "holds", "violated"
NORMS = ("l0",)


class UnsupportedVariant(ValueError):
    pass


class VerificationError(RuntimeError):
    """A decoded witness failed to confirm through prediction (an encoding bug)."""


@dataclass
class FairnessQuery:
    ensemble: Ensemble
    protected: frozenset

    def __post_init__(self):
        self.protected = frozenset(self.protected)
        m = self.ensemble.n_features
        if not self.protected:
            raise ValueError("at least one protected feature is required")
        if not all(0 <= i < m for i in self.protected):
            raise ValueError(f"protected features must be indices in [0, {m})")


@dataclass
class RobustnessQuery:
    ensemble: Ensemble
    instance: tuple
    delta: int
    norm: str = "l0"

    def __post_init__(self):
        self.instance = tuple(self.instance)
        if self.norm not in NORMS:
            raise ValueError(f"only the l0 (changed-feature count) distance is supported, got {self.norm!r}")
        if not 0 <= self.delta <= self.ensemble.n_features:
            raise ValueError(f"delta must lie in [0, {self.ensemble.n_features}]")


@dataclass
class Verdict:
    outcome: str
    points: tuple = ()  # witness points: (x, y) for fairness, (v, x) for robustness
    cells: tuple = ()
    classes: tuple = ()
    scores: tuple = ()
    stats: dict = field(default_factory=dict)

    @property
    def holds(self) -> bool:
        return self.outcome == HOLDS

    def to_dict(self, e: Ensemble) -> dict:
        out = {"outcome": self.outcome, "stats": self.stats}
        if self.points:
            out["witness"] = [
                {
                    "point": {f.name: _show(x) for f, x in zip(e.features, p)},
                    "cell": list(cell),
                    "class": e.classes[k],
                    "scores": [fmt_number(s) for s in sc],
                }
                for p, cell, k, sc in zip(self.points, self.cells, self.classes, self.scores)
            ]
        return out


def _show(x):
    return fmt_number(x) if isinstance(x, Fraction) else x


def _require_rfmv(e: Ensemble) -> None:
    if e.variant != RFMV:
        raise UnsupportedVariant(f"verification supports majority-vote forests only, not {e.variant!r}")


def _solve(q, time_limit):
    s = SatSolver(q.cnf.clauses)
    s._grow(q.cnf.nvars)
    if time_limit is not None:
        s.deadline = time.monotonic() + time_limit
    sat = s.solve()
    return s, sat


def _decode(e: Ensemble, query, s: SatSolver) -> tuple:
    im = query.a.im
    ca = query.a.decode_cell(s.value)
    cb = query.b.decode_cell(s.value)
    return ca, cb, im.representative(ca), im.representative(cb)


def check_fairness(q: FairnessQuery, time_limit: float | None = None) -> Verdict:
    e = q.ensemble
    _require_rfmv(e)
    try:
        f = encode_fairness(e, q.protected)
    except EncodingError as err:
        raise UnsupportedVariant(str(err)) from err
    s, sat = _solve(f, time_limit)
    stats = {"variables": f.cnf.nvars, "clauses": len(f.cnf.clauses), "conflicts": s.stats["conflicts"]}
    if not sat:
        return Verdict(HOLDS, stats=stats)
    ca, cb, x, y = _decode(e, f, s)
    # points differ only on protected features
    y = tuple(y[i] if i in q.protected else x[i] for i in range(e.n_features))
    kx, ky = predict(e, x), predict(e, y)
    if kx == ky:
        raise VerificationError("fairness witness does not change the prediction")
    return Verdict(VIOLATED, (x, y), (ca, cb), (kx, ky), (class_scores(e, x), class_scores(e, y)), stats)


def check_robustness(q: RobustnessQuery, time_limit: float | None = None) -> Verdict:
    e = q.ensemble
    _require_rfmv(e)
    v = q.instance
    try:
        f = encode_robustness(e, v, q.delta)
    except EncodingError as err:
        raise UnsupportedVariant(str(err)) from err
    s, sat = _solve(f, time_limit)
    stats = {"variables": f.cnf.nvars, "clauses": len(f.cnf.clauses), "conflicts": s.stats["conflicts"]}
    if not sat:
        return Verdict(HOLDS, stats=stats)
    im = f.a.im
    home = im.locate(v)
    _, cb, _, x = _decode(e, f, s)
    # keep v's own value on every feature whose interval did not change
    x = tuple(v[i] if cb[i] == home[i] else x[i] for i in range(e.n_features))
    kv, kx = predict(e, v), predict(e, x)
    moved = sum(a != b for a, b in zip(home, im.locate(x)))
    if kv == kx or moved > q.delta:
        raise VerificationError("robustness witness does not confirm")
    return Verdict(VIOLATED, (v, x), (home, cb), (kv, kx), (class_scores(e, v), class_scores(e, x)), stats)


def robustness_sweep(e: Ensemble, v: Sequence, deltas=None) -> list:
    deltas = range(e.n_features + 1) if deltas is None else deltas
    return [(d, check_robustness(RobustnessQuery(e, v, d))) for d in deltas]
