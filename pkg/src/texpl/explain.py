"""Abductive (AXp) and contrastive (CXp) explanations of ensemble predictions.

An explanation problem fixes an ensemble, an instance ``v`` and its predicted
class ``c``.  The basic query, :func:`entcheck`, asks whether fixing a subset
X of the features to v's intervals forces the prediction ``c``:

* majority-vote forests go through one SAT call on the hard encoding plus the
  "some class beats c" attack constraints;
* weighted ensembles go through one MaxSAT problem per opponent class c',
  maximising ``score(c') - score(c)`` and stopping at the first opponent that
  can win.

Everything else (deletion-based extraction, enumeration, smallest
explanations) is built on top of that query.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace
from typing import Iterator

from .encode import EncodingContext, encode_rfmv_attack, encode_te_objectives
from .formula import Wcnf, add_cardinality_geq, cardinality_geq_lit
from .maxsat import EarlyStop, MaxSatConfig, MaxSatInfeasible, MaxSatState, Optimum
from .model import RFMV, Ensemble, predict, to_unified
from .sat import SatSolver

AXP, CXP = "AXp", "CXp"
SAT_MODE, MAXSAT_MODE = "sat", "maxsat"


class NoExplanation(Exception):
    """The prediction cannot be changed at all, so no contrastive explanation exists."""


@dataclass
class ExplainerConfig:
    mode: str | None = None  # None picks "sat" for majority-vote forests, "maxsat" otherwise
    attack: str = "pairwise"
    stratify: bool = True
    early_termination: bool = True
    reuse_cores: bool = True
    class_order: bool = True
    polarity_hints: bool = True
    use_cores: bool = True
    decay: float = 0.95
    period: int = 32
    time_limit: float | None = None

    def maxsat(self) -> MaxSatConfig:
        return MaxSatConfig(self.stratify, self.early_termination, self.reuse_cores)


class ClassOrderHeap:
    """Opponent ordering by activity: winners are bumped, all activities decay periodically."""

    def __init__(self, classes, decay: float = 0.95, period: int | None = 32):
        self.activity = {k: 0.0 for k in classes}
        self.decay = decay
        self.period = period
        self.updates = 0

    def order(self) -> list:
        return sorted(self.activity, key=lambda k: (-self.activity[k], k))

    def update(self, winner) -> None:
        self.activity[winner] += 1.0
        self.updates += 1
        if self.period and self.updates % self.period == 0:
            for k in self.activity:
                self.activity[k] *= self.decay


def class_order_update(h: ClassOrderHeap, winner) -> None:
    h.update(winner)


@dataclass
class Check:
    entailed: bool
    core: frozenset | None = None  # features sufficient for entailment
    cell: tuple | None = None  # misclassified cell when not entailed
    winner: int | None = None


@dataclass
class Explanation:
    kind: str
    features: tuple
    witness: dict | None = None
    stats: dict = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.features)

    def to_dict(self, problem: "ExplanationProblem") -> dict:
        e = problem.ensemble
        out = {
            "kind": self.kind,
            "features": [e.features[i].name for i in self.features],
            "intervals": problem.im.describe(problem.cell, self.features),
        }
        if self.witness is not None:
            out["witness"] = {
                "point": [str(x) for x in self.witness["point"]],
                "class": e.classes[self.witness["class"]],
                "intervals": problem.im.describe(self.witness["cell"], self.features),
            }
        out["stats"] = self.stats
        return out


class ExplanationProblem:
    def __init__(self, ensemble: Ensemble, instance, config: ExplainerConfig | None = None):
        self.ensemble = ensemble
        self.instance = tuple(instance)
        self.config = cfg = config or ExplainerConfig()
        self.prediction = predict(ensemble, self.instance)
        self.mode = cfg.mode or (SAT_MODE if ensemble.variant == RFMV else MAXSAT_MODE)
        if self.mode == SAT_MODE and ensemble.variant != RFMV:
            raise ValueError("the SAT route needs a majority-vote forest")
        self.calls = 0
        self.deadline = None
        c = self.prediction
        if self.mode == SAT_MODE:
            self.ctx = EncodingContext(ensemble)
            encode_rfmv_attack(self.ctx, c, cfg.attack)
            self.solver = SatSolver(self.ctx.cnf.clauses)
            self.solver._grow(self.ctx.cnf.nvars)
        elif self.mode == MAXSAT_MODE:
            self.ctx = EncodingContext(to_unified(ensemble))
            self.objectives = encode_te_objectives(self.ctx, c)
            self.states = {k: MaxSatState(w, cfg.maxsat()) for k, w in self.objectives.items()}
            self.heap = ClassOrderHeap(list(self.states), cfg.decay, cfg.period)
        else:
            raise ValueError(f"unknown mode {self.mode!r}")
        self.im = self.ctx.im
        self.cell = self.im.locate(self.instance)
        self.assumption = self.ctx.cell_literals(self.cell)  # feature -> literal
        self.free = tuple(sorted(self.assumption))
        self._feature_of = {lit: i for i, lit in self.assumption.items()}

    @property
    def features(self) -> tuple:
        return tuple(range(self.ensemble.n_features))

    # ----------------------------------------------------------- oracle

    def _solvers(self):
        if self.mode == SAT_MODE:
            return [self.solver]
        return [st.solver for st in self.states.values()]

    def start_clock(self) -> None:
        if self.config.time_limit is not None:
            self.deadline = time.monotonic() + self.config.time_limit
            for s in self._solvers():
                s.deadline = self.deadline

    def _hint(self, holds, targets) -> None:
        if not self.config.polarity_hints:
            return
        for var in range(1, self.ctx.cnf.nvars + 1):
            b = holds(var)
            for s in targets:
                s.set_polarity(var, b)

    def check(self, fixed) -> Check:
        """Entailment check with a sufficient core or a misclassified cell."""
        self.calls += 1
        lits = [self.assumption[i] for i in sorted(fixed) if i in self.assumption]
        if self.mode == SAT_MODE:
            s = self.solver
            if s.solve(lits):
                cell = self.ctx.decode_cell(s.value)
                self._hint(s.value, [s])
                return Check(False, cell=cell)
            core = frozenset(self._feature_of[x] for x in s.core if x in self._feature_of)
            return Check(True, core)

        c = self.prediction
        core = set()
        opponents = self.heap.order() if self.config.class_order else sorted(self.states)
        for k in opponents:
            st = self.states[k]
            r = st.maximize(lits, strict=k > c)
            if isinstance(r, Optimum):
                reached = r.value > 0 if k > c else r.value >= 0
            else:
                reached = r.reached
            if reached:
                if self.config.class_order:
                    self.heap.update(k)
                cell = self.ctx.decode_cell(r.holds)
                self._hint(r.holds, [s.solver for s in self.states.values()])
                return Check(False, cell=cell, winner=k)
            core.update(self._feature_of[x] for x in r.assumption_core if x in self._feature_of)
        return Check(True, frozenset(core))

    def witness(self, cell) -> dict:
        point = self.im.representative(cell)
        return {"cell": tuple(cell), "point": point, "class": predict(self.ensemble, point)}

    def _stats(self, calls0, t0) -> dict:
        return {"oracle_calls": self.calls - calls0, "seconds": round(time.perf_counter() - t0, 6)}


def entcheck(p: ExplanationProblem, X) -> bool:
    return p.check(X).entailed


# ------------------------------------------------------------ extraction


def _shrink(p: ExplanationProblem, X: set) -> set:
    """Deletion loop: drop features while the prediction stays entailed."""
    for i in sorted(X):
        if i not in X:
            continue
        r = p.check(X - {i})
        if r.entailed:
            X = X - {i}
            if p.config.use_cores and r.core is not None:
                X &= r.core
    return X


def _grow(p: ExplanationProblem, S: set, cell) -> tuple:
    """Fix features one at a time while some misclassified cell remains.

    Returns the maximal non-entailing set and the witness cell for it.
    """
    S = set(S) | {i for i in p.free if cell[i] == p.cell[i]}
    for i in p.free:
        if i in S:
            continue
        r = p.check(S | {i})
        if not r.entailed:
            cell = r.cell
            S |= {i} | {j for j in p.free if cell[j] == p.cell[j]}
    return S, cell


def find_axp(p: ExplanationProblem) -> Explanation:
    t0, calls0 = time.perf_counter(), p.calls
    p.start_clock()
    X = set(p.free)
    r = p.check(X)
    assert r.entailed, "the instance's own cell must entail its prediction"
    if p.config.use_cores and r.core is not None:
        X &= r.core
    X = _shrink(p, X)
    return Explanation(AXP, tuple(sorted(X)), None, p._stats(calls0, t0))


def find_cxp(p: ExplanationProblem) -> Explanation:
    t0, calls0 = time.perf_counter(), p.calls
    p.start_clock()
    r = p.check(set())
    if r.entailed:
        raise NoExplanation("the prediction holds everywhere; no contrastive explanation exists")
    S, cell = _grow(p, set(), r.cell)
    Y = tuple(i for i in p.free if i not in S)
    return Explanation(CXP, Y, p.witness(cell), p._stats(calls0, t0))


def enumerate_xps(p: ExplanationProblem, limit: int | None = None, kinds=(AXP, CXP)) -> Iterator[Explanation]:
    """Enumerate AXps and CXps without repetition, guided by a seed map over the features.

    A seed is a set of fixed features not yet ruled out by the explanations
    found so far.  Entailing seeds shrink to a new AXp, the others grow to a
    maximal non-entailing set whose complement is a new CXp.
    """
    p.start_clock()
    sel = {i: k + 1 for k, i in enumerate(p.free)}
    seeds = SatSolver()
    seeds._grow(len(sel))
    for v in sel.values():
        seeds.set_polarity(v, True)
    emitted = 0
    while limit is None or emitted < limit:
        t0, calls0 = time.perf_counter(), p.calls
        if not seeds.solve():
            return
        seed = {i for i, v in sel.items() if seeds.value(v)}
        r = p.check(seed)
        if r.entailed:
            X = seed & r.core if p.config.use_cores and r.core is not None else seed
            X = _shrink(p, X)
            seeds.add_clause([-sel[i] for i in X])
            xp = Explanation(AXP, tuple(sorted(X)), None, p._stats(calls0, t0))
        else:
            S, cell = _grow(p, seed, r.cell)
            Y = [i for i in p.free if i not in S]
            seeds.add_clause([sel[i] for i in Y])
            xp = Explanation(CXP, tuple(Y), p.witness(cell), p._stats(calls0, t0))
        if xp.kind in kinds:
            emitted += 1
            yield xp


def smallest_axp(p: ExplanationProblem) -> Explanation:
    """Minimum-size AXp via minimum hitting sets of the CXps found so far."""
    t0, calls0 = time.perf_counter(), p.calls
    p.start_clock()
    hs = Wcnf()
    sel = {i: hs.hard.new_var(f"pick[{p.ensemble.features[i].name}]") for i in p.free}
    for v in sel.values():
        hs.add_soft(-v, 1)
    st = MaxSatState(hs, p.config.maxsat())
    st.solver.deadline = p.deadline
    rounds = 0
    while True:
        rounds += 1
        H = {i for i, v in sel.items() if st.maximize().holds(v)}
        r = p.check(H)
        if r.entailed:
            stats = p._stats(calls0, t0)
            stats["hitting_set_rounds"] = rounds
            return Explanation(AXP, tuple(sorted(H)), None, stats)
        S, _ = _grow(p, H, r.cell)
        st.add_hard([sel[i] for i in p.free if i not in S])


def smallest_cxp(p: ExplanationProblem) -> Explanation:
    """Minimum-size CXp, one optimisation problem per opponent class with a shrinking bound."""
    t0, calls0 = time.perf_counter(), p.calls
    p.start_clock()
    if p.mode == SAT_MODE:
        best = _smallest_cxp_votes(p)
    else:
        best = _smallest_cxp_weighted(p)
    if best is None:
        raise NoExplanation("the prediction holds everywhere; no contrastive explanation exists")
    Y, cell = best
    return Explanation(CXP, tuple(sorted(Y)), p.witness(cell), p._stats(calls0, t0))


def _smallest_cxp_votes(p: ExplanationProblem):
    """Majority vote: maximise the number of fixed features subject to one opponent winning."""
    e, c = p.ensemble, p.prediction
    n = len(e.trees)
    best = None
    for k in range(e.n_classes):
        if k == c:
            continue
        ctx = EncodingContext(e)
        f = ctx.cnf
        votes = ctx.encode_votes()
        lits, const = [], 0
        for v in votes:
            if v[k] is not None:
                lits.append(v[k])
            if v[c] is None:
                const += 1
            else:
                lits.append(-v[c])
        f.add([cardinality_geq_lit(f, lits, (n if k < c else n + 1) - const)])
        fix = ctx.cell_literals(p.cell)
        if best is not None:
            # at most |best| - 1 freed features
            add_cardinality_geq(f, list(fix.values()), len(fix) - len(best[0]) + 1)
        w = Wcnf(f)
        for lit in fix.values():
            w.add_soft(lit, 1)
        st = MaxSatState(w, p.config.maxsat())
        st.solver.deadline = p.deadline
        try:
            r = st.maximize()
        except MaxSatInfeasible:
            continue
        p.calls += 1
        Y = {i for i, lit in fix.items() if not r.holds(lit)}
        best = (Y, ctx.decode_cell(r.holds))
    return best


def _smallest_cxp_weighted(p: ExplanationProblem):
    """Weighted ensembles: per opponent, minimum hitting sets of blocking feature sets."""
    c = p.prediction
    best = None
    for k in sorted(p.states):
        hs = Wcnf()
        sel = {i: hs.hard.new_var() for i in p.free}
        for v in sel.values():
            hs.add_soft(-v, 1)
        mhs = MaxSatState(hs, p.config.maxsat())
        mhs.solver.deadline = p.deadline
        while True:
            try:
                r = mhs.maximize()
            except MaxSatInfeasible:
                break  # opponent k cannot win at all
            Y = {i for i, v in sel.items() if r.holds(v)}
            if best is not None and len(Y) >= len(best[0]):
                break
            fixed = [i for i in p.free if i not in Y]
            p.calls += 1
            res = p.states[k].maximize([p.assumption[i] for i in fixed], strict=k > c)
            if isinstance(res, Optimum):
                reached = res.value > 0 if k > c else res.value >= 0
            else:
                reached = res.reached
            if reached:
                best = (Y, p.ctx.decode_cell(res.holds))
                break
            blocking = [p._feature_of[x] for x in res.assumption_core if x in p._feature_of]
            if p.config.use_cores:
                blocking = sorted(set(blocking))
            else:
                blocking = fixed
            if not blocking:
                break
            mhs.add_hard([sel[i] for i in blocking])
    return best

