"""Propositional encodings of tree ensembles.

* feature domains: order encoding over threshold literals plus one literal per
  interval, exactly one of which holds;
* tree paths: either a literal per distinct path (weighted objective route)
  or per-tree class-vote literals (majority-vote SAT route);
* the majority "attack" constraints stating that some class beats a target;
* per-opponent weighted objectives ``score(c') - score(c)``;
* two-copy formulas for fairness and robustness queries.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .formula import (
    Cnf,
    Wcnf,
    add_cardinality_geq,
    add_exactly_one,
    add_unary_comparator,
    cardinality_geq_lit,
    define_and,
    define_or,
    sort_unary,
)
from .intervals import IntervalMap, build_interval_map
from .model import BINARY, CATEGORICAL, RFMV, Ensemble, Split, predict

ATTACK_VARIANTS = ("pairwise", "two-comparator", "k2")


class EncodingError(ValueError):
    pass


@dataclass
class DomainLits:
    """Literals of one feature: threshold literals and one literal per interval."""

    intervals: list
    thresholds: dict = field(default_factory=dict)  # Threshold -> lit
    values: dict = field(default_factory=dict)  # categorical value -> interval lit
    sets: dict = field(default_factory=dict)  # frozenset -> lit, built lazily

    @property
    def free(self) -> bool:
        return len(self.intervals) > 1


def encode_domains(im: IntervalMap, f: Cnf, tag: str = "") -> list:
    """Clauses tying threshold literals to interval literals, per feature."""
    out = []
    for fi in im.features:
        feat = fi.feature
        name = tag + feat.name
        if fi.count == 1:
            out.append(DomainLits([f.true_lit()]))
            continue
        if feat.kind == BINARY:
            b = f.new_var(f"{name}=1")
            out.append(DomainLits([-b, b], values={0: -b, 1: b}))
            continue
        if feat.kind == CATEGORICAL:
            vals = fi.values
            if len(vals) == 2:
                z = f.new_var(f"{name}={vals[0]}")
                lits = [z, -z]
            else:
                lits = [f.new_var(f"{name}={x}") for x in vals]
                add_exactly_one(f, lits)
            out.append(DomainLits(lits, values=dict(zip(vals, lits))))
            continue
        ts = [f.new_var(f"{name}<{s}") for s in fi.splits]
        thresholds = dict(zip(fi.splits, ts))
        if len(ts) == 1:
            out.append(DomainLits([ts[0], -ts[0]], thresholds))
            continue
        z = [f.new_var(f"{name}∈I{k + 1}") for k in range(len(ts) + 1)]
        for a, b in zip(ts, ts[1:]):
            f.add([-a, b])  # x < s_k implies x < s_{k+1}
        f.add([-z[0], ts[0]])
        f.add([z[0], -ts[0]])
        for k in range(1, len(ts)):
            # z_k <-> not t_{k-1} and t_k
            f.add([-z[k], -ts[k - 1]])
            f.add([-z[k], ts[k]])
            f.add([z[k], ts[k - 1], -ts[k]])
        f.add([-z[-1], -ts[-1]])
        f.add([z[-1], ts[-1]])
        f.add(list(z))
        out.append(DomainLits(z, thresholds))
    return out


def split_literal(f: Cnf, dom: DomainLits, test: Split) -> int:
    if test.op == "<":
        return dom.thresholds[test.threshold]
    if test.op == "=1":
        return dom.values[1]
    key = test.values
    if key not in dom.sets:
        lits = [dom.values[x] for x in sorted(key, key=str)]
        dom.sets[key] = lits[0] if len(lits) == 1 else define_or(f, lits)
    return dom.sets[key]


class EncodingContext:
    """Hard part of the encoding for one ensemble, plus literal bookkeeping."""

    def __init__(self, e: Ensemble, cnf: Cnf | None = None, im: IntervalMap | None = None, tag: str = ""):
        self.ensemble = e
        self.im = im or build_interval_map(e)
        self.cnf = cnf if cnf is not None else Cnf()
        self.tag = tag
        self.domains = encode_domains(self.im, self.cnf, tag)
        self._paths = {}  # frozenset of condition literals -> path literal
        self.leaf_lits = None  # per tree: list of (Leaf, lit)
        self.votes = None  # per tree: list over classes of lit or None

    def conditions(self, path) -> list:
        return [
            split_literal(self.cnf, self.domains[test.feature], test) * (1 if branch else -1)
            for test, branch in path
        ]

    # -------------------------------------------------------------- paths

    def encode_paths(self) -> list:
        """One literal per root-to-leaf path, equivalent to the path condition."""
        if self.leaf_lits is not None:
            return self.leaf_lits
        f = self.cnf
        self.leaf_lits = []
        for t in self.ensemble.trees:
            entries = []
            for j, (path, leaf) in enumerate(t.paths()):
                conds = self.conditions(path)
                key = frozenset(conds)
                if key not in self._paths:
                    r = f.new_var(f"{self.tag}R[t{t.id},l{j}]")
                    for x in key:
                        f.add([-r, x])
                    f.add([r] + [-x for x in key])
                    self._paths[key] = r
                entries.append((leaf, self._paths[key]))
            add_exactly_one(f, list(dict.fromkeys(r for _, r in entries)))
            self.leaf_lits.append(entries)
        return self.leaf_lits

    def encode_votes(self) -> list:
        """Per-tree class-vote literals for a majority-vote forest."""
        if self.votes is not None:
            return self.votes
        e, f = self.ensemble, self.cnf
        if e.variant != RFMV:
            raise EncodingError("class-vote encoding needs a majority-vote forest")
        self.votes = []
        for t in e.trees:
            paths = list(t.paths())
            voted = sorted({leaf.top_class() for _, leaf in paths})
            lits = [None] * e.n_classes
            for k in voted:
                lits[k] = f.new_var(f"{self.tag}l[t{t.id},{e.classes[k]}]")
            for path, leaf in paths:
                conds = self.conditions(path)
                f.add([-x for x in dict.fromkeys(conds)] + [lits[leaf.top_class()]])
            add_exactly_one(f, [x for x in lits if x is not None])
            self.votes.append(lits)
        return self.votes

    # -------------------------------------------------------- assumptions

    def cell_literals(self, cell: Sequence[int]) -> dict:
        """Interval literal of every multi-interval feature for a given cell."""
        return {i: d.intervals[cell[i]] for i, d in enumerate(self.domains) if d.free}

    def instance_assumptions(self, v: Sequence) -> dict:
        return self.cell_literals(self.im.locate(v))

    def decode_cell(self, holds) -> tuple:
        cell = []
        for d in self.domains:
            ks = [k for k, x in enumerate(d.intervals) if holds(x)]
            cell.append(ks[0] if ks else 0)
        return tuple(cell)


def encode_tree_paths(ctx: EncodingContext, mode: str = "leaf") -> list:
    return ctx.encode_paths() if mode == "leaf" else ctx.encode_votes()


def instance_assumptions(ctx: EncodingContext, v: Sequence) -> dict:
    return ctx.instance_assumptions(v)


# ------------------------------------------------------------------ attacks


def _vote_lit(ctx, lit):
    return lit if lit is not None else ctx.cnf.false_lit()


def encode_rfmv_attack(ctx: EncodingContext, target: int, variant: str = "pairwise") -> None:
    """Clauses satisfiable exactly when some class beats ``target`` (ties to the lower index)."""
    e, f = ctx.ensemble, ctx.cnf
    votes = ctx.encode_votes()
    n, K = len(e.trees), e.n_classes
    if not 0 <= target < K:
        raise EncodingError(f"target class {target} out of range")
    if variant == "k2":
        if K != 2:
            raise EncodingError("the two-class attack needs exactly two classes")
        other = 1 - target
        bound = n // 2 + 1 if target == 0 else (n + 1) // 2
        add_cardinality_geq(f, [v[other] for v in votes if v[other] is not None], bound)
    elif variant == "pairwise":
        wins = []
        for k in range(K):
            if k == target:
                continue
            # sum_t l_tk + sum_t not l_tj >= n (k below target) or n + 1 (k above)
            lits, const = [], 0
            for v in votes:
                if v[k] is not None:
                    lits.append(v[k])
                if v[target] is None:
                    const += 1
                else:
                    lits.append(-v[target])
            bound = (n if k < target else n + 1) - const
            wins.append(cardinality_geq_lit(f, lits, bound))
        f.add(wins)
    elif variant == "two-comparator":
        _two_comparator_attack(ctx, target)
    else:
        raise EncodingError(f"unknown attack variant {variant!r}; expected one of {ATTACK_VARIANTS}")


def _two_comparator_attack(ctx: EncodingContext, j: int) -> None:
    """Two shared comparators: one against a class below ``j``, one against a class above.

    Each side has a selector per candidate class plus a guard selector that
    turns its comparator into a trivially satisfied one; at most one guard
    may be used, so at least one real class is compared.
    """
    e, f = ctx.ensemble, ctx.cnf
    votes = ctx.encode_votes()
    K = e.n_classes
    own = sort_unary(f, [_vote_lit(ctx, v[j]) for v in votes])
    flags = []
    guards = []
    for side, classes, mode in (("below", range(j), "le"), ("above", range(j + 1, K), "lt")):
        guard = f.new_var(f"p[{side},guard]")
        sel = {k: f.new_var(f"p[{side},{e.classes[k]}]") for k in classes}
        add_exactly_one(f, [guard] + list(sel.values()))
        z = [f.new_var(f"z[{side},t{t}]") for t in range(len(votes))]
        for t, v in enumerate(votes):
            f.add([-guard, z[t]])
            for k, p in sel.items():
                if v[k] is None:
                    f.add([-p, -z[t]])
                else:
                    f.add([-p, -z[t], v[k]])
                    f.add([-p, z[t], -v[k]])
        flags.append(add_unary_comparator(f, own, sort_unary(f, z), mode))
        guards.append(guard)
    f.add([-guards[0], -guards[1]])
    for flag in flags:
        f.add([flag])


# --------------------------------------------------------------- objectives


def encode_te_objectives(ctx: EncodingContext, target: int) -> dict:
    """Map each opponent c' to the objective ``score(c') - score(target)`` over path literals."""
    entries = ctx.encode_paths()
    out = {}
    for opp in range(ctx.ensemble.n_classes):
        if opp == target:
            continue
        coeff: dict[int, Fraction] = {}
        for tree in entries:
            for leaf, r in tree:
                a = leaf.weights[opp] - leaf.weights[target]
                if a:
                    coeff[r] = coeff.get(r, Fraction(0)) + a
        w = Wcnf(ctx.cnf, [], Fraction(0))
        for r, a in coeff.items():
            w.add_term(r, a)
        out[opp] = w
    return out


# ----------------------------------------------------- two-copy formulas


def _winner_lits(ctx: EncodingContext) -> list:
    """Literal per class that holds iff that class is the prediction of this copy."""
    f = ctx.cnf
    votes = ctx.encode_votes()
    K = ctx.ensemble.n_classes
    counts = [sort_unary(f, [_vote_lit(ctx, v[k]) for v in votes]) for k in range(K)]
    out = []
    for j in range(K):
        beats = [
            add_unary_comparator(f, counts[k], counts[j], "le" if j < k else "lt")
            for k in range(K)
            if k != j
        ]
        out.append(define_and(f, beats, f"{ctx.tag}wins[{ctx.ensemble.classes[j]}]"))
    return out


def _equalities(f: Cnf, a: EncodingContext, b: EncodingContext) -> dict:
    """[x_i = y_i] at interval granularity, for every multi-interval feature."""
    eqs = {}
    for i, (da, db) in enumerate(zip(a.domains, b.domains)):
        if not da.free:
            continue
        eq = f.new_var(f"eq[{a.ensemble.features[i].name}]")
        for xa, xb in zip(da.intervals, db.intervals):
            f.add([-xa, -xb, eq])
            f.add([-xa, xb, -eq])
        eqs[i] = eq
    return eqs


@dataclass
class TwoCopyQuery:
    cnf: Cnf
    a: EncodingContext
    b: EncodingContext
    equalities: dict


def _two_copies(e: Ensemble) -> tuple:
    if e.variant != RFMV:
        raise EncodingError("fairness and robustness queries support majority-vote forests only")
    f = Cnf()
    im = build_interval_map(e)
    a = EncodingContext(e, f, im, tag="a.")
    b = EncodingContext(e, f, im, tag="b.")
    return f, a, b


def encode_fairness(e: Ensemble, protected) -> TwoCopyQuery:
    """Satisfiable iff two points agreeing off ``protected`` get different classes."""
    protected = set(protected)
    f, a, b = _two_copies(e)
    wa, wb = _winner_lits(a), _winner_lits(b)
    sel = [f.new_var(f"s[a,{c}]") for c in e.classes]
    add_exactly_one(f, sel)
    for j, s in enumerate(sel):
        f.add([-s, wa[j]])
        f.add([-s, -wb[j]])
    eqs = _equalities(f, a, b)
    for i, eq in eqs.items():
        if i not in protected:
            f.add([eq])
    return TwoCopyQuery(f, a, b, eqs)


def encode_robustness(e: Ensemble, v: Sequence, delta: int) -> TwoCopyQuery:
    """Satisfiable iff a point within ``delta`` differing features of ``v`` changes class."""
    if delta < 0:
        raise EncodingError("delta must be non-negative")
    f, a, b = _two_copies(e)
    for lit in a.instance_assumptions(v).values():
        f.add([lit])
    c = predict(e, v)
    wa, wb = _winner_lits(a), _winner_lits(b)
    f.add([wa[c]])
    f.add([-wb[c]])
    eqs = _equalities(f, a, b)
    add_cardinality_geq(f, list(eqs.values()), len(eqs) - delta)
    return TwoCopyQuery(f, a, b, eqs)
