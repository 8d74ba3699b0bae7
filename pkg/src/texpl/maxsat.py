"""Incremental core-guided (OLL) MaxSAT under assumptions.

A :class:`MaxSatState` wraps one SAT solver loaded with the hard clauses of a
weighted formula and answers repeated ``maximize`` calls under varying
assumption sets.  Between calls it keeps

* the totalizers created for core relaxation (they only define fresh
  variables, so they stay valid whatever the assumptions are), and
* every core found so far, tagged with the assumption literals it used, so
  later calls can replay the cores whose dependencies are present instead of
  extracting them again.

When the caller only needs the sign of the optimum, stratification and early
termination stop the search as soon as that sign is known.
"""

from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

from .formula import Wcnf, sort_unary, weight_scale
from .sat import SatSolver


class MaxSatInfeasible(Exception):
    """Hard clauses are unsatisfiable under the given assumptions."""

    def __init__(self, core):
        super().__init__("hard clauses are unsatisfiable under the assumptions")
        self.core = core


@dataclass
class MaxSatConfig:
    stratify: bool = True
    early_termination: bool = True
    reuse_cores: bool = True


@dataclass
class Optimum:
    value: Fraction
    model: list = field(repr=False)
    assumption_core: frozenset = frozenset()

    def holds(self, lit: int) -> bool:
        b = self.model[abs(lit)] if abs(lit) < len(self.model) else False
        return b if lit > 0 else not b


@dataclass
class EarlyStop:
    """Search stopped once the sign test was decided.

    ``reached`` is True when a model meeting the threshold was found (``bound``
    is its objective value, ``model`` the model), False when the optimum is
    provably below the threshold (``bound`` is the optimistic upper bound).
    """

    reached: bool
    bound: Fraction
    model: list | None = field(default=None, repr=False)
    assumption_core: frozenset = frozenset()

    def holds(self, lit: int) -> bool:
        b = self.model[abs(lit)] if abs(lit) < len(self.model) else False
        return b if lit > 0 else not b


def stratify(softs: Sequence) -> list:
    """Split soft literals into weight levels, heaviest first.

    ``softs`` holds (lit, weight) pairs.  Walking distinct weights downwards,
    a weight joins the current level when it is at least as close to the mean
    of that level as to the mean of all strictly smaller weights (an empty
    set of smaller weights counts as distance zero).
    """
    if not softs:
        return []
    groups = defaultdict(list)
    for s in softs:
        groups[Fraction(s[1])].append(s)
    weights = sorted(groups, reverse=True)
    strata = [list(groups[weights[0]])]
    level_sum, level_n = weights[0] * len(groups[weights[0]]), len(groups[weights[0]])
    below_sum = sum(w * len(groups[w]) for w in weights[1:])
    below_n = sum(len(groups[w]) for w in weights[1:])
    for w in weights[1:]:
        n_w = len(groups[w])
        below_sum -= w * n_w
        below_n -= n_w
        d_level = abs(w - level_sum / level_n)
        d_below = abs(w - below_sum / below_n) if below_n else Fraction(0)
        if d_level <= d_below:
            strata[-1].extend(groups[w])
            level_sum += w * n_w
            level_n += n_w
        else:
            strata.append(list(groups[w]))
            level_sum, level_n = w * n_w, n_w
    return strata


class _Sink:
    """Lets the formula gadgets write straight into a SAT solver."""

    def __init__(self, solver: SatSolver):
        self.solver = solver

    def new_var(self, name=None) -> int:
        return self.solver.new_var()

    def add(self, clause) -> None:
        self.solver.add_clause(clause)


@dataclass
class _Core:
    softs: tuple
    assumptions: frozenset
    parents: frozenset  # cores whose relaxation produced a literal used here


class CoreStore:
    """Recorded cores with their dependency sets.

    A core depends on its assumption literals and on the earlier cores that
    created the relaxation literals it contains.  Cores are kept in creation
    order, so one forward pass propagates validity to a fixpoint.
    """

    def __init__(self):
        self.cores: list[_Core] = []
        self._seen = set()

    def __len__(self) -> int:
        return len(self.cores)

    def record(self, softs, assumptions, parents) -> None:
        key = (tuple(sorted(softs)), frozenset(assumptions))
        if key in self._seen:
            return
        self._seen.add(key)
        self.cores.append(_Core(tuple(softs), frozenset(assumptions), frozenset(parents)))

    def valid_cores(self, assumptions) -> list:
        present = set(assumptions)
        valid: list[int] = []
        ok = set()
        for i, c in enumerate(self.cores):
            if c.assumptions <= present and c.parents <= ok:
                ok.add(i)
                valid.append(i)
        return [self.cores[i] for i in valid]


class MaxSatState:
    def __init__(self, wcnf: Wcnf, config: MaxSatConfig | None = None):
        self.config = config or MaxSatConfig()
        self.solver = SatSolver()
        self.solver._grow(wcnf.hard.nvars)
        for c in wcnf.hard.clauses:
            self.solver.add_clause(c)
        self._sink = _Sink(self.solver)

        weights = [w for _, w in wcnf.soft]
        self.scale = weight_scale(weights + [wcnf.offset])
        merged: dict[int, int] = {}
        for lit, w in wcnf.soft:
            merged[lit] = merged.get(lit, 0) + int(w * self.scale)
        self.softs = merged
        self.offset = int(wcnf.offset * self.scale)
        self.upper = sum(merged.values()) + self.offset
        self.strata = stratify(list(merged.items())) if self.config.stratify else [list(merged.items())]

        self.store = CoreStore()
        self._tot = {}  # (inputs, bound) -> output literal "at least bound inputs hold"
        self._derived = {}  # relaxation literal -> (inputs, bound, creating core index)
        self.stats = {"calls": 0, "sat_calls": 0, "feasibility_checks": 0, "new_cores": 0, "reused_cores": 0}

    # ------------------------------------------------------------ helpers

    def add_hard(self, clause) -> None:
        """Add a hard clause; recorded cores stay valid (they only get stronger)."""
        self.solver.add_clause(clause)

    def set_polarity(self, var: int, sign: bool) -> None:
        self.solver.set_polarity(var, sign)

    def set_early_termination(self, enabled: bool) -> None:
        self.config.early_termination = enabled

    def upper_positive(self) -> Fraction:
        """Objective value reached if every soft literal held."""
        return Fraction(self.upper, self.scale)

    def _at_least(self, inputs: tuple, k: int) -> int:
        key = (inputs, k)
        if key not in self._tot:
            self._tot[key] = sort_unary(self._sink, inputs, upper=k).outputs[k - 1]
        return self._tot[key]

    def _model_value(self, model) -> int:
        total = self.offset
        for lit, w in self.softs.items():
            b = model[abs(lit)]
            if b == (lit > 0):
                total += w
        return total

    # ----------------------------------------------------------- maximize

    def maximize(self, assumptions: Sequence[int] = (), strict: bool | None = None):
        """Maximise the objective under ``assumptions``.

        With ``strict`` None the exact optimum is returned.  Otherwise the
        caller only asks whether the optimum is ``>= 0`` (strict False) or
        ``> 0`` (strict True), and an :class:`EarlyStop` may be returned.
        Unsatisfiable hard clauses under ``assumptions`` raise
        :class:`MaxSatInfeasible` in every mode.
        """
        self.stats["calls"] += 1
        cfg = self.config
        A = list(dict.fromkeys(assumptions))
        A_set = set(A)
        early = strict is not None and cfg.early_termination
        threshold = 1 if strict else 0

        active: dict[int, int] = {}
        pending = [list(s) for s in self.strata]
        for lit, w in pending.pop(0) if pending else []:
            active[lit] = active.get(lit, 0) + w
        cost = 0
        used_assumptions: set[int] = set()
        live_cores: set[int] = set()  # store indices of cores processed in this call

        replay = []
        if cfg.reuse_cores:
            valid = self.store.valid_cores(A_set)
            index = {id(c): i for i, c in enumerate(self.store.cores)}
            replay = [(index[id(c)], c) for c in valid]

        def process(softs, core_idx):
            nonlocal cost
            wmin = min(active[l] for l in softs)
            cost += wmin
            for l in softs:
                active[l] -= wmin
                if active[l] == 0:
                    del active[l]
                if l in self._derived:
                    inputs, k, _ = self._derived[l]
                    if k < len(inputs):
                        nl = -self._at_least(inputs, k + 1)
                        self._derived.setdefault(nl, (inputs, k + 1, core_idx))
                        active[nl] = active.get(nl, 0) + wmin
            if len(softs) > 1:
                inputs = tuple(sorted(-l for l in softs))
                nl = -self._at_least(inputs, 2)
                self._derived.setdefault(nl, (inputs, 2, core_idx))
                active[nl] = active.get(nl, 0) + wmin

        def try_replay():
            nonlocal replay
            progress = True
            while progress:
                progress = False
                rest = []
                for idx, c in replay:
                    if all(l in active for l in c.softs):
                        process(c.softs, idx)
                        live_cores.add(idx)
                        used_assumptions.update(c.assumptions)
                        self.stats["reused_cores"] += 1
                        progress = True
                    else:
                        rest.append((idx, c))
                replay = rest

        def assumption_core():
            return frozenset(used_assumptions)

        def negative():
            if not seen_model:
                # a bound-based stop says nothing about the hard clauses themselves
                self.stats["feasibility_checks"] += 1
                if not self.solver.solve(A):
                    raise MaxSatInfeasible(list(self.solver.core))
            return EarlyStop(False, Fraction(self.upper - cost, self.scale), None, assumption_core())

        seen_model = False
        try_replay()
        while True:
            if early and self.upper - cost < threshold:
                return negative()
            self.stats["sat_calls"] += 1
            if self.solver.solve(A + list(active)):
                seen_model = True
                model = self.solver.model
                if pending:
                    if early:
                        val = self._model_value(model)
                        if val >= threshold:
                            return EarlyStop(True, Fraction(val, self.scale), model, assumption_core())
                    for lit, w in pending.pop(0):
                        active[lit] = active.get(lit, 0) + w
                    try_replay()
                    continue
                val = self._model_value(model)
                assert val == self.upper - cost, "OLL bound and model value disagree"
                return Optimum(Fraction(val, self.scale), model, assumption_core())

            core = self.solver.core
            a_part = [x for x in core if x in A_set]
            s_part = [x for x in core if x not in A_set and x in active]
            if not s_part:
                raise MaxSatInfeasible(a_part)
            self.stats["new_cores"] += 1
            parents = {self._derived[l][2] for l in s_part if l in self._derived and self._derived[l][2] is not None}
            used_assumptions.update(a_part)
            idx = len(self.store)
            if cfg.reuse_cores:
                self.store.record(s_part, a_part, parents)
                if len(self.store) == idx:  # already known: find its index
                    idx = next(
                        i for i, c in enumerate(self.store.cores)
                        if sorted(c.softs) == sorted(s_part) and c.assumptions == frozenset(a_part)
                    )
            process(s_part, idx if cfg.reuse_cores else None)
            live_cores.add(idx)


def maximize(wcnf: Wcnf, assumptions: Sequence[int] = (), config: MaxSatConfig | None = None):
    """One-shot convenience wrapper returning the exact optimum."""
    return MaxSatState(wcnf, config).maximize(assumptions)
