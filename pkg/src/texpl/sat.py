"""Incremental CDCL SAT solver with assumptions.

External literals follow the DIMACS convention (``v`` / ``-v`` for variable
``v >= 1``).  Internally a literal is ``2*v + sign`` so that negation is
``lit ^ 1`` and per-literal arrays can be indexed directly.

The solver keeps its clause database between calls; :meth:`SatSolver.solve`
takes a list of assumption literals and, when they are inconsistent with the
clauses, :attr:`SatSolver.core` holds the subset of assumptions involved in
the final conflict.
"""

from __future__ import annotations

import time
from typing import Iterable, Sequence


class SolverTimeout(Exception):
    """Raised when a solve call runs past the solver's deadline."""


def _luby(y: float, x: int) -> float:
    size, seq = 1, 0
    while size < x + 1:
        seq += 1
        size = 2 * size + 1
    while size - 1 != x:
        size = (size - 1) >> 1
        seq -= 1
        x %= size
    return y**seq


class SatSolver:
    def __init__(self, clauses: Iterable[Sequence[int]] = (), *, restart_base: int = 100, var_decay: float = 0.95):
        self.nvars = 0
        self.val = [0, 0]
        self.level = [0]
        self.reason = [None]
        self.activity = [0.0]
        self.phase = [False]
        self.user_phase = [None]
        self.seen = [0]
        self.heap_idx = [-1]
        self.heap = []
        self.watches = [[], []]

        self.clauses = []
        self.learnts = []
        self.lbd = {}
        self.trail = []
        self.trail_lim = []
        self.qhead = 0
        self.ok = True

        self.var_inc = 1.0
        self.var_decay = var_decay
        self.restart_base = restart_base
        self.max_learnts = 4000.0
        self.deadline = None

        self.model = None
        self.core = None
        self.stats = {"solves": 0, "conflicts": 0, "decisions": 0, "propagations": 0, "restarts": 0}
        for c in clauses:
            self.add_clause(c)

    # ----------------------------------------------------------- variables

    def new_var(self) -> int:
        self._grow(self.nvars + 1)
        return self.nvars

    def _grow(self, n: int) -> None:
        while self.nvars < n:
            self.nvars += 1
            v = self.nvars
            self.val += [0, 0]
            self.level.append(0)
            self.reason.append(None)
            self.activity.append(0.0)
            self.phase.append(False)
            self.user_phase.append(None)
            self.seen.append(0)
            self.heap_idx.append(-1)
            self.watches += [[], []]
            self._heap_insert(v)

    def set_polarity(self, var: int, sign: bool | None) -> None:
        """Prefer assigning ``var`` to ``sign`` when branching (None clears the hint)."""
        if var > self.nvars:
            self._grow(var)
        self.user_phase[var] = sign

    # ------------------------------------------------------------- clauses

    def add_clause(self, clause: Sequence[int]) -> None:
        if self.trail_lim:
            self._cancel_until(0)
        if not self.ok:
            return
        lits = []
        val = self.val
        top = 0
        for x in clause:
            v = x if x > 0 else -x
            if v == 0:
                raise ValueError("literal 0 is not allowed")
            if v > top:
                top = v
        if top > self.nvars:
            self._grow(top)
        present = set()
        for x in clause:
            lit = 2 * x if x > 0 else -2 * x + 1
            if lit in present:
                continue
            if lit ^ 1 in present or val[lit] == 1:
                return  # tautology or already satisfied at the root
            if val[lit] == -1:
                continue
            present.add(lit)
            lits.append(lit)
        if not lits:
            self.ok = False
        elif len(lits) == 1:
            self._assign(lits[0], None)
            if self._propagate() is not None:
                self.ok = False
        else:
            self.clauses.append(lits)
            self.watches[lits[0]].append(lits)
            self.watches[lits[1]].append(lits)

    def add_clauses(self, clauses: Iterable[Sequence[int]]) -> None:
        for c in clauses:
            self.add_clause(c)

    # --------------------------------------------------------- assignment

    def _assign(self, lit: int, reason) -> None:
        self.val[lit] = 1
        self.val[lit ^ 1] = -1
        v = lit >> 1
        self.level[v] = len(self.trail_lim)
        self.reason[v] = reason
        self.trail.append(lit)

    def _cancel_until(self, lvl: int) -> None:
        if len(self.trail_lim) <= lvl:
            return
        val, reason, phase, trail = self.val, self.reason, self.phase, self.trail
        idx = self.heap_idx
        stop = self.trail_lim[lvl]
        for i in range(len(trail) - 1, stop - 1, -1):
            lit = trail[i]
            v = lit >> 1
            val[lit] = 0
            val[lit ^ 1] = 0
            reason[v] = None
            phase[v] = not (lit & 1)
            if idx[v] < 0:
                self._heap_insert(v)
        del trail[stop:]
        del self.trail_lim[lvl:]
        self.qhead = stop

    def _propagate(self):
        val, watches, trail = self.val, self.watches, self.trail
        level, reason = self.level, self.reason
        dl = len(self.trail_lim)
        qhead = self.qhead
        confl = None
        start = qhead
        while qhead < len(trail):
            fl = trail[qhead] ^ 1
            qhead += 1
            ws = watches[fl]
            i = j = 0
            n = len(ws)
            while i < n:
                c = ws[i]
                i += 1
                if c[0] == fl:
                    c[0] = c[1]
                    c[1] = fl
                first = c[0]
                if val[first] == 1:
                    ws[j] = c
                    j += 1
                    continue
                for k in range(2, len(c)):
                    lk = c[k]
                    if val[lk] != -1:
                        c[1] = lk
                        c[k] = fl
                        watches[lk].append(c)
                        break
                else:
                    ws[j] = c
                    j += 1
                    if val[first] == -1:
                        confl = c
                        while i < n:
                            ws[j] = ws[i]
                            j += 1
                            i += 1
                    else:
                        val[first] = 1
                        val[first ^ 1] = -1
                        v = first >> 1
                        level[v] = dl
                        reason[v] = c
                        trail.append(first)
            del ws[j:]
            if confl is not None:
                break
        self.stats["propagations"] += qhead - start
        self.qhead = qhead
        return confl

    # ---------------------------------------------------------------- heap

    def _heap_insert(self, v: int) -> None:
        heap, idx, act = self.heap, self.heap_idx, self.activity
        i = len(heap)
        heap.append(v)
        a = act[v]
        while i > 0:
            parent = (i - 1) >> 1
            pv = heap[parent]
            if act[pv] >= a:
                break
            heap[i] = pv
            idx[pv] = i
            i = parent
        heap[i] = v
        idx[v] = i

    def _heap_pop(self) -> int:
        heap, idx, act = self.heap, self.heap_idx, self.activity
        top = heap[0]
        idx[top] = -1
        last = heap.pop()
        if heap:
            n = len(heap)
            a = act[last]
            i = 0
            while True:
                c = 2 * i + 1
                if c >= n:
                    break
                r = c + 1
                if r < n and act[heap[r]] > act[heap[c]]:
                    c = r
                if act[heap[c]] <= a:
                    break
                heap[i] = heap[c]
                idx[heap[i]] = i
                i = c
            heap[i] = last
            idx[last] = i
        return top

    def _bump(self, v: int) -> None:
        act = self.activity
        act[v] += self.var_inc
        if act[v] > 1e100:
            for u in range(1, self.nvars + 1):
                act[u] *= 1e-100
            self.var_inc *= 1e-100
        i = self.heap_idx[v]
        if i > 0:
            heap, idx = self.heap, self.heap_idx
            a = act[v]
            while i > 0:
                parent = (i - 1) >> 1
                pv = heap[parent]
                if act[pv] >= a:
                    break
                heap[i] = pv
                idx[pv] = i
                i = parent
            heap[i] = v
            idx[v] = i

    def _pick_branch(self):
        val = self.val
        while self.heap:
            v = self._heap_pop()
            if val[2 * v] == 0:
                pref = self.user_phase[v]
                if pref is None:
                    pref = self.phase[v]
                return 2 * v if pref else 2 * v + 1
        return None

    # ------------------------------------------------------------ analysis

    def _analyze(self, confl):
        seen, level, reason, trail = self.seen, self.level, self.reason, self.trail
        dl = len(self.trail_lim)
        out = [0]
        path = 0
        p = None
        idx = len(trail) - 1
        c = confl
        while True:
            for q in c if p is None else c[1:]:
                v = q >> 1
                if not seen[v] and level[v] > 0:
                    self._bump(v)
                    seen[v] = 1
                    if level[v] >= dl:
                        path += 1
                    else:
                        out.append(q)
            while not seen[trail[idx] >> 1]:
                idx -= 1
            p = trail[idx]
            idx -= 1
            c = reason[p >> 1]
            seen[p >> 1] = 0
            path -= 1
            if path == 0:
                break
        out[0] = p ^ 1

        # drop literals implied by the rest of the clause (local minimisation)
        kept = [out[0]]
        for q in out[1:]:
            r = reason[q >> 1]
            if r is None:
                kept.append(q)
                continue
            for x in r[1:]:
                u = x >> 1
                if not seen[u] and level[u] > 0:
                    kept.append(q)
                    break
        for q in out[1:]:
            seen[q >> 1] = 0

        if len(kept) == 1:
            return kept, 0, 1
        best = 1
        for k in range(2, len(kept)):
            if level[kept[k] >> 1] > level[kept[best] >> 1]:
                best = k
        kept[1], kept[best] = kept[best], kept[1]
        lbd = len({level[q >> 1] for q in kept})
        return kept, level[kept[1] >> 1], lbd

    def _analyze_final(self, a: int) -> list:
        """Assumptions responsible for assumption ``a`` being false."""
        core = [a]
        seen, level, reason, trail = self.seen, self.level, self.reason, self.trail
        if level[a >> 1] == 0:
            return core
        seen[a >> 1] = 1
        for i in range(len(trail) - 1, self.trail_lim[0] - 1, -1):
            x = trail[i]
            v = x >> 1
            if seen[v]:
                r = reason[v]
                if r is None:
                    core.append(x)
                else:
                    for q in r[1:]:
                        if level[q >> 1] > 0:
                            seen[q >> 1] = 1
                seen[v] = 0
        seen[a >> 1] = 0
        return core

    # --------------------------------------------------------------- solve

    def solve(self, assumptions: Sequence[int] = ()) -> bool:
        """Decide the clauses under ``assumptions``; sets :attr:`model` or :attr:`core`."""
        self.stats["solves"] += 1
        if self.deadline is not None and time.monotonic() > self.deadline:
            raise SolverTimeout()
        self.model = None
        self.core = None
        if self.trail_lim:
            self._cancel_until(0)
        if not self.ok:
            self.core = []
            return False
        top = max((abs(x) for x in assumptions), default=0)
        if top > self.nvars:
            self._grow(top)
        assumps = [2 * x if x > 0 else -2 * x + 1 for x in assumptions]
        if self._propagate() is not None:
            self.ok = False
            self.core = []
            return False
        restarts = 0
        try:
            while True:
                budget = _luby(2, restarts) * self.restart_base
                status = self._search(assumps, budget)
                if status is not None:
                    return status
                restarts += 1
                self.stats["restarts"] += 1
        finally:
            self._cancel_until(0)

    def _search(self, assumps, budget):
        conflicts = 0
        stats = self.stats
        val = self.val
        while True:
            confl = self._propagate()
            if confl is not None:
                conflicts += 1
                stats["conflicts"] += 1
                if not self.trail_lim:
                    self.ok = False
                    self.core = []
                    return False
                learnt, bt, lbd = self._analyze(confl)
                self._cancel_until(bt)
                if len(learnt) == 1:
                    self._assign(learnt[0], None)
                else:
                    self.learnts.append(learnt)
                    self.lbd[id(learnt)] = lbd
                    self.watches[learnt[0]].append(learnt)
                    self.watches[learnt[1]].append(learnt)
                    self._assign(learnt[0], learnt)
                self.var_inc /= self.var_decay
                if self.deadline is not None and conflicts % 64 == 0 and time.monotonic() > self.deadline:
                    raise SolverTimeout()
                continue

            if conflicts >= budget:
                self._cancel_until(0)
                if len(self.learnts) - len(self.trail) >= self.max_learnts:
                    self._reduce_db()
                return None

            nxt = None
            while len(self.trail_lim) < len(assumps):
                p = assumps[len(self.trail_lim)]
                if val[p] == 1:
                    self.trail_lim.append(len(self.trail))
                elif val[p] == -1:
                    self.core = [self._lit_out(x) for x in self._analyze_final(p)]
                    return False
                else:
                    nxt = p
                    break
            if nxt is None:
                nxt = self._pick_branch()
                if nxt is None:
                    self.model = [False] + [val[2 * v] == 1 for v in range(1, self.nvars + 1)]
                    return True
                stats["decisions"] += 1
            self.trail_lim.append(len(self.trail))
            self._assign(nxt, None)

    def _reduce_db(self) -> None:
        """Forget the less useful half of the learnt clauses (run at level 0)."""
        lbd = self.lbd
        order = sorted(self.learnts, key=lambda c: (lbd[id(c)], len(c)))
        keep = order[: len(order) // 2] + [c for c in order[len(order) // 2 :] if lbd[id(c)] <= 2]
        self.learnts = keep
        self.lbd = {id(c): lbd[id(c)] for c in keep}
        self.max_learnts *= 1.1
        self._rebuild_watches()

    def _rebuild_watches(self) -> None:
        val = self.val
        for ws in self.watches:
            ws.clear()
        for db in (self.clauses, self.learnts):
            live = []
            for c in db:
                if any(val[x] == 1 for x in c):
                    continue  # satisfied at the root for good
                c.sort(key=lambda x: val[x] == -1)
                live.append(c)
                self.watches[c[0]].append(c)
                self.watches[c[1]].append(c)
            db[:] = live
        self.lbd = {id(c): self.lbd[id(c)] for c in self.learnts}

    # ------------------------------------------------------------- results

    @staticmethod
    def _lit_out(lit: int) -> int:
        return -(lit >> 1) if lit & 1 else lit >> 1

    def value(self, lit: int) -> bool:
        """Truth value of ``lit`` in the last model."""
        v = abs(lit)
        b = self.model[v] if v < len(self.model) else False
        return b if lit > 0 else not b

    def model_lits(self) -> list:
        return [v if self.model[v] else -v for v in range(1, len(self.model))]
