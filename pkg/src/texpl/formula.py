"""CNF / weighted CNF containers, constraint gadgets and DIMACS I/O.

Literals are DIMACS-style signed integers.  Gadgets only expose their input
and output literals; auxiliary variables stay inside the formula.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Iterable, Sequence


class Cnf:
    """Clause list plus a variable pool with optional names for each variable."""

    def __init__(self):
        self.clauses: list[list[int]] = []
        self.nvars = 0
        self.names: dict[int, str] = {}
        self._true = None

    def new_var(self, name: str | None = None) -> int:
        self.nvars += 1
        if name is not None:
            self.names[self.nvars] = name
        return self.nvars

    def add(self, clause: Iterable[int]) -> None:
        c = list(clause)
        if not c:
            raise ValueError("empty clause; use add_false() to encode falsity")
        for x in c:
            if x == 0 or abs(x) > self.nvars:
                raise ValueError(f"literal {x} references an unallocated variable")
        self.clauses.append(c)

    def extend(self, clauses: Iterable[Iterable[int]]) -> None:
        for c in clauses:
            self.add(c)

    def true_lit(self) -> int:
        """A literal fixed to true (allocated on first use)."""
        if self._true is None:
            self._true = self.new_var("true")
            self.add([self._true])
        return self._true

    def false_lit(self) -> int:
        return -self.true_lit()

    def add_false(self) -> None:
        """Make the formula unsatisfiable with the clause pair (x) and (-x)."""
        x = self.new_var("contradiction")
        self.add([x])
        self.add([-x])

    def name_of(self, lit: int) -> str:
        name = self.names.get(abs(lit), f"x{abs(lit)}")
        return name if lit > 0 else f"-{name}"


@dataclass
class Wcnf:
    """Hard clauses plus weighted soft literals and a constant offset.

    The objective of an assignment is the weight of its satisfied soft
    literals plus ``offset``.
    """

    hard: Cnf = field(default_factory=Cnf)
    soft: list = field(default_factory=list)  # (lit, Fraction > 0)
    offset: Fraction = Fraction(0)

    def add_soft(self, lit: int, weight) -> None:
        weight = Fraction(weight)
        if weight <= 0:
            raise ValueError("soft weights must be positive")
        self.soft.append((lit, weight))

    def add_term(self, lit: int, coeff) -> None:
        """Add ``coeff * [lit]`` to the objective, keeping soft weights positive."""
        coeff = Fraction(coeff)
        if coeff > 0:
            self.soft.append((lit, coeff))
        elif coeff < 0:
            self.soft.append((-lit, -coeff))
            self.offset += coeff

    def upper_bound(self) -> Fraction:
        """Objective value if every soft literal were satisfied."""
        return sum((w for _, w in self.soft), Fraction(0)) + self.offset

    def value(self, holds) -> Fraction:
        """Objective under an assignment given as a literal -> bool function."""
        return sum((w for lit, w in self.soft if holds(lit)), Fraction(0)) + self.offset


# ------------------------------------------------------------------ gadgets


def add_at_most_one(f: Cnf, lits: Sequence[int]) -> None:
    lits = list(lits)
    if len(lits) <= 5:
        for i in range(len(lits)):
            for j in range(i + 1, len(lits)):
                f.add([-lits[i], -lits[j]])
        return
    # sequential counter: prefix[i] is true when some of lits[0..i] is true
    prev = lits[0]
    for x in lits[1:-1]:
        cur = f.new_var()
        f.add([-prev, cur])
        f.add([-x, cur])
        f.add([-prev, -x])
        prev = cur
    f.add([-prev, -lits[-1]])


def add_exactly_one(f: Cnf, lits: Sequence[int]) -> None:
    if not lits:
        raise ValueError("exactly-one over an empty literal list")
    f.add(list(lits))
    add_at_most_one(f, lits)


def define_and(f: Cnf, lits: Sequence[int], name: str | None = None) -> int:
    """Fresh literal equivalent to the conjunction of ``lits``."""
    lits = list(dict.fromkeys(lits))
    if not lits:
        return f.true_lit()
    if len(lits) == 1:
        return lits[0]
    y = f.new_var(name)
    for x in lits:
        f.add([-y, x])
    f.add([y] + [-x for x in lits])
    return y


def define_or(f: Cnf, lits: Sequence[int], name: str | None = None) -> int:
    return -define_and(f, [-x for x in lits], name)


def define_iff(f: Cnf, a: int, b: int) -> int:
    y = f.new_var()
    f.add([-y, -a, b])
    f.add([-y, a, -b])
    f.add([y, a, b])
    f.add([y, -a, -b])
    return y


@dataclass(frozen=True)
class UnaryCounter:
    """Sorted unary view of a literal multiset: ``outputs[k-1]`` holds iff at least k inputs hold."""

    inputs: tuple
    outputs: tuple

    @property
    def width(self) -> int:
        return len(self.outputs)


def sort_unary(f: Cnf, lits: Sequence[int], upper: int | None = None) -> UnaryCounter:
    """Totalizer over ``lits``; with ``upper`` only the first ``upper`` outputs are built."""
    lits = tuple(lits)
    if not lits:
        raise ValueError("cannot sort an empty literal list")
    ub = len(lits) if upper is None else max(0, min(upper, len(lits)))
    return UnaryCounter(lits, tuple(_totalize(f, list(lits), ub)))


def _totalize(f: Cnf, lits: list, ub: int) -> list:
    if len(lits) == 1:
        return lits[:ub]
    mid = len(lits) // 2
    a = _totalize(f, lits[:mid], ub)
    b = _totalize(f, lits[mid:], ub)
    full_a, full_b = len(a) == mid, len(b) == len(lits) - mid
    size = min(len(lits), ub)
    r = [f.new_var() for _ in range(size)]
    # upward: a_i and b_j imply r_{i+j}
    for i in range(len(a) + 1):
        for j in range(len(b) + 1):
            k = min(i + j, size)
            if k == 0:
                continue
            clause = [r[k - 1]]
            if i:
                clause.append(-a[i - 1])
            if j:
                clause.append(-b[j - 1])
            f.add(clause)
    # downward: not a_{i+1} and not b_{j+1} imply not r_{i+j+1}
    for i in range(len(a) + 1):
        for j in range(len(b) + 1):
            k = i + j + 1
            if k > size:
                continue
            clause = [-r[k - 1]]
            if i < len(a):
                clause.append(a[i])
            elif not full_a:
                continue
            if j < len(b):
                clause.append(b[j])
            elif not full_b:
                continue
            f.add(clause)
    return r


def cardinality_geq_lit(f: Cnf, lits: Sequence[int], k: int) -> int:
    """Literal equivalent to ``sum(lits) >= k``."""
    if k <= 0:
        return f.true_lit()
    if k > len(lits):
        return f.false_lit()
    return sort_unary(f, lits, upper=k).outputs[k - 1]


def add_cardinality_geq(f: Cnf, lits: Sequence[int], k: int) -> None:
    """Require ``sum(lits) >= k``; a bound above ``len(lits)`` makes ``f`` unsatisfiable."""
    if k <= 0:
        return
    if k > len(lits):
        f.add_false()
        return
    if k == 1:
        f.add(list(lits))
        return
    f.add([sort_unary(f, lits, upper=k).outputs[k - 1]])


def add_cardinality_leq(f: Cnf, lits: Sequence[int], k: int) -> None:
    """Require ``sum(lits) <= k``."""
    if k >= len(lits):
        return
    if k < 0:
        f.add_false()
        return
    f.add([-sort_unary(f, lits, upper=k + 1).outputs[k]])


def add_unary_comparator(f: Cnf, s: UnaryCounter, t: UnaryCounter, mode: str = "lt") -> int:
    """Flag literal equivalent to ``value(s) < value(t)`` (``lt``) or ``<=`` (``le``).

    Both counters must be full-width and of equal width; the bit strings are
    compared position by position with the chains ``lt_i`` and ``eq_i``.
    """
    if s.width != t.width:
        raise ValueError(f"comparator width mismatch: {s.width} vs {t.width}")
    if mode not in ("lt", "le"):
        raise ValueError(f"unknown comparator mode {mode!r}")
    lt, eq = False, True  # lt_0, eq_0 as constants
    for si, ti in zip(s.outputs, t.outputs):
        # step = eq_{i-1} and t_i and not s_i
        step = _and(f, [eq, ti, -si])
        lt = _or(f, [lt, step])
        eq = _and(f, [eq, _iff(f, ti, si)])
    flag = lt if mode == "lt" else _or(f, [lt, eq])
    if flag is True:
        return f.true_lit()
    if flag is False:
        return f.false_lit()
    return flag


def _and(f, items):
    lits = []
    for x in items:
        if x is False:
            return False
        if x is not True:
            lits.append(x)
    if not lits:
        return True
    return define_and(f, lits)


def _or(f, items):
    lits = []
    for x in items:
        if x is True:
            return True
        if x is not False:
            lits.append(x)
    if not lits:
        return False
    return define_or(f, lits)


def _iff(f, a, b):
    return define_iff(f, a, b)


# ------------------------------------------------------------------ scaling


def weight_scale(weights: Iterable[Fraction], cap: int = 10**6) -> int:
    """Smallest power of ten (up to ``cap``) making every weight integral.

    Weights needing more precision fall back to the lcm of the denominators,
    which keeps the arithmetic exact.
    """
    dens = {Fraction(w).denominator for w in weights}
    p = 1
    while p <= cap:
        if all(p % d == 0 for d in dens):
            return p
        p *= 10
    out = 1
    for d in dens:
        out = out * d // math.gcd(out, d)
    return out


# ------------------------------------------------------------------- DIMACS


def dump_cnf(f: Cnf) -> str:
    lines = [f"p cnf {f.nvars} {len(f.clauses)}"]
    lines += [" ".join(map(str, c)) + " 0" for c in f.clauses]
    return "\n".join(lines) + "\n"


def dump_dimacs(w: Wcnf) -> str:
    """Weighted DIMACS in the classic ``p wcnf <vars> <clauses> <top>`` dialect."""
    scale = weight_scale([x for _, x in w.soft] + [w.offset])
    softs = [(int(x * scale), lit) for lit, x in w.soft]
    top = 1 + sum(x for x, _ in softs)
    ncl = len(w.hard.clauses) + len(softs)
    lines = [f"c scale {scale} offset {_fmt(w.offset)}", f"p wcnf {w.hard.nvars} {ncl} {top}"]
    lines += [f"{top} " + " ".join(map(str, c)) + " 0" for c in w.hard.clauses]
    lines += [f"{x} {lit} 0" for x, lit in softs]
    return "\n".join(lines) + "\n"


def _fmt(x: Fraction) -> str:
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


@dataclass
class DimacsDocument:
    """Raw contents of a DIMACS file: hard clauses and (weight, clause) softs."""

    nvars: int
    hard: list
    soft: list  # (int weight, clause)
    weighted: bool
    scale: int = 1
    offset: Fraction = Fraction(0)

    def to_cnf(self) -> Cnf:
        f = Cnf()
        f.nvars = self.nvars
        for c in self.hard:
            if c:
                f.add(c)
            else:
                f.add_false()
        return f

    def to_wcnf(self) -> Wcnf:
        """Soft clauses become soft literals; non-unit ones get a relaxation selector."""
        w = Wcnf(self.to_cnf(), [], self.offset)
        for weight, c in self.soft:
            if weight <= 0:
                continue
            x = Fraction(weight, self.scale)
            if len(c) == 1:
                w.add_soft(c[0], x)
            elif c:  # an empty soft clause is never satisfied and adds nothing
                sel = w.hard.new_var()
                w.hard.add([-sel] + list(c))
                w.add_soft(sel, x)
        return w


def parse_dimacs(text: str) -> DimacsDocument:
    nvars, top, weighted = 0, None, False
    scale, offset = 1, Fraction(0)
    hard, soft = [], []
    pending: list[int] = []
    for raw in text.splitlines():
        line = raw.strip()
        if not line:
            continue
        if line.startswith("c"):
            parts = line.split()
            if len(parts) >= 5 and parts[1] == "scale" and parts[3] == "offset":
                scale, offset = int(parts[2]), Fraction(parts[4])
            continue
        if line.startswith("p"):
            parts = line.split()
            if len(parts) < 4 or parts[1] not in ("cnf", "wcnf"):
                raise ValueError(f"bad header: {line!r}")
            weighted = parts[1] == "wcnf"
            nvars = int(parts[2])
            if weighted:
                top = int(parts[4]) if len(parts) > 4 else None
            continue
        pending.extend(int(x) for x in line.split())
        while 0 in pending:
            cut = pending.index(0)
            item, pending = pending[:cut], pending[cut + 1 :]
            if weighted:
                if not item:
                    raise ValueError("weighted clause without a weight")
                wt, lits = item[0], item[1:]
                if top is not None and wt >= top:
                    hard.append(lits)
                else:
                    soft.append((wt, lits))
            else:
                hard.append(item)
            for x in item[1:] if weighted else item:
                nvars = max(nvars, abs(x))
    return DimacsDocument(nvars, hard, soft, weighted, scale, offset)
