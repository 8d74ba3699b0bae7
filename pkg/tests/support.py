"""Brute-force helpers shared by the tests."""

import itertools
import random


def assignments(nvars):
    for bits in itertools.product((False, True), repeat=nvars):
        yield (None,) + bits


def satisfies(model, clause):
    return any(model[abs(x)] == (x > 0) for x in clause)


def brute_sat(clauses, nvars, assumptions=()):
    for m in assignments(nvars):
        if all(satisfies(m, c) for c in clauses) and all(m[abs(a)] == (a > 0) for a in assumptions):
            return m
    return None


def random_cnf(rng: random.Random, nvars, nclauses, width=3):
    out = []
    for _ in range(nclauses):
        k = rng.randint(1, width)
        vs = rng.sample(range(1, nvars + 1), min(k, nvars))
        out.append([v if rng.random() < 0.5 else -v for v in vs])
    return out


def brute_max(wcnf):
    """Exhaustive maximum of a Wcnf objective, or None if hard clauses are unsatisfiable."""
    best = None
    for m in assignments(wcnf.hard.nvars):
        if all(satisfies(m, c) for c in wcnf.hard.clauses):
            val = wcnf.value(lambda lit: m[abs(lit)] == (lit > 0))
            best = val if best is None or val > best else best
    return best


def brute_max_vectorized(wcnf, assumptions=()):
    """Same as :func:`brute_max` under assumptions, vectorised for up to ~20 variables."""
    import math
    from fractions import Fraction

    import numpy as np

    n = wcnf.hard.nvars
    bits = ((np.arange(2**n)[:, None] >> np.arange(n)[None, :]) & 1).astype(bool)
    truth = lambda lit: bits[:, abs(lit) - 1] if lit > 0 else ~bits[:, abs(lit) - 1]
    ok = np.ones(2**n, dtype=bool)
    for c in list(wcnf.hard.clauses) + [[a] for a in assumptions]:
        sat = np.zeros(2**n, dtype=bool)
        for lit in c:
            sat |= truth(lit)
        ok &= sat
    if not ok.any():
        return None
    scale = math.lcm(*(Fraction(w).denominator for _, w in wcnf.soft)) if wcnf.soft else 1
    total = np.zeros(2**n, dtype=np.int64)
    for lit, w in wcnf.soft:
        total += truth(lit).astype(np.int64) * int(w * scale)
    return Fraction(int(total[ok].max()), scale) + wcnf.offset
