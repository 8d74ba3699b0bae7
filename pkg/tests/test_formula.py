import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from support import brute_max
from texpl.formula import (
    Cnf,
    Wcnf,
    add_at_most_one,
    add_cardinality_geq,
    add_cardinality_leq,
    add_exactly_one,
    add_unary_comparator,
    cardinality_geq_lit,
    define_and,
    define_or,
    dump_cnf,
    dump_dimacs,
    parse_dimacs,
    sort_unary,
    weight_scale,
)
from texpl.sat import SatSolver


def feasible(f: Cnf, lits):
    s = SatSolver(f.clauses)
    s._grow(f.nvars)
    return s.solve(list(lits))


def forced(f: Cnf, fixed, lit):
    """True/False when ``fixed`` forces ``lit`` either way, None when it is free or infeasible."""
    pos, neg = feasible(f, list(fixed) + [lit]), feasible(f, list(fixed) + [-lit])
    return pos if pos != neg else None


def fix(xs, bits):
    return [x if b else -x for x, b in zip(xs, bits)]


def bit_vectors(n):
    return itertools.product((False, True), repeat=n)


def inputs(n):
    f = Cnf()
    return f, [f.new_var() for _ in range(n)]


@pytest.mark.parametrize("n", [1, 2, 3, 5, 6, 8])
def test_at_most_one_and_exactly_one(n):
    for exact in (False, True):
        f, xs = inputs(n)
        (add_exactly_one if exact else add_at_most_one)(f, xs)
        for bits in bit_vectors(n):
            ok = sum(bits) == 1 if exact else sum(bits) <= 1
            assert feasible(f, fix(xs, bits)) == ok


def test_exactly_one_rejects_empty():
    with pytest.raises(ValueError):
        add_exactly_one(Cnf(), [])


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_and_or_definitions(n):
    f, xs = inputs(n)
    a = define_and(f, xs)
    o = define_or(f, xs)
    for bits in bit_vectors(n):
        assert forced(f, fix(xs, bits), a) == all(bits)
        assert forced(f, fix(xs, bits), o) == any(bits)


@pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
def test_totalizer_counts_exactly(n):
    for upper in [None] + list(range(1, n + 1)):
        f, xs = inputs(n)
        u = sort_unary(f, xs, upper)
        for bits in bit_vectors(n):
            got = [forced(f, fix(xs, bits), o) for o in u.outputs]
            assert got == [sum(bits) >= k for k in range(1, u.width + 1)]


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_cardinality_constraints(n):
    for k in range(-1, n + 2):
        for kind in ("geq", "leq", "lit"):
            f, xs = inputs(n)
            if kind == "geq":
                add_cardinality_geq(f, xs, k)
                want = lambda b: sum(b) >= k
            elif kind == "leq":
                add_cardinality_leq(f, xs, k)
                want = lambda b: sum(b) <= k
            else:
                f.add([cardinality_geq_lit(f, xs, k)])
                want = lambda b: sum(b) >= k
            for bits in bit_vectors(n):
                assert feasible(f, fix(xs, bits)) == want(bits), (kind, k, bits)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_unary_comparator(n):
    for mode in ("lt", "le"):
        f, xs = inputs(2 * n)
        s, t = sort_unary(f, xs[:n]), sort_unary(f, xs[n:])
        flag = add_unary_comparator(f, s, t, mode)
        for bits in bit_vectors(2 * n):
            a, b = sum(bits[:n]), sum(bits[n:])
            want = a < b if mode == "lt" else a <= b
            assert forced(f, fix(xs, bits), flag) == want


def test_comparator_width_mismatch():
    f, xs = inputs(3)
    with pytest.raises(ValueError):
        add_unary_comparator(f, sort_unary(f, xs[:1]), sort_unary(f, xs[1:]))


def test_cnf_rejects_unallocated_and_empty():
    f = Cnf()
    with pytest.raises(ValueError):
        f.add([1])
    with pytest.raises(ValueError):
        f.add([])


def test_add_term_keeps_weights_positive():
    w = Wcnf()
    x = w.hard.new_var()
    w.add_term(x, Fraction(-3, 4))
    w.add_term(x, 2)
    assert w.soft == [(-x, Fraction(3, 4)), (x, Fraction(2))]
    assert w.offset == Fraction(-3, 4)
    assert w.value(lambda lit: lit == x) == Fraction(5, 4)


def test_weight_scale():
    assert weight_scale([Fraction("0.72284"), Fraction("0.5")]) == 100000
    assert weight_scale([Fraction(1)]) == 1
    assert weight_scale([Fraction(1, 3), Fraction(1, 7)]) == 21


def test_example_weights_dump():
    w = Wcnf()
    for x in ("0.72284", "0.41527", "0.41645", "0.16249", "0.72452"):
        w.add_soft(w.hard.new_var(), Fraction(x))
    text = dump_dimacs(w)
    weights = [int(line.split()[0]) for line in text.splitlines()[2:]]
    assert weights == [72284, 41527, 41645, 16249, 72452]
    assert text.splitlines()[0] == "c scale 100000 offset 0"


def test_empty_formula_dump():
    assert "p wcnf 0 0 1" in dump_dimacs(Wcnf())


@given(st.integers(0, 10**6))
def test_dimacs_roundtrip_preserves_optimum(seed):
    rng = random.Random(seed)
    w = Wcnf()
    n = rng.randint(1, 6)
    for _ in range(n):
        w.hard.new_var()
    for _ in range(rng.randint(0, 6)):
        w.hard.add([rng.choice((1, -1)) * rng.randint(1, n) for _ in range(rng.randint(1, 3))])
    for _ in range(rng.randint(1, 5)):
        w.add_term(rng.choice((1, -1)) * rng.randint(1, n), Fraction(rng.randint(-20, 20), rng.choice((1, 2, 4, 10))) or 1)
    back = parse_dimacs(dump_dimacs(w)).to_wcnf()
    assert brute_max(back) == brute_max(w)
    cnf = parse_dimacs(dump_cnf(w.hard)).to_cnf()
    assert cnf.clauses == w.hard.clauses


def test_parse_dimacs_rejects_bad_header():
    with pytest.raises(ValueError):
        parse_dimacs("p dnf 3 1\n1 0\n")
