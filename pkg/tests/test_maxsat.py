import itertools
import random
from fractions import Fraction

import pytest
from hypothesis import given, strategies as st

from support import brute_max
from texpl.formula import Wcnf
from texpl.maxsat import EarlyStop, MaxSatConfig, MaxSatInfeasible, MaxSatState, Optimum, maximize, stratify

ALL_CONFIGS = [MaxSatConfig(*flags) for flags in itertools.product((False, True), repeat=3)]


def random_wcnf(rng, nvars=None, nsoft=None):
    w = Wcnf()
    n = nvars or rng.randint(1, 15)
    for _ in range(n):
        w.hard.new_var()
    for _ in range(rng.randint(0, n)):
        w.hard.add([rng.choice((1, -1)) * rng.randint(1, n) for _ in range(rng.randint(2, 3))])
    for _ in range(nsoft or rng.randint(1, 10)):
        lit = rng.choice((1, -1)) * rng.randint(1, n)
        w.add_term(lit, Fraction(rng.randint(-9, 9) or 1, rng.choice((1, 2, 5, 100))))
    return w


def sign_reached(result, strict):
    if isinstance(result, Optimum):
        return result.value > 0 if strict else result.value >= 0
    return result.reached


def test_complementary_pair():
    w = Wcnf()
    a = w.hard.new_var()
    w.add_soft(a, 1)
    w.add_soft(-a, 1)
    assert maximize(w).value == 1


def test_example_strata():
    weights = ["0.72452", "0.72284", "0.41645", "0.41527", "0.16249"]
    strata = stratify([(i + 1, Fraction(x)) for i, x in enumerate(weights)])
    assert [[str(float(w)) for _, w in s] for s in strata] == [["0.72452", "0.72284"], ["0.41645", "0.41527"], ["0.16249"]]


def test_stratify_degenerate_cases():
    assert len(stratify([(1, 3), (2, 3), (3, 3)])) == 1
    assert stratify([(1, Fraction(1, 2))]) == [[(1, Fraction(1, 2))]]
    assert stratify([]) == []


@given(st.lists(st.integers(1, 50), min_size=1, max_size=12))
def test_stratify_partitions_descending(ws):
    softs = [(i + 1, Fraction(w)) for i, w in enumerate(ws)]
    strata = stratify(softs)
    assert sorted(x for s in strata for x in s) == sorted(softs)
    for hi, lo in zip(strata, strata[1:]):
        assert min(w for _, w in hi) > max(w for _, w in lo)


@pytest.mark.parametrize("seed", range(5))
def test_optimum_matches_brute_force(seed):
    rng = random.Random(seed)
    for _ in range(40):
        w = random_wcnf(rng)
        best = brute_max(w)
        for cfg in (ALL_CONFIGS[0], ALL_CONFIGS[-1]):
            if best is None:
                with pytest.raises(MaxSatInfeasible):
                    maximize(w, config=cfg)
            else:
                r = maximize(w, config=cfg)
                assert r.value == best
                assert w.value(r.holds) == best


@given(st.integers(0, 10**6))
def test_sign_verdicts_agree_across_accelerators(seed):
    rng = random.Random(seed)
    w = random_wcnf(rng, nvars=rng.randint(2, 10))
    n = w.hard.nvars
    best = brute_max(w)
    if best is None:
        return
    for strict in (False, True):
        verdicts = set()
        for cfg in ALL_CONFIGS:
            st_ = MaxSatState(w, cfg)
            for _ in range(2):  # the second call exercises core replay
                assumption = [rng.choice((1, -1)) * rng.randint(1, n)]
                try:
                    r = st_.maximize(assumption, strict)
                except MaxSatInfeasible:
                    continue
            a = []
            verdicts.add(sign_reached(st_.maximize(a, strict), strict))
        assert verdicts == {best > 0 if strict else best >= 0}


def test_cores_replayed_on_repeat_call():
    rng = random.Random(11)
    for _ in range(50):
        w = random_wcnf(rng, nvars=8, nsoft=8)
        try:
            st_ = MaxSatState(w)
            first = st_.maximize([1])
        except MaxSatInfeasible:
            continue
        before = st_.stats["new_cores"]
        if before == 0:
            continue
        second = st_.maximize([1])
        assert st_.stats["new_cores"] == before
        assert st_.stats["reused_cores"] >= before
        assert second.value == first.value
        return
    pytest.fail("no instance produced cores")


def test_disjoint_assumptions_reuse_nothing():
    w = Wcnf()
    a, b, c = (w.hard.new_var() for _ in range(3))
    w.hard.add([-a, -b])
    w.hard.add([-c, -b])
    w.add_soft(b, 1)
    st_ = MaxSatState(w)
    assert st_.maximize([a]).value == 0
    assert st_.store.valid_cores({c}) == []


def test_all_negative_objective_stops_without_search():
    w = Wcnf()
    x, y = w.hard.new_var(), w.hard.new_var()
    w.add_term(x, -1)
    w.add_term(y, Fraction(-1, 2))
    st_ = MaxSatState(w)
    r = st_.maximize([], strict=True)
    assert isinstance(r, EarlyStop) and not r.reached
    assert st_.stats["sat_calls"] == 0


def test_infeasible_assumptions():
    w = Wcnf()
    x = w.hard.new_var()
    w.hard.add([x])
    w.add_soft(x, 1)
    with pytest.raises(MaxSatInfeasible):
        maximize(w, [-x])


def test_infeasible_is_reported_even_when_bound_stops_early():
    w = Wcnf()
    x, y = w.hard.new_var(), w.hard.new_var()
    w.hard.add([-x, -y])
    w.add_term(x, -1)
    for strict in (False, True):
        with pytest.raises(MaxSatInfeasible):
            MaxSatState(w).maximize([x, y], strict=strict)


def test_reuse_on_and_off_give_same_optima():
    rng = random.Random(5)
    for _ in range(100):
        w = random_wcnf(rng, nvars=8)
        on, off = MaxSatState(w, MaxSatConfig(reuse_cores=True)), MaxSatState(w, MaxSatConfig(reuse_cores=False))
        for _ in range(3):
            a = [rng.choice((1, -1)) * v for v in rng.sample(range(1, 9), rng.randint(0, 3))]
            try:
                x = on.maximize(a).value
            except MaxSatInfeasible:
                with pytest.raises(MaxSatInfeasible):
                    off.maximize(a)
                continue
            assert off.maximize(a).value == x
