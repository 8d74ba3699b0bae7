import random

import pytest

from texpl.model import load_bundled, parse_instance
from texpl.oracle import (
    BudgetExceeded,
    brute_adversarial,
    brute_pair_unfair,
    brute_xps,
    cell_grid,
    enumerate_cells,
    is_constant,
    minimal_hitting_sets,
)
from texpl.synth import random_ensemble, random_instance
from support_models import constant_model, stump


def test_iris_rfmv_cell_count():
    assert len(cell_grid(load_bundled("iris_rfmv"))) == 2 * 2 * 2 * 4


def test_stump_has_two_cells():
    assert len(list(enumerate_cells(stump()))) == 2


def test_budget_refusal_reports_count():
    with pytest.raises(BudgetExceeded) as err:
        cell_grid(load_bundled("iris_rfmv"), budget=10)
    assert err.value.cells == 32


def test_constant_model():
    e = constant_model()
    grid = cell_grid(e)
    assert is_constant(grid)
    axps, cxps = brute_xps(e, random_instance(random.Random(0), e), grid=grid)
    assert axps == [frozenset()] and cxps == []


def test_iris_bt_unique_axp():
    e = load_bundled("iris_bt")
    axps, _ = brute_xps(e, parse_instance(e, ["5.1", "3.5", "1.4", "0.2"]))
    assert axps == [frozenset({2})]


def test_duality_on_random_problems():
    rng = random.Random(4)
    for _ in range(60):
        e = random_ensemble(rng, m=rng.randint(1, 5), mixed=True)
        axps, cxps = brute_xps(e, random_instance(rng, e))
        if cxps:
            assert minimal_hitting_sets(cxps) == axps
            assert minimal_hitting_sets(axps) == cxps


def test_scans_trivial_cases():
    e = stump()
    v = random_instance(random.Random(1), e)
    assert brute_adversarial(e, v, 0) is None
    assert brute_pair_unfair(constant_model(), {0}) is None


def test_class_partition_counts():
    e = load_bundled("iris_bt")
    grid = cell_grid(e)
    counts = [int((grid.classes == k).sum()) for k in range(e.n_classes)]
    assert sum(counts) == len(grid)


def test_scan_is_deterministic():
    e = load_bundled("iris_rfmv")
    v = parse_instance(e, ["6.0", "3.5", "1.4", "0.2"])
    assert brute_adversarial(e, v, 2) == brute_adversarial(e, v, 2)
