"""Brute-force reference answers computed cell by cell.

Everything here is exponential on purpose: it is the ground truth the solver
based code is tested against.  Cells are scanned row-major by feature index,
subsets by cardinality and then lexicographically, so witnesses are
reproducible.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from math import prod
from typing import Iterable, Iterator, Sequence

import numpy as np

from .intervals import IntervalMap, build_interval_map
from .model import Ensemble, predict

DEFAULT_BUDGET = 10**7


class BudgetExceeded(RuntimeError):
    def __init__(self, cells: int, budget: int):
        super().__init__(f"{cells} cells exceed the budget of {budget}")
        self.cells = cells


@dataclass
class CellGrid:
    """Predicted class of every cell, as an array indexed by interval numbers."""

    im: IntervalMap
    classes: np.ndarray

    @property
    def counts(self) -> tuple:
        return self.im.counts

    def __len__(self) -> int:
        return int(self.classes.size)


def cell_grid(e: Ensemble, budget: int = DEFAULT_BUDGET) -> CellGrid:
    im = build_interval_map(e)
    n = prod(im.counts)
    if n > budget:
        raise BudgetExceeded(n, budget)
    arr = np.empty(im.counts, dtype=np.int32)
    for cell in itertools.product(*(range(k) for k in im.counts)):
        arr[cell] = predict(e, im.representative(cell))
    return CellGrid(im, arr)


def enumerate_cells(e: Ensemble, budget: int = DEFAULT_BUDGET) -> Iterator[tuple]:
    """Yield (cell, class) for every cell, row-major."""
    grid = cell_grid(e, budget)
    for cell in itertools.product(*(range(k) for k in grid.counts)):
        yield cell, int(grid.classes[cell])


def _subsets(m: int) -> Iterator[frozenset]:
    for r in range(m + 1):
        for combo in itertools.combinations(range(m), r):
            yield frozenset(combo)


def entailment_table(grid: CellGrid, cell: Sequence[int], c: int) -> dict:
    """For every feature subset X: do all cells agreeing with ``cell`` on X predict c?"""
    m = len(cell)
    out = {}
    for X in _subsets(m):
        view = grid.classes[tuple(cell[i] if i in X else slice(None) for i in range(m))]
        out[X] = bool(np.all(view == c))
    return out


def brute_xps(e: Ensemble, v: Sequence, budget: int = DEFAULT_BUDGET, grid: CellGrid | None = None) -> tuple:
    """All subset-minimal AXps and CXps of ``v``, each as a sorted list of frozensets."""
    m = e.n_features
    if m > 20:
        raise BudgetExceeded(2**m, 2**20)
    grid = grid or cell_grid(e, budget)
    cell = grid.im.locate(v)
    c = int(grid.classes[cell])
    ent = entailment_table(grid, cell, c)
    full = frozenset(range(m))
    axps = [X for X, ok in ent.items() if ok and all(not ent[X - {i}] for i in X)]
    cxps = [
        full - X
        for X, ok in ent.items()
        if not ok and all(ent[X | {i}] for i in full - X)
    ]
    key = lambda s: (len(s), sorted(s))
    return sorted(axps, key=key), sorted(cxps, key=key)


def is_axp(grid: CellGrid, cell, c, X) -> bool:
    ent = lambda S: bool(np.all(grid.classes[tuple(cell[i] if i in S else slice(None) for i in range(len(cell)))] == c))
    X = frozenset(X)
    return ent(X) and all(not ent(X - {i}) for i in X)


def is_cxp(grid: CellGrid, cell, c, Y) -> bool:
    full = frozenset(range(len(cell)))
    ent = lambda S: bool(np.all(grid.classes[tuple(cell[i] if i in S else slice(None) for i in range(len(cell)))] == c))
    Y = frozenset(Y)
    return not ent(full - Y) and all(ent(full - (Y - {i})) for i in Y)


def minimal_hitting_sets(family: Iterable[frozenset]) -> list:
    """All minimal hitting sets of a small set family (brute force)."""
    family = [frozenset(s) for s in family]
    universe = sorted(set().union(*family)) if family else []
    found = []
    for r in range(len(universe) + 1):
        for combo in itertools.combinations(universe, r):
            h = frozenset(combo)
            if all(h & s for s in family) and not any(g <= h for g in found):
                found.append(h)
    return sorted(found, key=lambda s: (len(s), sorted(s)))


def brute_adversarial(e: Ensemble, v: Sequence, delta: int, budget: int = DEFAULT_BUDGET, grid: CellGrid | None = None):
    """First cell within ``delta`` differing features of v's cell with another class, or None."""
    grid = grid or cell_grid(e, budget)
    home = grid.im.locate(v)
    c = int(grid.classes[home])
    for cell in itertools.product(*(range(k) for k in grid.counts)):
        if sum(a != b for a, b in zip(cell, home)) <= delta and grid.classes[cell] != c:
            return cell
    return None


def brute_pair_unfair(e: Ensemble, protected, budget: int = DEFAULT_BUDGET, grid: CellGrid | None = None):
    """First pair of cells equal off ``protected`` with different classes, or None."""
    grid = grid or cell_grid(e, budget)
    protected = set(protected)
    m = len(grid.counts)
    for x in itertools.product(*(range(k) for k in grid.counts)):
        view = grid.classes[tuple(slice(None) if i in protected else x[i] for i in range(m))]
        cx = grid.classes[x]
        if np.any(view != cx):
            free = [i for i in range(m) if i in protected]
            for sub in itertools.product(*(range(grid.counts[i]) for i in free)):
                y = list(x)
                for i, k in zip(free, sub):
                    y[i] = k
                y = tuple(y)
                if grid.classes[y] != cx:
                    return x, y
    return None


def is_constant(grid: CellGrid) -> bool:
    return bool(np.all(grid.classes == grid.classes.flat[0]))
