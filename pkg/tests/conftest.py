import itertools

import pytest

from groupshift.group import GroupSpec, multiply
from groupshift.oracles import SemidirectOracle
from groupshift.pattern import Alphabet, matches
from groupshift.sft import full_shift, golden_mean_shift, hard_square_shift, integers, plane


def brute_force_patterns(x, cells):
    """Every coloring of `cells` checked against every placement of every forbidden pattern."""
    cells = list(cells)
    index = {cell: i for i, cell in enumerate(cells)}
    placements = []
    for p in x.forbidden:
        for t in cells:
            placed = [index.get(multiply(x.group, f, t)) for f in p.cells]
            if None not in placed:
                placements.append((placed, p.values))
    found = []
    for values in itertools.product(x.alphabet.symbols(), repeat=len(cells)):
        if not any(all(matches(v, values[i]) for i, v in zip(placed, want)) for placed, want in placements):
            found.append(values)
    return found


def brute_force_count(x, cells):
    return len(brute_force_patterns(x, cells))


def fibonacci(n):
    a, b = 0, 1
    for _ in range(n):
        a, b = b, a + b
    return a


@pytest.fixture
def z():
    return integers()


@pytest.fixture
def z2():
    return plane()


@pytest.fixture
def heisenberg():
    return GroupSpec("H3", ("a", "b", "t"), SemidirectOracle(("a", "b"), "t", ((1, 1), (0, 1))))


@pytest.fixture
def golden():
    return golden_mean_shift()


@pytest.fixture
def hard_square():
    return hard_square_shift()


@pytest.fixture
def full_two(z):
    return full_shift(z, Alphabet.of(["0", "1"]), "full-2")
