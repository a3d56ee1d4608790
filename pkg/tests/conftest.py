from __future__ import annotations

import random

import pytest

from outgrowth import FACTOR, FREE, FiniteGroupTable, FreeProduct, load_bundled
from outgrowth.free_product import Word


@pytest.fixture(scope="session")
def golden():
    return load_bundled("golden_ratio_rose")


@pytest.fixture(scope="session")
def poly():
    return load_bundled("polynomial_rose")


@pytest.fixture(scope="session")
def c3c3():
    return load_bundled("c3c3_swap")


@pytest.fixture(scope="session")
def c2f2():
    return load_bundled("c2f2_mixed")


@pytest.fixture(scope="session")
def f2():
    return FreeProduct(free_rank=2, free_names=["a", "b"])


@pytest.fixture(scope="session")
def mixed_group():
    """C2 * C3 * F2, the workhorse for free-product length tests."""
    return FreeProduct(
        [FiniteGroupTable.cyclic(2, "P"), FiniteGroupTable.cyclic(3, "Q")],
        free_rank=2,
        free_names=["x", "y"],
    )


def random_letters(group: FreeProduct, rng: random.Random, max_len: int) -> list:
    """Raw (unreduced) letters over the presentation, identity letters allowed."""
    letters = []
    for _ in range(rng.randrange(max_len + 1)):
        if group.factors and (not group.free_rank or rng.random() < 0.5):
            i = rng.randrange(len(group.factors))
            letters.append((FACTOR, i, rng.randrange(group.factors[i].order)))
        else:
            letters.append((FREE, rng.randrange(group.free_rank), rng.choice((1, -1))))
    return letters


def random_word(group: FreeProduct, rng: random.Random, max_len: int) -> Word:
    return group.word(random_letters(group, rng, max_len))


def random_hyperbolic(group: FreeProduct, rng: random.Random, max_len: int) -> Word:
    while True:
        w = random_word(group, rng, max_len)
        if w.is_hyperbolic():
            return w
