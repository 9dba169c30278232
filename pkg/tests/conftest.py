"""Shared helpers for the test suite."""
import numpy as np
import pytest

from sgdg.grid import IndexSet, enumerate_initial


def random_closed_set(rng: np.random.Generator, d: int, N: int, n_add: int = 6) -> IndexSet:
    """Downward-closed set grown from the root by random child additions."""
    G = IndexSet(d, N)
    for _ in range(n_add):
        src, kids = G.child_ids()
        if len(kids) == 0:
            break
        pick = kids[rng.integers(len(kids), size=max(1, len(kids) // 3))]
        G.add(pick)
        G.close_downward()
    return G


def index_set(kind: str, rng, d: int, N: int) -> IndexSet:
    if kind == "sparse":
        return enumerate_initial(d, N, True)
    if kind == "full":
        return enumerate_initial(d, N, False)
    return random_closed_set(rng, d, N)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
