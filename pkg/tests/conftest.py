import itertools

import pytest

from stslab import TripleSystem

FANO_EDGES = [
    (1, 2, 3), (1, 4, 5), (1, 6, 7), (2, 4, 6), (2, 5, 7), (3, 4, 7), (3, 5, 6),
]

STS9_EDGES = [
    (1, 2, 3), (4, 5, 6), (7, 8, 9),
    (1, 4, 7), (2, 5, 8), (3, 6, 9),
    (1, 5, 9), (2, 6, 7), (3, 4, 8),
    (1, 6, 8), (2, 4, 9), (3, 5, 7),
]


@pytest.fixture
def fano():
    return TripleSystem(7, FANO_EDGES)


@pytest.fixture
def sts9():
    """The affine plane AG(2,3): rows, columns and both diagonal directions."""
    return TripleSystem(9, STS9_EDGES)


@pytest.fixture
def kirkman15():
    """PG(3,2): lines {a, b, a xor b} over the nonzero vectors of GF(2)^4.

    Resolvable into 7 spreads, so it doubles as a Kirkman system fixture.
    """
    edges = sorted(
        {
            tuple(sorted((a, b, a ^ b)))
            for a in range(1, 16)
            for b in range(1, 16)
            if len({a, b, a ^ b}) == 3
        }
    )
    return TripleSystem(15, edges)


@pytest.fixture
def k9():
    """The complete 3-graph on 9 vertices (not linear)."""
    return TripleSystem(9, list(itertools.combinations(range(1, 10), 3)), kind="general")
