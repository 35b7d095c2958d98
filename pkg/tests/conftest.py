import numpy as np
import pytest

from congames import (
    CongestionGame,
    PolynomialCost,
    parallel_links_game,
    reference_minimizer,
)


@pytest.fixture(scope="session")
def g1() -> CongestionGame:
    """Two parallel edges, c1(y) = y/2, c2(y) = y, one player.

    Analytic facts used across the suite: equilibrium q = (2/3, 1/3) from
    c1(y1) = c2(1 - y1), Phi(q) = 1/6, Phi((1/2, 1/2)) = 3/16.
    """
    return CongestionGame(
        n=1,
        edges=(PolynomialCost((0.5,)), PolynomialCost((1.0,))),
        paths=((frozenset({0}), frozenset({1})),),
    )


@pytest.fixture(scope="session")
def identity_links():
    def make(n: int, m: int) -> CongestionGame:
        return parallel_links_game(n, [[1.0]] * m)

    return make


def random_feasible(game: CongestionGame, rng: np.random.Generator) -> np.ndarray:
    """Random point of the joint polytope via per-player Dirichlet draws."""
    parts = [rng.dirichlet(np.ones(sz)) / game.n for sz in game.sizes]
    return np.concatenate(parts)


@pytest.fixture(scope="session")
def reference_cache():
    cache: dict = {}

    def get(game: CongestionGame):
        if game not in cache:
            cache[game] = reference_minimizer(game)
        return cache[game]

    return get
