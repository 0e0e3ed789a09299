import numpy as np
import pytest

from matchnet import Graph, ModelSpec


@pytest.fixture
def k3():
    return Graph(3, [(0, 1), (0, 2), (1, 2)])


@pytest.fixture
def p2():
    return Graph(2, [(0, 1)])


@pytest.fixture
def paw():
    # triangle 0-1-2 plus pendant 3 attached to 0
    return Graph(4, [(0, 1), (0, 2), (1, 2), (0, 3)])


@pytest.fixture
def k3_uniform(k3):
    return ModelSpec.create(k3, [1.0, 1.0, 1.0])


@pytest.fixture
def paw_spec(paw):
    return ModelSpec.create(paw, [2.0, 1.0, 1.0, 1.0])


def random_connected_graph(rng: np.random.Generator, n: int, p: float) -> Graph:
    """Rejection-sample a connected Erdos-Renyi graph (test corpus helper)."""
    from matchnet import erdos_renyi, is_connected

    while True:
        g = erdos_renyi(n, p, rng)
        if is_connected(g):
            return g
