import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from suprawalk import MultilayerNetwork, build_supra


@pytest.fixture
def two_triangles():
    """Single layer: triangles {0,1,2} and {3,4,5}."""
    edges = [(0, 0, 1), (0, 0, 2), (0, 1, 2), (0, 3, 4), (0, 3, 5), (0, 4, 5)]
    return MultilayerNetwork.from_edges(edges, num_layers=1)


def make_twin_triangles():
    """Two identical layers, each the two disjoint triangles."""
    edges = []
    for l in (0, 1):
        edges += [(l, 0, 1), (l, 0, 2), (l, 1, 2), (l, 3, 4), (l, 3, 5), (l, 4, 5)]
    return MultilayerNetwork.from_edges(edges, num_layers=2)


@pytest.fixture
def twin_triangle_layers():
    return make_twin_triangles()


@pytest.fixture
def single_edge_net():
    return MultilayerNetwork.from_edges([(0, 0, 1)], num_layers=1)


@pytest.fixture
def two_layer_toy():
    """Small 2-layer network with overlapping neighborhoods across layers."""
    edges = [
        (0, 0, 1), (0, 1, 2), (0, 2, 3), (0, 0, 3),
        (1, 0, 1), (1, 1, 2), (1, 0, 2), (1, 2, 3),
    ]
    return MultilayerNetwork.from_edges(edges, num_layers=2)


@pytest.fixture
def two_layer_supra(two_layer_toy):
    return build_supra(two_layer_toy, threshold=0.0)
