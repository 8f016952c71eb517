import os
import sys

import numpy as np
import pytest

# the following lines allow us to import modules from within this file's parent folder
sys.path.insert(0, os.path.dirname(os.path.dirname(os.path.abspath(__file__))))

from helpers.graph_core import Graph, degree_features
from helpers.partition import Partition

G1_EDGES = [(0, 1), (1, 2), (3, 4), (0, 3), (0, 4), (1, 5)]


def build_graph(n, edges, label=0, name=None):

    adjacency = np.zeros((n, n), dtype=np.int64)
    for s, d in edges:
        adjacency[s, d] = adjacency[d, s] = 1

    cap = max(1, int(adjacency.sum(axis=1).max())) if n > 0 else 1

    return Graph(adjacency=adjacency, features=degree_features(adjacency, cap), label=label, name=name)


@pytest.fixture
def make_graph():
    return build_graph


@pytest.fixture
def g1():
    return build_graph(6, G1_EDGES, name='G1')


@pytest.fixture
def g1_partition():
    return Partition(membership=np.array([0, 0, 0, 1, 1, 1]))
