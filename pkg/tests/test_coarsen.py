import numpy as np
import pytest

from helpers.graph_core import random_graph
from helpers.partition import Partition, random_partition
from helpers.coarsen import coarsen, boolean_reach, extended_pair_blocks, extended_ext_matrix, coarsening_to_dict


def _coarsen_by_loops(g, p):

    n, k = g.n, p.k
    a = g.adjacency
    m = p.membership

    a_coar = np.zeros((k, k), dtype=np.int64)
    a_int = np.zeros((n, n), dtype=np.int64)

    for u in range(n):
        for v in range(n):
            a_coar[m[u], m[v]] += a[u, v]
            if m[u] == m[v]:
                a_int[u, v] = a[u, v]

    x_coar = np.zeros((k, g.feature_dim))
    for u in range(n):
        x_coar[m[u]] += g.features[u]

    return a_coar, x_coar, a_int


def _reach_by_expansion(adjacency, radius):
    """
        Nodes reachable by walks of length exactly radius or radius - 1, by repeated neighbourhood expansion.
    """

    n = adjacency.shape[0]
    neighbours = [set(np.flatnonzero(adjacency[u])) for u in range(n)]
    reach = np.zeros((n, n), dtype=bool)

    for u in range(n):

        frontier = {u}
        layers = [frontier]

        for _ in range(radius):
            frontier = set().union(*[neighbours[w] for w in frontier]) if frontier else set()
            layers.append(frontier)

        for v in layers[radius] | layers[radius - 1]:
            reach[u, v] = True

    return reach


def test_worked_example(g1, g1_partition):

    cr = coarsen(g1, g1_partition)

    np.testing.assert_array_equal(cr.a_coar, [[4, 3], [3, 2]])
    np.testing.assert_array_equal(cr.a_int + cr.a_ext, g1.adjacency)
    assert sorted(cr.pair_blocks.keys()) == [(0, 1), (1, 0)]
    np.testing.assert_array_equal(cr.pair_blocks[(0, 1)], [[1, 1, 0], [0, 0, 1], [0, 0, 0]])
    np.testing.assert_array_equal(cr.pair_blocks[(1, 0)], cr.pair_blocks[(0, 1)].T)


def test_coarsen_matches_loop_oracle():

    rng = np.random.default_rng(0)

    for _ in range(500):

        n = int(rng.integers(1, 21))
        k = int(rng.integers(1, n + 1))
        g = random_graph(rng, n, float(rng.uniform(0.0, 0.7)))
        p = random_partition(rng, n, k)

        cr = coarsen(g, p)
        a_coar, x_coar, a_int = _coarsen_by_loops(g, p)

        np.testing.assert_array_equal(cr.a_coar, a_coar)
        np.testing.assert_allclose(cr.x_coar, x_coar, atol=1e-12)
        np.testing.assert_array_equal(cr.a_int, a_int)
        np.testing.assert_array_equal(cr.a_int + cr.a_ext, g.adjacency)


def test_coarsen_blocks_and_symmetry():

    rng = np.random.default_rng(1)

    for _ in range(50):

        n = int(rng.integers(2, 16))
        g = random_graph(rng, n, 0.4)
        p = random_partition(rng, n, int(rng.integers(1, n + 1)))
        cr = coarsen(g, p)

        np.testing.assert_array_equal(cr.a_coar, cr.a_coar.T)

        for (i, j), block in cr.pair_blocks.items():
            assert i != j
            assert block.shape == (p.sizes[i], p.sizes[j])
            assert block.sum() == cr.a_coar[i, j]


def test_coarsen_identity_partition(g1):

    cr = coarsen(g1, Partition.identity(6))

    np.testing.assert_array_equal(cr.a_coar, g1.adjacency)
    np.testing.assert_array_equal(cr.a_int, np.zeros((6, 6)))


def test_coarsen_results_are_read_only(g1, g1_partition):

    cr = coarsen(g1, g1_partition)

    for array in [cr.a_coar, cr.x_coar, cr.a_int, cr.a_ext, *cr.pair_blocks.values()]:
        assert not array.flags.writeable


@pytest.mark.parametrize('radius', [1, 2, 3, 4])
def test_boolean_reach_matches_expansion(radius):

    rng = np.random.default_rng(radius)

    for _ in range(30):
        g = random_graph(rng, int(rng.integers(1, 15)), 0.25)
        np.testing.assert_array_equal(boolean_reach(g.adjacency, radius), _reach_by_expansion(g.adjacency, radius))


def test_radius_one_is_the_plain_coarsening(g1, g1_partition):

    cr = coarsen(g1, g1_partition)
    extended = extended_pair_blocks(g1, g1_partition, 1)

    np.testing.assert_array_equal(extended_ext_matrix(g1, g1_partition, 1), cr.a_ext)
    assert sorted(extended.keys()) == sorted(cr.pair_blocks.keys())
    for key, block in extended.items():
        np.testing.assert_array_equal(block, cr.pair_blocks[key])


def test_boolean_reach_rejects_zero_radius(g1):
    with pytest.raises(ValueError):
        boolean_reach(g1.adjacency, 0)


def test_coarsening_document(g1, g1_partition):

    doc = coarsening_to_dict(coarsen(g1, g1_partition), g1_partition)

    assert doc['k'] == 2
    assert doc['num_inter_edges'] == 3
    assert doc['num_intra_edges'] == 3
    assert doc['pair_blocks']['0->1'] == [[1, 1, 0], [0, 0, 1], [0, 0, 0]]
