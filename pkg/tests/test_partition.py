import numpy as np
import pytest

from helpers.exceptions import FormatError
from helpers.graph_core import random_graph
from helpers.partition import (
    Partition, assignment_matrix, sampling_operators, heavy_edge_partition,
    load_partition, save_partition, random_partition
)


def test_partition_node_lists_are_sorted():

    p = Partition(membership=np.array([1, 0, 1, 0, 2]))

    assert p.k == 3
    np.testing.assert_array_equal(p.sizes, [2, 2, 1])
    np.testing.assert_array_equal(p.node_lists[0], [1, 3])
    np.testing.assert_array_equal(p.node_lists[1], [0, 2])
    np.testing.assert_array_equal(p.node_lists[2], [4])


@pytest.mark.parametrize('membership', [[0, 2, 2], [-1, 0, 1], [[0, 1]]])
def test_partition_rejects_invalid_membership(membership):
    with pytest.raises(ValueError):
        Partition(membership=np.array(membership))


def test_from_labels_compacts_ids():

    p = Partition.from_labels([5, 5, 9, 2])

    np.testing.assert_array_equal(p.membership, [1, 1, 2, 0])


def test_assignment_matrix_and_sampling_operators(g1, g1_partition):

    s = assignment_matrix(g1_partition)
    operators = sampling_operators(g1_partition)

    np.testing.assert_array_equal(s.sum(axis=1), np.ones(6))
    np.testing.assert_array_equal(sum(c @ c.T for c in operators), np.eye(6))

    for k, c in enumerate(operators):
        np.testing.assert_array_equal(c.T @ g1.features, g1.features[g1_partition.node_lists[k]])


def test_heavy_edge_partition_reaches_target_and_is_seeded():

    rng = np.random.default_rng(0)

    for _ in range(30):

        n = int(rng.integers(2, 25))
        g = random_graph(rng, n, float(rng.uniform(0.0, 0.5)))
        target_k = int(rng.integers(1, n + 1))

        p = heavy_edge_partition(g, target_k, seed=11)
        again = heavy_edge_partition(g, target_k, seed=11)

        assert p.k == target_k
        assert p.n == n
        np.testing.assert_array_equal(p.membership, again.membership)


def test_heavy_edge_partition_keeps_components_apart(make_graph):

    g = make_graph(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])

    p = heavy_edge_partition(g, 2, seed=0)

    assert p.k == 2
    assert len(set(p.membership[:3])) == 1
    assert len(set(p.membership[3:])) == 1


def test_heavy_edge_partition_on_edgeless_graph(make_graph):

    p = heavy_edge_partition(make_graph(5, []), 2, seed=0)

    assert p.k == 2
    np.testing.assert_array_equal(np.sort(p.sizes), [2, 3])


def test_heavy_edge_partition_extremes(g1):

    np.testing.assert_array_equal(heavy_edge_partition(g1, 6, seed=0).membership, np.arange(6))
    np.testing.assert_array_equal(heavy_edge_partition(g1, 1, seed=0).membership, np.zeros(6))


@pytest.mark.parametrize('target_k', [0, 7])
def test_heavy_edge_partition_rejects_out_of_range_target(g1, target_k):
    with pytest.raises(ValueError):
        heavy_edge_partition(g1, target_k, seed=0)


def test_partition_file_round_trip(tmp_path, g1, g1_partition):

    path = str(tmp_path / 'partition.txt')
    save_partition(path, g1_partition)

    np.testing.assert_array_equal(load_partition(path, g1).membership, g1_partition.membership)


def test_load_partition_compacts_ids(tmp_path, make_graph):

    path = tmp_path / 'partition.txt'
    path.write_text("5\n5\n9\n9\n")

    p = load_partition(str(path), make_graph(4, [(0, 1), (2, 3)]))

    np.testing.assert_array_equal(p.membership, [0, 0, 1, 1])
    assert p.k == 2


def test_load_partition_reports_bad_line(tmp_path, g1):

    path = tmp_path / 'partition.txt'
    path.write_text("0\n0\nzero\n1\n1\n1\n")

    with pytest.raises(FormatError) as e:
        load_partition(str(path), g1)

    assert e.value.line == 3


def test_load_partition_rejects_wrong_count(tmp_path, g1):

    path = tmp_path / 'partition.txt'
    path.write_text("0\n1\n")

    with pytest.raises(FormatError):
        load_partition(str(path), g1)


def test_random_partition_has_no_empty_cluster():

    rng = np.random.default_rng(1)

    for _ in range(50):
        n = int(rng.integers(1, 20))
        k = int(rng.integers(1, n + 1))
        assert random_partition(rng, n, k).k == k
