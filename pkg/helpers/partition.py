#!/bin/python
# -*- coding: utf-8 -*-

import logging
import numpy as np

from dataclasses import dataclass, field
from typing import Tuple

from helpers.exceptions import FormatError

logger = logging.getLogger('icepool.partition')


@dataclass(frozen=True)
class Partition:
    """
        Hard cluster assignment. membership[n] is the cluster of node n; cluster ids are contiguous
        and every cluster is nonempty. node_lists[k] (Γ^(k)) is sorted by original node index,
        which fixes the column order of C^(k) and the row/column order of every inter-cluster block.
    """
    membership: np.ndarray
    k: int = field(init=False)
    node_lists: Tuple[np.ndarray, ...] = field(init=False)
    sizes: np.ndarray = field(init=False)

    def __post_init__(self):

        membership = np.array(self.membership, dtype=np.int64, copy=True)

        if membership.ndim != 1:
            raise ValueError("membership must be a 1-d array")

        k = int(membership.max()) + 1 if len(membership) > 0 else 0
        sizes = np.bincount(membership, minlength=k) if k > 0 else np.zeros(0, dtype=np.int64)

        if len(membership) > 0 and (membership.min() < 0 or np.any(sizes == 0)):
            raise ValueError("cluster ids must be contiguous 0..K-1 with every cluster nonempty")

        # stable sort keeps node indices ascending within each cluster
        order = np.argsort(membership, kind='stable')
        node_lists = tuple(np.split(order, np.cumsum(sizes)[:-1])) if k > 0 else ()

        membership.setflags(write=False)
        sizes.setflags(write=False)
        for nodes in node_lists:
            nodes.setflags(write=False)

        object.__setattr__(self, 'membership', membership)
        object.__setattr__(self, 'k', k)
        object.__setattr__(self, 'node_lists', node_lists)
        object.__setattr__(self, 'sizes', sizes)

    @property
    def n(self):
        return len(self.membership)

    @classmethod
    def from_labels(cls, labels):
        """
            Compacts arbitrary integer labels to 0..K-1, in ascending label order.
        """
        _, membership = np.unique(np.asarray(labels), return_inverse=True)

        return cls(membership=membership.reshape(-1))

    @classmethod
    def identity(cls, n):
        return cls(membership=np.arange(n))


def assignment_matrix(p):
    """
        S[i, j] = 1 iff node i belongs to cluster j.
    """

    s = np.zeros((p.n, p.k))
    s[np.arange(p.n), p.membership] = 1.0

    return s


def sampling_operators(p):
    """
        C^(k), the N x N_k selection matrix of cluster k; C^(k)^T X extracts the cluster's rows.
    """

    operators = []

    for nodes in p.node_lists:
        c = np.zeros((p.n, len(nodes)))
        c[nodes, np.arange(len(nodes))] = 1.0
        operators.append(c)

    return operators


def _matching_pass(weights, max_merges, rng):
    """
        One round of greedy heavy-edge matching over the current clusters.
        Clusters are visited in a seeded random order; each unmatched cluster is matched with
        the unmatched neighbour of largest normalized-cut weight w_ij (1/d_i + 1/d_j).
        Ties go to the neighbour visited earliest. Returns the new labels and the merge count.
    """

    k = weights.shape[0]

    off_diagonal = weights.copy()
    np.fill_diagonal(off_diagonal, 0)

    degree = weights.sum(axis=1)
    inv_degree = np.divide(1.0, degree, out=np.zeros(k), where=degree > 0)
    score = off_diagonal * (inv_degree[:, None] + inv_degree[None, :])

    visit_order = rng.permutation(k)
    position = np.empty(k, dtype=np.int64)
    position[visit_order] = np.arange(k)

    matched = np.full(k, -1, dtype=np.int64)
    merges = 0

    for c in visit_order:

        if merges >= max_merges:
            break
        if matched[c] >= 0:
            continue

        candidates = np.flatnonzero((score[c] > 0) & (matched < 0))
        candidates = candidates[candidates != c]
        if len(candidates) == 0:
            continue

        best = candidates[score[c, candidates] == score[c, candidates].max()]
        partner = best[np.argmin(position[best])]

        matched[c] = partner
        matched[partner] = c
        merges += 1

    labels = np.where(matched >= 0, np.minimum(np.arange(k), matched), np.arange(k))

    return labels, merges


def _aggregate(weights, labels):

    _, codes = np.unique(labels, return_inverse=True)
    m = np.zeros((len(labels), codes.max() + 1))
    m[np.arange(len(labels)), codes] = 1.0

    return m.T @ weights @ m, codes


def heavy_edge_partition(g, target_k, seed):
    """
        Deterministic coarsening of g into at most target_k clusters by repeated heavy-edge matching.
        When matching stalls (no edge left between distinct clusters) the remaining clusters,
        i.e. whole components and isolated nodes, are merged two smallest at a time.
    """

    n = g.n

    if not 1 <= target_k <= n:
        raise ValueError(f"target_k must lie in [1, {n}], got {target_k}")

    rng = np.random.default_rng(seed)

    membership = np.arange(n)
    weights = np.asarray(g.adjacency, dtype=np.float64)

    while weights.shape[0] > target_k:

        labels, merges = _matching_pass(weights, weights.shape[0] - target_k, rng)
        if merges == 0:
            break

        weights, codes = _aggregate(weights, labels)
        membership = codes[membership]

    k = weights.shape[0]

    if k > target_k:
        logger.debug(f"Matching stalled at {k} clusters for {g.name}; merging disconnected clusters by size.")

    while k > target_k:

        sizes = np.bincount(membership, minlength=k)
        first_node = np.array([np.flatnonzero(membership == c)[0] for c in range(k)])

        # two smallest clusters, ties by lowest first node
        a, b = np.lexsort((first_node, sizes))[:2]
        membership = np.where(membership == max(a, b), min(a, b), membership)
        _, membership = np.unique(membership, return_inverse=True)
        k -= 1

    # canonical cluster order: by smallest member node
    first_node = np.array([np.flatnonzero(membership == c)[0] for c in range(k)])

    return Partition.from_labels(first_node[membership])


def load_partition(path, g):
    """
        Reads one cluster id per line (N lines); ids are compacted to 0..K-1.
    """

    with open(path, 'r') as fp:
        lines = fp.read().splitlines()

    while len(lines) > 0 and lines[-1].strip() == '':
        lines.pop()

    labels = []

    for idx, line in enumerate(lines):
        try:
            labels.append(int(line.strip()))
        except ValueError:
            raise FormatError(f"Expected an integer cluster id, found '{line}'", path, idx + 1)

    if len(labels) != g.n:
        raise FormatError(f"Expected {g.n} cluster ids (one per node), found {len(labels)}", path)

    return Partition.from_labels(labels)


def save_partition(path, p):

    with open(path, 'w') as fp:
        fp.write(''.join(f'{c}\n' for c in p.membership))

    return path


def random_partition(rng, n, k):
    """
        Uniformly random membership with every one of the k clusters nonempty.
    """

    if not 1 <= k <= n:
        raise ValueError(f"k must lie in [1, {n}], got {k}")

    membership = rng.integers(0, k, size=n)
    membership[rng.permutation(n)[:k]] = np.arange(k)

    return Partition(membership=membership)
