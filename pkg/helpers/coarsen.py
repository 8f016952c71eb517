#!/bin/python
# -*- coding: utf-8 -*-

import logging
import numpy as np

from dataclasses import dataclass
from typing import Dict, Tuple

from helpers.partition import assignment_matrix

logger = logging.getLogger('icepool.coarsen')


@dataclass(frozen=True)
class CoarseningResult:
    """
        a_coar = S^T A S (integer counts), x_coar = S^T X, a_int = (S S^T) ⊙ A, a_ext = A - a_int.
        pair_blocks[(i, j)] = A_{i→j} for ordered cluster pairs i != j joined by at least one edge.
    """
    a_coar: np.ndarray
    x_coar: np.ndarray
    a_int: np.ndarray
    a_ext: np.ndarray
    pair_blocks: Dict[Tuple[int, int], np.ndarray]

    @property
    def k(self):
        return self.a_coar.shape[0]


def _freeze(*arrays):

    for array in arrays:
        array.setflags(write=False)


def _blocks_from_support(support, p):
    """
        Splits an N x N 0/1 matrix into the nonzero blocks of distinct ordered cluster pairs.
    """

    blocks = {}

    for i, rows in enumerate(p.node_lists):
        for j, cols in enumerate(p.node_lists):
            if i == j:
                continue
            block = support[np.ix_(rows, cols)]
            if block.any():
                block = block.astype(np.int64)
                _freeze(block)
                blocks[(i, j)] = block

    return blocks


def coarsen(g, p):

    adjacency = np.asarray(g.adjacency, dtype=np.int64)
    s = assignment_matrix(p).astype(np.int64)

    a_int = (s @ s.T) * adjacency
    a_ext = adjacency - a_int
    a_coar = s.T @ adjacency @ s
    x_coar = s.T.astype(np.float64) @ g.features

    _freeze(a_int, a_ext, a_coar, x_coar)

    pair_blocks = _blocks_from_support(a_ext, p)

    logger.debug(f"Coarsened {g.name}: {p.k} clusters, {len(pair_blocks)} connected ordered pairs.")

    return CoarseningResult(a_coar=a_coar, x_coar=x_coar, a_int=a_int, a_ext=a_ext, pair_blocks=pair_blocks)


def boolean_reach(adjacency, radius):
    """
        Support of A^p + A^(p-1) with p = radius, using Boolean (saturating) products and A^0 = I.
    """

    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")

    a = np.asarray(adjacency) > 0

    previous = np.eye(a.shape[0], dtype=bool)   # A^0
    current = a.copy()                          # A^1

    for _ in range(radius - 1):
        previous, current = current, (current.astype(np.int64) @ a.astype(np.int64)) > 0

    return current | previous


def extended_pair_blocks(g, p, radius):
    """
        A'_{i→j}[m, n] = 1 iff (A^p + A^(p-1)) is nonzero at (Γ^(i)[m], Γ^(j)[n]).
    """

    return _blocks_from_support(boolean_reach(g.adjacency, radius), p)


def extended_ext_matrix(g, p, radius):
    """
        N x N matrix holding the extended blocks at their node positions (the inter-cluster part of
        the radius-p reachability); equals A_ext when radius == 1.
    """

    support = boolean_reach(g.adjacency, radius).astype(np.int64)
    same_cluster = p.membership[:, None] == p.membership[None, :]

    return np.where(same_cluster, 0, support)


def coarsening_to_dict(cr, p):
    """
        JSON-ready document (nested lists) of a coarsening result.
    """

    return {
        'k': int(cr.k),
        'membership': p.membership.tolist(),
        'sizes': p.sizes.tolist(),
        'a_coar': cr.a_coar.tolist(),
        'x_coar': cr.x_coar.tolist(),
        'num_inter_edges': int(cr.a_ext.sum()) // 2,
        'num_intra_edges': int(cr.a_int.sum()) // 2,
        'pair_blocks': {f'{i}->{j}': block.tolist() for (i, j), block in sorted(cr.pair_blocks.items())},
    }
