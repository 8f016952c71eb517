#!/bin/python
# -*- coding: utf-8 -*-

import numpy as np

from dataclasses import dataclass

from helpers.exceptions import UndefinedDistributionError


@dataclass(frozen=True)
class EntropyFeatures:
    """
        h[i, j]: connection entropy of the ordered pair (i, j), natural log; zero on the diagonal
        and for unconnected pairs.
        edge_features: K x K x 3 stack [A_coar ‖ h ‖ h^T].
    """
    h: np.ndarray
    edge_features: np.ndarray


def connection_distribution(cr, i, j):
    """
        P_ij[n] = (row sum n of A_{i→j}) / (sum of A_{i→j}): the probability that an edge drawn
        uniformly among those joining i and j has the n-th node of cluster i at one end.
    """

    if i == j:
        raise UndefinedDistributionError(f"No connection distribution within a single cluster ({i})")

    block = cr.pair_blocks.get((i, j))

    if block is None or block.sum() == 0:
        raise UndefinedDistributionError(f"Clusters {i} and {j} share no edge")

    return block.sum(axis=1) / block.sum()


def shannon_entropy(prob):
    """
        -Σ p ln p with 0 ln 0 := 0.
    """

    prob = np.asarray(prob, dtype=np.float64)
    nonzero = prob[prob > 0]

    return float(-np.sum(nonzero * np.log(nonzero)))


def connection_entropy(cr):

    k = cr.k
    h = np.zeros((k, k))

    for (i, j) in cr.pair_blocks:
        h[i, j] = shannon_entropy(connection_distribution(cr, i, j))

    edge_features = np.stack([cr.a_coar.astype(np.float64), h, h.T], axis=-1)

    h.setflags(write=False)
    edge_features.setflags(write=False)

    return EntropyFeatures(h=h, edge_features=edge_features)


def entropy_to_dict(ef):

    return {
        'h': ef.h.tolist(),
        'edge_features': ef.edge_features.tolist(),
    }
