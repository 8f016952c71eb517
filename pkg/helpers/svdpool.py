#!/bin/python
# -*- coding: utf-8 -*-

import logging
import numpy as np
import pandas as pd

from dataclasses import dataclass
from typing import Dict, Tuple

from joblib import Parallel, delayed
from tqdm import tqdm

from helpers.exceptions import NumericError
from helpers.graph_core import random_graph
from helpers.partition import random_partition
from helpers.coarsen import coarsen, extended_pair_blocks, extended_ext_matrix

logger = logging.getLogger('icepool.svdpool')

DEFAULT_TOL = 1e-12
MAX_SWEEPS = 100


@dataclass(frozen=True)
class SvdTriplet:
    """
        Thin SVD m = u diag(sigma) v^T; sigma descending, u and v with orthonormal columns.
    """
    u: np.ndarray
    sigma: np.ndarray
    v: np.ndarray

    @property
    def rank(self):
        return int(np.count_nonzero(self.sigma))

    def reconstruct(self, n_components=None):
        n_components = len(self.sigma) if n_components is None else n_components
        return (self.u[:, :n_components] * self.sigma[:n_components]) @ self.v[:, :n_components].T


def _one_sided_jacobi(m):
    """
        Hestenes' one-sided Jacobi: rotate column pairs of m (r >= c) until all are mutually
        orthogonal; the column norms are then the singular values and the accumulated rotations V.
    """

    work = m.copy()
    c = work.shape[1]
    v = np.eye(c)

    threshold = np.finfo(np.float64).eps * max(c, 1)
    # columns below this squared norm are rounding residue of a rank-deficient input
    floor = threshold ** 2 * np.sum(work * work)

    for sweep in range(MAX_SWEEPS):

        rotated = False

        for p in range(c - 1):
            for q in range(p + 1, c):

                alpha = work[:, p] @ work[:, p]
                beta = work[:, q] @ work[:, q]
                gamma = work[:, p] @ work[:, q]

                if gamma == 0.0 or min(alpha, beta) <= floor or abs(gamma) <= threshold * np.sqrt(alpha * beta):
                    continue

                rotated = True

                zeta = (beta - alpha) / (2.0 * gamma)
                t = np.copysign(1.0, zeta) / (abs(zeta) + np.sqrt(1.0 + zeta * zeta))
                cs = 1.0 / np.sqrt(1.0 + t * t)
                sn = cs * t

                for mat in (work, v):
                    col_p = mat[:, p].copy()
                    mat[:, p] = cs * col_p - sn * mat[:, q]
                    mat[:, q] = sn * col_p + cs * mat[:, q]

        if not rotated:
            return work, v

    raise NumericError(f"Jacobi SVD did not converge within {MAX_SWEEPS} sweeps")


def _complete_orthonormal(u, missing):
    """
        Fills the columns listed in `missing` with unit vectors orthogonal to all other columns,
        by Gram-Schmidt over the standard basis (lowest index first).
    """

    r = u.shape[0]
    basis = [u[:, idx] for idx in range(u.shape[1]) if idx not in missing]

    for idx in missing:
        for e in range(r):

            candidate = np.zeros(r)
            candidate[e] = 1.0

            # twice is enough
            for _ in range(2):
                for b in basis:
                    candidate -= (b @ candidate) * b

            norm = np.linalg.norm(candidate)
            if norm > 0.5 / np.sqrt(r):
                u[:, idx] = candidate / norm
                basis.append(u[:, idx])
                break

    return u


def _canonicalize_signs(u, v):
    """
        Flips each pair (u_l, v_l) so that the largest-magnitude entry of u_l is positive
        (first such entry on ties).
    """

    for l in range(u.shape[1]):
        idx = np.argmax(np.abs(u[:, l]))
        if u[idx, l] < 0:
            u[:, l] *= -1.0
            v[:, l] *= -1.0

    return u, v


def svd(m, tol=DEFAULT_TOL):

    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")

    m = np.asarray(m, dtype=np.float64)

    if m.ndim != 2:
        raise ValueError(f"svd expects a matrix, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise NumericError("svd input contains non-finite entries")

    transposed = m.shape[0] < m.shape[1]
    a = m.T if transposed else m

    work, v = _one_sided_jacobi(a)

    sigma = np.linalg.norm(work, axis=0)
    order = np.argsort(-sigma, kind='stable')
    sigma, work, v = sigma[order], work[:, order], v[:, order]

    # numerically zero singular values are set to exactly zero
    sigma = np.where(sigma <= tol * max(1.0, sigma.max(initial=0.0)), 0.0, sigma)

    u = np.zeros_like(work)
    nonzero = sigma > 0
    u[:, nonzero] = work[:, nonzero] / sigma[nonzero]
    u = _complete_orthonormal(u, list(np.flatnonzero(~nonzero)))

    if transposed:
        u, v = v, u

    u, v = _canonicalize_signs(u, v)

    for array in (u, sigma, v):
        array.setflags(write=False)

    return SvdTriplet(u=u, sigma=sigma, v=v)


@dataclass(frozen=True)
class SvdPoolComponents:
    """
        rank:        R, retained components per block (missing ones are zero)
        radius:      p, neighbourhood radius the blocks were built with
        weighted:    whether singular vectors are scaled by sqrt(sigma)
        per_pair:    (i, j) -> SVD of A_{i→j} (or of the extended block)
        aggregation: R x K x N, aggregation[l] is U^l; row j sums the upsampled left vectors of every block (i, j)
        pooled:      R x K x d, pooled[l] = U^l X
    """
    rank: int
    radius: int
    weighted: bool
    per_pair: Dict[Tuple[int, int], SvdTriplet]
    aggregation: np.ndarray
    pooled: np.ndarray


def build_components(g, p, cr, rank, radius=1, weight_by_sqrt_sigma=True):

    if rank < 1:
        raise ValueError(f"rank must be >= 1, got {rank}")
    if radius < 1:
        raise ValueError(f"radius must be >= 1, got {radius}")

    blocks = cr.pair_blocks if radius == 1 else extended_pair_blocks(g, p, radius)

    per_pair = {key: svd(block) for key, block in sorted(blocks.items())}

    aggregation = np.zeros((rank, p.k, p.n))

    for (i, j), triplet in per_pair.items():

        # components with sigma = 0 stay zero rows
        n_components = min(rank, triplet.rank)
        scale = np.sqrt(triplet.sigma) if weight_by_sqrt_sigma else np.ones_like(triplet.sigma)

        for l in range(n_components):
            aggregation[l, j, p.node_lists[i]] += scale[l] * triplet.u[:, l]

    pooled = aggregation @ np.asarray(g.features)

    aggregation.setflags(write=False)
    pooled.setflags(write=False)

    logger.debug(f"SVDPool components for {g.name}: {len(per_pair)} blocks, rank {rank}, radius {radius}.")

    return SvdPoolComponents(
        rank=rank,
        radius=radius,
        weighted=weight_by_sqrt_sigma,
        per_pair=per_pair,
        aggregation=aggregation,
        pooled=pooled
    )


def reconstruct(comps, p):
    """
        Σ_l Σ_{i≠j} ū'^l_{i→j} (v̄'^l_{i→j})^T over the retained components.
    """

    out = np.zeros((p.n, p.n))

    for (i, j), triplet in comps.per_pair.items():

        n_components = min(comps.rank, triplet.rank)
        weight = triplet.sigma[:n_components] if comps.weighted else np.ones(n_components)

        block = (triplet.u[:, :n_components] * weight) @ triplet.v[:, :n_components].T
        out[np.ix_(p.node_lists[i], p.node_lists[j])] += block

    return out


@dataclass(frozen=True)
class ReconstructionReport:
    residual: float
    target: str
    expected_to_vanish: bool
    reason: str = ''


def verify_reconstruction(g, p, comps, log_level=logging.WARNING):
    """
        Max-abs residual between the SVDPool reconstruction and A_ext (or the extended inter-cluster
        matrix when the components were built with radius > 1).
    """

    if comps.radius == 1:
        target_name = 'a_ext'
        target = np.where(p.membership[:, None] == p.membership[None, :], 0, np.asarray(g.adjacency))
    else:
        target_name = 'extended'
        target = extended_ext_matrix(g, p, comps.radius)

    reasons = []

    if not comps.weighted:
        reasons.append("singular vectors are not sqrt(sigma)-weighted")

    needed = max([t.rank for t in comps.per_pair.values()], default=0)
    if comps.rank < needed:
        reasons.append(f"rank {comps.rank} is below the largest block rank {needed}")

    residual = float(np.max(np.abs(reconstruct(comps, p) - target), initial=0.0))

    report = ReconstructionReport(
        residual=residual,
        target=target_name,
        expected_to_vanish=len(reasons) == 0,
        reason='; '.join(reasons)
    )

    if not report.expected_to_vanish:
        logger.log(log_level, f"Residual for {g.name} is not expected to vanish: {report.reason}.")

    return report


def components_to_dict(comps, report=None):

    out = {
        'rank': comps.rank,
        'radius': comps.radius,
        'weighted': comps.weighted,
        'sigma': {f'{i}->{j}': t.sigma.tolist() for (i, j), t in comps.per_pair.items()},
        'pooled': comps.pooled.tolist(),
    }

    if report is not None:
        out['reconstruction'] = {
            'residual': report.residual,
            'target': report.target,
            'expected_to_vanish': report.expected_to_vanish,
            'reason': report.reason,
        }

    return out


def _sweep_instance(idx, n, k, edge_probability, instance_seed, radius, weight_by_sqrt_sigma):

    rng = np.random.default_rng(instance_seed)

    g = random_graph(rng, n, edge_probability, name=f'random_{idx}')
    p = random_partition(rng, n, k)

    # rank n keeps every component of every block
    comps = build_components(g, p, coarsen(g, p), rank=n, radius=radius, weight_by_sqrt_sigma=weight_by_sqrt_sigma)
    report = verify_reconstruction(g, p, comps, log_level=logging.DEBUG)

    return {
        'instance': idx,
        'n': n,
        'k': k,
        'num_edges': g.num_edges,
        'num_blocks': len(comps.per_pair),
        'residual': report.residual,
        'expected_to_vanish': report.expected_to_vanish,
    }


def get_sweep_job_dict(count, seed, max_nodes, k_range, radius, weight_by_sqrt_sigma):

    rng = np.random.default_rng(seed)
    min_k, max_k = k_range
    job_dict = {}

    for idx in range(count):

        k = int(rng.integers(min_k, max_k + 1))
        job_dict[idx] = {
            'idx': idx,
            'k': k,
            'n': int(rng.integers(max(k, 2), max(max_nodes, k) + 1)),
            'edge_probability': float(rng.uniform(0.1, 0.6)),
            'instance_seed': int(rng.integers(2**31)),
            'radius': radius,
            'weight_by_sqrt_sigma': weight_by_sqrt_sigma
        }

    return job_dict


def reconstruction_sweep(count=200, seed=0, max_nodes=30, k_range=(2, 6), radius=1, weight_by_sqrt_sigma=True, n_jobs=1):
    """
        Full-rank reconstruction residual over `count` seeded random (graph, partition) instances.
    """

    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    if not 1 <= k_range[0] <= k_range[1]:
        raise ValueError(f"Invalid k range {k_range}")

    job_dict = get_sweep_job_dict(count, seed, max_nodes, k_range, radius, weight_by_sqrt_sigma)

    job_outcome = Parallel(n_jobs=n_jobs, backend="loky")(
        delayed(_sweep_instance)(**v) for k, v in tqdm(sorted(job_dict.items()))
    )

    return pd.DataFrame.from_records(job_outcome)
