#!/bin/python
# -*- coding: utf-8 -*-

import os
import time
import logging

from dataclasses import dataclass
from typing import Optional

from joblib import Parallel, delayed
from tqdm import tqdm

from helpers.partition import Partition, heavy_edge_partition
from helpers.coarsen import CoarseningResult, coarsen
from helpers.entropy import EntropyFeatures, connection_entropy
from helpers.svdpool import SvdPoolComponents, ReconstructionReport, build_components, verify_reconstruction

logger = logging.getLogger('icepool.preprocessing')

THREADS_ENV_VAR = 'ICEPOOL_THREADS'


@dataclass(frozen=True)
class GraphPreprocessing:
    """
        Everything run_ice needs from a graph that does not depend on learnable parameters.
    """
    partition: Partition
    coarsening: CoarseningResult
    entropy: EntropyFeatures
    components: SvdPoolComponents
    reconstruction: ReconstructionReport
    timings: dict


def resolve_n_jobs(n_jobs=1):
    """
        ICEPOOL_THREADS, when set, caps the number of preprocessing workers.
    """

    n_jobs = max(1, int(n_jobs))
    env_value = os.environ.get(THREADS_ENV_VAR)

    if env_value is None or env_value.strip() == '':
        return n_jobs

    try:
        cap = int(env_value)
    except ValueError:
        logger.warning(f"Ignoring {THREADS_ENV_VAR}={env_value!r}: not an integer.")
        return n_jobs

    return max(1, min(n_jobs, cap))


def preprocess_graph(g, target_k, seed, rank, radius=1, weight_by_sqrt_sigma=True):

    timings = {}

    tic = time.time()
    # small graphs are kept whole rather than rejected
    p = heavy_edge_partition(g, min(target_k, g.n), seed)
    timings['partition'] = time.time() - tic

    tic = time.time()
    cr = coarsen(g, p)
    timings['coarsen'] = time.time() - tic

    tic = time.time()
    ef = connection_entropy(cr)
    timings['entropy'] = time.time() - tic

    tic = time.time()
    comps = build_components(g, p, cr, rank, radius=radius, weight_by_sqrt_sigma=weight_by_sqrt_sigma)
    report = verify_reconstruction(g, p, comps, log_level=logging.DEBUG)
    timings['svdpool'] = time.time() - tic

    logger.debug(f"{g.name}: K = {p.k}, residual = {report.residual:.3e}")

    return GraphPreprocessing(
        partition=p,
        coarsening=cr,
        entropy=ef,
        components=comps,
        reconstruction=report,
        timings=timings
    )


def cache_key(idx, cfg):
    return (idx, cfg.target_k, cfg.seed, cfg.rank, cfg.radius, cfg.weight_by_sqrt_sigma)


def get_job_dict(ds, cfg, indices):

    job_dict = {}

    for idx in indices:
        job_dict[idx] = {
            'g': ds[idx],
            'target_k': cfg.target_k,
            'seed': cfg.seed,
            'rank': cfg.rank,
            'radius': cfg.radius,
            'weight_by_sqrt_sigma': cfg.weight_by_sqrt_sigma
        }

    return job_dict


def _freeze(prep):
    """
        Arrays that crossed a worker boundary come back writable; lock them again.
    """

    p, cr, ef, comps = prep.partition, prep.coarsening, prep.entropy, prep.components

    arrays = [p.membership, p.sizes, *p.node_lists]
    arrays += [cr.a_coar, cr.x_coar, cr.a_int, cr.a_ext, *cr.pair_blocks.values()]
    arrays += [ef.h, ef.edge_features, comps.aggregation, comps.pooled]
    for triplet in comps.per_pair.values():
        arrays += [triplet.u, triplet.sigma, triplet.v]

    for array in arrays:
        array.setflags(write=False)

    return prep


class PreprocessingCache:
    """
        Per-graph preprocessing results keyed by (graph index, target_k, seed, rank, radius, weighting).
        Cached arrays are read-only, so entries can be shared between pipeline runs.
    """

    def __init__(self):
        self._entries = {}

    def __len__(self):
        return len(self._entries)

    def __contains__(self, key):
        return key in self._entries

    def get(self, idx, cfg) -> Optional[GraphPreprocessing]:
        return self._entries.get(cache_key(idx, cfg))

    def put(self, idx, cfg, prep):
        self._entries[cache_key(idx, cfg)] = _freeze(prep)

    def clear(self):
        self._entries.clear()


def preprocess_dataset(ds, cfg, n_jobs=None, cache=None, indices=None):
    """
        Preprocesses the requested graphs (all by default) in parallel and returns the results
        in the order of `indices`. Graphs already present in `cache` are not recomputed.
    """

    indices = list(range(len(ds))) if indices is None else [int(idx) for idx in indices]
    n_jobs = resolve_n_jobs(cfg.n_jobs if n_jobs is None else n_jobs)
    cache = PreprocessingCache() if cache is None else cache

    missing = [idx for idx in indices if cache.get(idx, cfg) is None]

    if len(missing) > 0:

        job_dict = get_job_dict(ds, cfg, missing)

        job_outcome = Parallel(n_jobs=n_jobs, backend="loky")(
            delayed(preprocess_graph)(**v) for k, v in tqdm(sorted(job_dict.items()), disable=len(job_dict) < 2)
        )

        for idx, prep in zip(sorted(job_dict.keys()), job_outcome):
            cache.put(idx, cfg, prep)

    return [cache.get(idx, cfg) for idx in indices]
