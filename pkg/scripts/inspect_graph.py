#!/bin/python
# -*- coding: utf-8 -*-

import logging
import logging.config
import time
import argparse
import yaml
import os, sys

# the following lines allow us to import modules from within this file's parent folder
from inspect import getsourcefile
current_path = os.path.abspath(getsourcefile(lambda:0))
current_dir = os.path.dirname(current_path)
parent_dir = current_dir[:current_dir.rfind(os.path.sep)]
sys.path.insert(0, parent_dir)

from helpers.partition import heavy_edge_partition, load_partition, save_partition
from helpers.coarsen import coarsen, coarsening_to_dict
from helpers.entropy import connection_entropy, entropy_to_dict
from helpers.svdpool import build_components, verify_reconstruction, components_to_dict
from helpers.misc import load_dataset, add_ice_arguments, ice_config, write_document
from helpers.exceptions import IcepoolError

logging.config.fileConfig('logging.conf')
logger = logging.getLogger('root')


if __name__ == "__main__":

    tic = time.time()
    logger.info('Starting...')

    parser = argparse.ArgumentParser(description="This script emits the coarsening, connection entropy and SVDPool document of a single graph.")
    parser.add_argument('config_file', type=str, help='a YAML config file')
    parser.add_argument('--graph', type=int, help='1-based graph id, overrides the config file')
    parser.add_argument('--partition-file', type=str, dest='partition_file', help='one cluster id per node, overrides the partitioner')
    parser.add_argument('--format', choices=['json'], default='json')
    add_ice_arguments(parser)
    args = parser.parse_args()

    logger.info(f"Using {args.config_file} as config file.")

    with open(args.config_file) as fp:
        cfg = yaml.load(fp, Loader=yaml.FullLoader)[os.path.basename(__file__)]

    DATASET_CFG = cfg['dataset']
    OUTPUT_DIR = cfg['output_folder']
    GRAPH_ID = args.graph if args.graph is not None else cfg.get('graph', 1)
    PARTITION_FILE = args.partition_file if args.partition_file is not None else cfg.get('partition_file', None)

    try:
        ICE_CFG = ice_config(cfg, args)
    except IcepoolError as e:
        logger.critical(f"Invalid configuration: {e}")
        sys.exit(1)

    written_files = []


    # ------ Loading the graph

    logger.info("Loading the dataset...")
    try:
        ds = load_dataset(DATASET_CFG)
    except IcepoolError as e:
        logger.critical(f"Failed to load the dataset: {e}")
        sys.exit(1)
    logger.info(f"...done. {len(ds)} graphs were found.")

    if not 1 <= GRAPH_ID <= len(ds):
        logger.critical(f"Graph id {GRAPH_ID} is outside [1, {len(ds)}].")
        sys.exit(1)

    g = ds[GRAPH_ID - 1]
    logger.info(f"Inspecting {g.name}: {g.n} nodes, {g.num_edges} edges.")


    # ------ Partition, coarsening, entropy, SVDPool

    try:
        if PARTITION_FILE is not None:
            logger.info(f"Loading the partition from {PARTITION_FILE}...")
            p = load_partition(PARTITION_FILE, g)
        else:
            logger.info("Computing the heavy-edge partition...")
            p = heavy_edge_partition(g, min(ICE_CFG.target_k, g.n), ICE_CFG.seed)
        logger.info(f"...done. K = {p.k}.")

        logger.info("Computing the coarsening, the connection entropy and the SVDPool components...")
        cr = coarsen(g, p)
        ef = connection_entropy(cr)
        comps = build_components(g, p, cr, ICE_CFG.rank, radius=ICE_CFG.radius, weight_by_sqrt_sigma=ICE_CFG.weight_by_sqrt_sigma)
        report = verify_reconstruction(g, p, comps)
        logger.info(f"...done. Reconstruction residual = {report.residual:.3e} (target: {report.target}).")
    except (IcepoolError, ValueError) as e:
        logger.critical(f"Failed to process {g.name}: {e}")
        sys.exit(1)


    # ------ Writing the document

    doc = {
        'graph': GRAPH_ID,
        'name': g.name,
        'label': g.label,
        'n': g.n,
        'config': ICE_CFG.to_dict(),
        'coarsening': coarsening_to_dict(cr, p),
        'entropy': entropy_to_dict(ef),
        'svdpool': components_to_dict(comps, report),
    }

    written_files.append(write_document(doc, OUTPUT_DIR, f'{g.name}_inspection', args.format))
    written_files.append(save_partition(os.path.join(OUTPUT_DIR, f'{g.name}_partition.txt'), p))


    print()
    logger.info("The following files were written. Let's check them out!")
    for written_file in written_files:
        logger.info(written_file)
    print()

    toc = time.time()
    logger.info(f"Nothing left to be done: exiting. Elapsed time: {(toc-tic):.2f} seconds")

    sys.stderr.flush()
