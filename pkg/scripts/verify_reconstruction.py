#!/bin/python
# -*- coding: utf-8 -*-

import logging
import logging.config
import time
import argparse
import yaml
import os, sys

import plotly.graph_objects as go

# the following lines allow us to import modules from within this file's parent folder
from inspect import getsourcefile
current_path = os.path.abspath(getsourcefile(lambda:0))
current_dir = os.path.dirname(current_path)
parent_dir = current_dir[:current_dir.rfind(os.path.sep)]
sys.path.insert(0, parent_dir)

from helpers.svdpool import reconstruction_sweep
from helpers.preprocessing import resolve_n_jobs
from helpers.misc import write_document
from helpers.exceptions import IcepoolError

logging.config.fileConfig('logging.conf')
logger = logging.getLogger('root')


if __name__ == "__main__":

    tic = time.time()
    logger.info('Starting...')

    parser = argparse.ArgumentParser(description="This script checks that full-rank SVDPool reconstructs the inter-cluster adjacency of random graphs.")
    parser.add_argument('config_file', type=str, help='a YAML config file')
    parser.add_argument('--seed', type=int)
    parser.add_argument('--radius', type=int)
    parser.add_argument('--format', choices=['json', 'csv'], default='csv')
    args = parser.parse_args()

    logger.info(f"Using {args.config_file} as config file.")

    with open(args.config_file) as fp:
        cfg = yaml.load(fp, Loader=yaml.FullLoader)[os.path.basename(__file__)]

    OUTPUT_DIR = cfg['output_folder']
    COUNT = cfg['count']
    SEED = args.seed if args.seed is not None else cfg['seed']
    RADIUS = args.radius if args.radius is not None else cfg.get('radius', 1)
    MAX_NODES = cfg['max_nodes']
    K_RANGE = (cfg['k_range']['min'], cfg['k_range']['max'])
    TOLERANCE = float(cfg['tolerance'])
    N_JOBS = resolve_n_jobs(cfg.get('n_jobs', 1))

    written_files = []


    # ------ Sweep

    logger.info(f"Reconstructing {COUNT} random graphs (N <= {MAX_NODES}, K in {K_RANGE}, radius {RADIUS})...")
    try:
        sweep_df = reconstruction_sweep(
            count=COUNT, seed=SEED, max_nodes=MAX_NODES, k_range=K_RANGE, radius=RADIUS, n_jobs=N_JOBS
        )
    except IcepoolError as e:
        logger.critical(f"Reconstruction sweep failed: {e}")
        sys.exit(1)
    logger.info(f"...done. Max residual = {sweep_df.residual.max():.3e}.")

    written_files.append(write_document(sweep_df, OUTPUT_DIR, 'reconstruction_residuals', args.format))


    # ------ Plot

    fig = go.Figure()

    fig.add_trace(
        go.Scatter(
            x=sweep_df['n'],
            y=sweep_df['residual'],
            mode='markers',
            text=sweep_df['instance'],
            name='residual'
        )
    )

    fig.update_layout(xaxis_title="# nodes", yaxis_title="max-abs residual")

    file_to_write = os.path.join(OUTPUT_DIR, 'reconstruction_residuals.html')
    fig.write_html(file_to_write)
    written_files.append(file_to_write)


    print()
    logger.info("The following files were written. Let's check them out!")
    for written_file in written_files:
        logger.info(written_file)
    print()

    failures = sweep_df[sweep_df.expected_to_vanish & (sweep_df.residual > TOLERANCE)]

    if len(failures) > 0:
        logger.critical(f"{len(failures)} of {len(sweep_df)} instances exceed the {TOLERANCE:.1e} bound: {failures.instance.tolist()}")
        sys.exit(1)

    toc = time.time()
    logger.info(f"Nothing left to be done: exiting. Elapsed time: {(toc-tic):.2f} seconds")

    sys.stderr.flush()
