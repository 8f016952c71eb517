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

from helpers.trainer import ablate
from helpers.misc import load_dataset, add_ice_arguments, ice_config, write_document
from helpers.exceptions import IcepoolError

logging.config.fileConfig('logging.conf')
logger = logging.getLogger('root')


if __name__ == "__main__":

    tic = time.time()
    logger.info('Starting...')

    parser = argparse.ArgumentParser(description="This script evaluates the base model and its combinations with CEGAT and SVDPool.")
    parser.add_argument('config_file', type=str, help='a YAML config file')
    parser.add_argument('--format', choices=['json', 'csv'], default='csv')
    add_ice_arguments(parser)
    args = parser.parse_args()

    logger.info(f"Using {args.config_file} as config file.")

    with open(args.config_file) as fp:
        cfg = yaml.load(fp, Loader=yaml.FullLoader)[os.path.basename(__file__)]

    DATASET_CFG = cfg['dataset']
    OUTPUT_DIR = cfg['output_folder']

    try:
        ICE_CFG = ice_config(cfg, args)
    except IcepoolError as e:
        logger.critical(f"Invalid configuration: {e}")
        sys.exit(1)

    written_files = []


    # ------ Loading the dataset

    logger.info("Loading the dataset...")
    try:
        ds = load_dataset(DATASET_CFG)
    except IcepoolError as e:
        logger.critical(f"Failed to load the dataset: {e}")
        sys.exit(1)
    logger.info(f"...done. {len(ds)} graphs were found.")


    # ------ Ablation

    logger.info("Running the ablation...")
    try:
        ablation_df = ablate(ds, ICE_CFG)
    except IcepoolError as e:
        logger.critical(f"Ablation failed: {e}")
        sys.exit(1)
    logger.info("...done.")

    for row in ablation_df.itertuples():
        logger.info(f"{row.model:<15} accuracy = {row.accuracy:.4f}")

    written_files.append(write_document(ablation_df, OUTPUT_DIR, f'{ds.name}_ablation', args.format))


    # ------ Bar chart

    fig = go.Figure()

    for y in ['train_accuracy', 'accuracy']:

        fig.add_trace(
            go.Bar(
                x=ablation_df['model'],
                y=ablation_df[y],
                error_y=dict(type='data', array=ablation_df['accuracy_std']) if y == 'accuracy' and ICE_CFG.folds > 0 else None,
                name=y
            )
        )

    fig.update_layout(barmode='group', yaxis=dict(title="accuracy", range=[0., 1]), title=f"Ablation on {ds.name}")

    file_to_write = os.path.join(OUTPUT_DIR, f'{ds.name}_ablation.html')
    fig.write_html(file_to_write)
    written_files.append(file_to_write)


    print()
    logger.info("The following files were written. Let's check them out!")
    for written_file in written_files:
        logger.info(written_file)
    print()

    toc = time.time()
    logger.info(f"Nothing left to be done: exiting. Elapsed time: {(toc-tic):.2f} seconds")

    sys.stderr.flush()
