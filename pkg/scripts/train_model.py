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

from helpers.pipeline import save_params
from helpers.preprocessing import PreprocessingCache, preprocess_dataset
from helpers.trainer import train, cross_validate
from helpers.misc import load_dataset, add_ice_arguments, ice_config, write_document
from helpers.exceptions import IcepoolError

logging.config.fileConfig('logging.conf')
logger = logging.getLogger('root')


if __name__ == "__main__":

    tic = time.time()
    logger.info('Starting...')

    parser = argparse.ArgumentParser(description="This script trains the ICE graph classifier.")
    parser.add_argument('config_file', type=str, help='a YAML config file')
    parser.add_argument('--format', choices=['json', 'csv'], default='csv')
    add_ice_arguments(parser)
    args = parser.parse_args()

    logger.info(f"Using {args.config_file} as config file.")

    with open(args.config_file) as fp:
        cfg = yaml.load(fp, Loader=yaml.FullLoader)[os.path.basename(__file__)]

    DATASET_CFG = cfg['dataset']
    OUTPUT_DIR = cfg['output_folder']
    PARAMS_BASENAME = cfg.get('params_basename', 'ice_params')

    try:
        ICE_CFG = ice_config(cfg, args)
    except IcepoolError as e:
        logger.critical(f"Invalid configuration: {e}")
        sys.exit(1)

    logger.info(f"Model configuration: {ICE_CFG.to_dict()}")

    # let's make the output directory in case it doesn't exist
    if not os.path.exists(OUTPUT_DIR):
        os.makedirs(OUTPUT_DIR)

    written_files = []


    # ------ Loading the dataset

    logger.info("Loading the dataset...")
    try:
        ds = load_dataset(DATASET_CFG)
    except IcepoolError as e:
        logger.critical(f"Failed to load the dataset: {e}")
        sys.exit(1)
    logger.info(f"...done. {len(ds)} graphs were found.")


    # ------ Preprocessing

    logger.info("Partitioning, coarsening and decomposing every graph...")
    cache = PreprocessingCache()
    try:
        preprocess_dataset(ds, ICE_CFG, cache=cache)
    except IcepoolError as e:
        logger.critical(f"Preprocessing failed: {e}")
        sys.exit(1)
    logger.info(f"...done. {len(cache)} graphs were preprocessed.")


    # ------ Training

    try:

        if ICE_CFG.folds > 0:
            logger.info(f"Running {ICE_CFG.folds}-fold cross-validation...")
            folds_df, mean_accuracy, std_accuracy = cross_validate(ds, ICE_CFG, cache=cache)
            logger.info(f"...done. Test accuracy = {mean_accuracy:.4f} ± {std_accuracy:.4f}.")
            written_files.append(write_document(folds_df, OUTPUT_DIR, 'cross_validation', args.format))

        logger.info("Training on the train/validation split...")
        result = train(ds, ICE_CFG, cache=cache)
        logger.info("...done.")

    except IcepoolError as e:
        logger.critical(f"Training failed: {e}")
        sys.exit(1)

    written_files += save_params(os.path.join(OUTPUT_DIR, PARAMS_BASENAME), result.params)

    file_to_write = os.path.join(OUTPUT_DIR, f'{PARAMS_BASENAME}_config.yaml')
    with open(file_to_write, 'w') as fp:
        yaml.dump(ICE_CFG.to_dict(), fp)
    written_files.append(file_to_write)

    written_files.append(write_document(result.metrics, OUTPUT_DIR, 'training_metrics', args.format))


    # ------ Training curves

    fig = go.Figure()

    for y in ['train_accuracy', 'validation_accuracy']:

        fig.add_trace(
            go.Scatter(
                x=result.metrics['epoch'],
                y=result.metrics[y],
                mode='lines',
                name=y
            )
        )

    fig.add_trace(
        go.Scatter(
            x=result.metrics['epoch'],
            y=result.metrics['loss'],
            mode='lines',
            name='loss',
            yaxis='y2'
        )
    )

    fig.update_layout(
        xaxis_title="epoch",
        yaxis=dict(title="accuracy", range=[0., 1]),
        yaxis2=dict(title="loss", overlaying='y', side='right')
    )

    file_to_write = os.path.join(OUTPUT_DIR, 'training_curves.html')
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
