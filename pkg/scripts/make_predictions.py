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

from helpers.pipeline import IceConfig, load_params
from helpers.trainer import predict
from helpers.misc import load_dataset, write_document
from helpers.exceptions import IcepoolError

logging.config.fileConfig('logging.conf')
logger = logging.getLogger('root')


if __name__ == "__main__":

    tic = time.time()
    logger.info('Starting...')

    parser = argparse.ArgumentParser(description="This script applies a trained ICE model to a dataset.")
    parser.add_argument('config_file', type=str, help='a YAML config file')
    parser.add_argument('--format', choices=['json', 'csv'], default='csv')
    args = parser.parse_args()

    logger.info(f"Using {args.config_file} as config file.")

    with open(args.config_file) as fp:
        cfg = yaml.load(fp, Loader=yaml.FullLoader)[os.path.basename(__file__)]

    DATASET_CFG = cfg['dataset']
    OUTPUT_DIR = cfg['output_folder']
    PARAMS_FILE = cfg['model']['params'] # archive path without the .bin/.json extension
    MODEL_CONFIG_FILE = cfg['model']['config']

    written_files = []


    # ------ Loading the model and the dataset

    logger.info(f"Loading the model from {PARAMS_FILE}...")
    try:
        with open(MODEL_CONFIG_FILE) as fp:
            ICE_CFG = IceConfig.from_dict(yaml.load(fp, Loader=yaml.FullLoader))
        params = load_params(PARAMS_FILE)
    except (IcepoolError, OSError) as e:
        logger.critical(f"Failed to load the model: {e}")
        sys.exit(1)
    logger.info("...done.")

    logger.info("Loading the dataset...")
    try:
        ds = load_dataset(DATASET_CFG)
    except IcepoolError as e:
        logger.critical(f"Failed to load the dataset: {e}")
        sys.exit(1)
    logger.info(f"...done. {len(ds)} graphs were found.")


    # ------ Predicting

    logger.info("Making predictions...")
    try:
        predictions_df = predict(ds, ICE_CFG, params)
    except IcepoolError as e:
        logger.critical(f"Prediction failed: {e}")
        sys.exit(1)

    accuracy = (predictions_df.predicted == predictions_df.label).mean()
    logger.info(f"...done. Accuracy = {accuracy:.4f}.")

    written_files.append(write_document(predictions_df, OUTPUT_DIR, f'{ds.name}_predictions', args.format))


    print()
    logger.info("The following files were written. Let's check them out!")
    for written_file in written_files:
        logger.info(written_file)
    print()

    toc = time.time()
    logger.info(f"Nothing left to be done: exiting. Elapsed time: {(toc-tic):.2f} seconds")

    sys.stderr.flush()
