#!/bin/python
# -*- coding: utf-8 -*-

import os
import json
import logging

from helpers.graph_core import load_tu_dataset, generate_synthetic, DEFAULT_MAX_DEGREE_BUCKET
from helpers.pipeline import IceConfig
from helpers.exceptions import ConfigurationError

logger = logging.getLogger('icepool.misc')


def load_dataset(dataset_cfg):
    """
        dataset_cfg is the `dataset` block of a script section:
          source: tu        -> root_dir, name
          source: synthetic -> family, count, seed
    """

    source = dataset_cfg.get('source', 'tu')
    max_bucket = dataset_cfg.get('max_degree_bucket', DEFAULT_MAX_DEGREE_BUCKET)

    if source == 'tu':
        return load_tu_dataset(dataset_cfg['root_dir'], dataset_cfg['name'], max_degree_bucket=max_bucket)

    if source == 'synthetic':
        logger.info(f"Generating {dataset_cfg['count']} '{dataset_cfg['family']}' graphs...")
        return generate_synthetic(
            dataset_cfg['family'], dataset_cfg['count'], dataset_cfg.get('seed', 0), max_degree_bucket=max_bucket
        )

    raise ConfigurationError(f"Unknown dataset source '{source}', expected 'tu' or 'synthetic'")


def add_ice_arguments(parser):
    """
        Flags mirroring IceConfig; anything left unset falls back to the YAML `ice` block.
    """

    parser.add_argument('--target-k', type=int, dest='target_k')
    parser.add_argument('--rank', type=int)
    parser.add_argument('--radius', type=int)
    parser.add_argument('--variant', choices=['gat', 'egat'])
    parser.add_argument('--use-svdpool', dest='use_svdpool', action='store_true', default=None)
    parser.add_argument('--no-svdpool', dest='use_svdpool', action='store_false', default=None)
    parser.add_argument('--use-cegat', dest='use_cegat', action='store_true', default=None)
    parser.add_argument('--no-cegat', dest='use_cegat', action='store_false', default=None)
    parser.add_argument('--combine', choices=['concat', 'sum'])
    parser.add_argument('--seed', type=int)
    parser.add_argument('--epochs', type=int)
    parser.add_argument('--learning-rate', type=float, dest='learning_rate')
    parser.add_argument('--d-hidden', type=int, dest='d_hidden')

    return parser


def ice_config(section_cfg, args=None):

    cfg = IceConfig.from_dict(section_cfg.get('ice', None) or {})

    if args is None:
        return cfg

    overrides = {k: getattr(args, k, None) for k in [
        'target_k', 'rank', 'radius', 'variant', 'use_svdpool', 'use_cegat',
        'combine', 'seed', 'epochs', 'learning_rate', 'd_hidden'
    ]}

    return cfg.updated(**overrides)


def write_document(doc, output_dir, basename, fmt='json'):
    """
        doc is either a dict (JSON only) or a pandas DataFrame (JSON records or CSV).
    """

    if not os.path.exists(output_dir):
        os.makedirs(output_dir)

    file_to_write = os.path.join(output_dir, f'{basename}.{fmt}')

    if fmt == 'csv':
        if isinstance(doc, dict):
            raise ConfigurationError(f"'{basename}' cannot be written as CSV")
        doc.to_csv(file_to_write, index=False)
    elif isinstance(doc, dict):
        with open(file_to_write, 'w') as fp:
            json.dump(doc, fp, indent=2)
    else:
        doc.to_json(file_to_write, orient='records', indent=2)

    return file_to_write
