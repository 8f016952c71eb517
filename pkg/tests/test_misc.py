import argparse
import json

import pandas as pd
import pytest

from helpers.exceptions import ConfigurationError
from helpers.misc import load_dataset, add_ice_arguments, ice_config, write_document


def test_command_line_overrides_yaml():

    parser = add_ice_arguments(argparse.ArgumentParser())
    args = parser.parse_args(['--rank', '2', '--no-svdpool', '--variant', 'egat'])

    cfg = ice_config({'ice': {'rank': 5, 'target_k': 3}}, args)

    assert cfg.rank == 2
    assert cfg.target_k == 3
    assert cfg.variant == 'egat'
    assert cfg.use_svdpool is False
    assert cfg.use_cegat is True


def test_load_synthetic_dataset():

    ds = load_dataset({'source': 'synthetic', 'family': 'ring_of_cliques', 'count': 4, 'seed': 1})

    assert len(ds) == 4

    with pytest.raises(ConfigurationError):
        load_dataset({'source': 'ftp'})


def test_write_document(tmp_path):

    df = pd.DataFrame({'a': [1, 2]})

    csv_file = write_document(df, str(tmp_path), 'table', 'csv')
    json_file = write_document({'k': 2}, str(tmp_path / 'sub'), 'doc', 'json')

    assert pd.read_csv(csv_file).a.tolist() == [1, 2]
    with open(json_file) as fp:
        assert json.load(fp) == {'k': 2}

    with pytest.raises(ConfigurationError):
        write_document({'k': 2}, str(tmp_path), 'doc', 'csv')
