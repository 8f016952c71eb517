import numpy as np
import pytest

from dataclasses import fields
from typing import Optional

from helpers.exceptions import ConfigurationError
from helpers.coarsen import coarsen
from helpers.partition import heavy_edge_partition
from helpers.preprocessing import preprocess_graph
from helpers import cegat, pipeline
from helpers.pipeline import IceConfig


def _prep(g, cfg):
    return preprocess_graph(g, cfg.target_k, cfg.seed, cfg.rank, radius=cfg.radius, weight_by_sqrt_sigma=cfg.weight_by_sqrt_sigma)


@pytest.mark.parametrize('overrides', [
    {'rank': 0}, {'radius': 0}, {'target_k': 0}, {'variant': 'gcn'},
    {'combine': 'max'}, {'leaky_slope': 1.5}, {'folds': 1}, {'learning_rate': -1},
])
def test_config_validation(overrides):
    with pytest.raises(ConfigurationError):
        IceConfig(**overrides)


def test_config_from_dict():

    cfg = IceConfig.from_dict({'rank': 2, 'variant': 'egat'})

    assert cfg.rank == 2
    assert cfg.variant == 'egat'
    assert cfg.updated(rank=None, seed=3) == IceConfig(rank=2, variant='egat', seed=3)

    with pytest.raises(ConfigurationError):
        IceConfig.from_dict({'rnak': 2})


def test_attention_fields_are_typed_with_the_attention_module():

    hints = {cls: {f.name: f.type for f in fields(cls)} for cls in (pipeline.IceParams, pipeline.IceGradients, pipeline.ModelInput)}

    assert hints[pipeline.IceParams]['cegat'] == Optional[cegat.CegatParams]
    assert hints[pipeline.IceGradients]['cegat'] == Optional[cegat.CegatGradients]
    assert hints[pipeline.ModelInput]['attention'] == Optional[cegat.CoarseGraphInput]
    assert pipeline.IceParams(w_out=np.zeros((2, 2)), b_out=np.zeros(2)).cegat is None


def test_baseline_matches_direct_computation(g1):

    cfg = IceConfig(target_k=2, use_svdpool=False, use_cegat=False)
    params = pipeline.init_params(cfg, g1.feature_dim, 2)

    out = pipeline.run_ice(g1, cfg, params)

    p = heavy_edge_partition(g1, 2, cfg.seed)
    x = coarsen(g1, p).x_coar * (p.k / g1.n)
    expected = x.mean(axis=0) @ params.w_out + params.b_out

    np.testing.assert_allclose(out.logits, expected, atol=1e-12)
    assert out.diagnostics['reconstruction_residual'] is None


@pytest.mark.parametrize('variant', ['gat', 'egat'])
def test_run_ice_is_deterministic(g1, variant):

    cfg = IceConfig(target_k=2, variant=variant)
    params = pipeline.init_params(cfg, g1.feature_dim, 2)

    first = pipeline.run_ice(g1, cfg, params)
    second = pipeline.run_ice(g1, cfg, pipeline.init_params(cfg, g1.feature_dim, 2))

    np.testing.assert_array_equal(first.logits, second.logits)
    assert first.logits.shape == (2,)
    assert first.embedding.shape == (cfg.d_hidden,)


def test_full_rank_residual_is_reported(g1):

    cfg = IceConfig(target_k=2, rank=6, radius=1)
    out = pipeline.run_ice(g1, cfg, pipeline.init_params(cfg, g1.feature_dim, 2))

    assert out.diagnostics['reconstruction_residual'] <= 1e-8
    assert out.diagnostics['entropy'].shape == (2, 2)
    assert set(out.diagnostics['timings'].keys()) >= {'partition', 'coarsen', 'entropy', 'svdpool', 'model'}


def test_combine_modes(g1):

    concat = IceConfig(target_k=2, rank=2, use_cegat=False)
    summed = IceConfig(target_k=2, rank=2, use_cegat=False, combine='sum')
    prep = _prep(g1, concat)

    x_concat = pipeline.model_input(g1, prep, concat).x
    x_sum = pipeline.model_input(g1, prep, summed).x

    d = g1.feature_dim
    assert x_concat.shape == (2, 3 * d)
    np.testing.assert_allclose(x_sum, x_concat[:, :d] + x_concat[:, d:2 * d] + x_concat[:, 2 * d:], atol=1e-12)


def test_params_must_fit_the_config(g1):

    with_cegat = IceConfig(target_k=2)
    without = IceConfig(target_k=2, use_cegat=False)

    params = pipeline.init_params(with_cegat, g1.feature_dim, 2)

    with pytest.raises(ConfigurationError):
        params.check(without, g1.feature_dim, 2)
    with pytest.raises(ConfigurationError):
        params.check(with_cegat, g1.feature_dim, 3)


def test_run_ice_leaves_preprocessing_untouched(g1):

    cfg = IceConfig(target_k=2)
    prep = _prep(g1, cfg)
    pooled = np.array(prep.components.pooled)

    params = pipeline.init_params(cfg, g1.feature_dim, 2)
    pipeline.run_ice(g1, cfg, params, prep=prep)
    pipeline.run_ice(g1, cfg, params, prep=prep)

    assert not prep.components.pooled.flags.writeable
    np.testing.assert_array_equal(prep.components.pooled, pooled)


@pytest.mark.parametrize('variant', ['gat', 'egat'])
def test_pipeline_gradients_match_finite_differences(g1, variant):

    cfg = IceConfig(target_k=2, variant=variant)
    mi = pipeline.model_input(g1, _prep(g1, cfg), cfg)
    params = pipeline.init_params(cfg, g1.feature_dim, 2)
    d_logits = np.array([0.3, -0.7])

    def loss():
        return float(pipeline.forward(mi, params)[2] @ d_logits)

    grads = pipeline.backward(mi, params, d_logits)

    for analytic, tensor in [(grads.w_out, params.w_out), (grads.b_out, params.b_out), (grads.cegat.w, params.cegat.w)]:
        for idx in np.ndindex(*tensor.shape):
            original = tensor[idx]
            tensor[idx] = original + 1e-5
            plus = loss()
            tensor[idx] = original - 1e-5
            minus = loss()
            tensor[idx] = original
            assert analytic[idx] == pytest.approx((plus - minus) / 2e-5, abs=1e-7)


def test_params_archive_reproduces_logits(tmp_path, g1):

    cfg = IceConfig(target_k=2, variant='egat')
    params = pipeline.init_params(cfg, g1.feature_dim, 2)

    pipeline.save_params(str(tmp_path / 'ice'), params)
    loaded = pipeline.load_params(str(tmp_path / 'ice'))

    np.testing.assert_array_equal(pipeline.run_ice(g1, cfg, loaded).logits, pipeline.run_ice(g1, cfg, params).logits)
