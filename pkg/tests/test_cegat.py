import numpy as np
import pytest

from helpers.exceptions import ConfigurationError
from helpers import cegat
from helpers.cegat import CoarseGraphInput, CegatParams


def _random_instance(rng, variant, k=4, d_in=3, d_out=2):

    upper = np.triu(rng.random((k, k)) < 0.6, k=1)
    mask = upper | upper.T | np.eye(k, dtype=bool)

    if variant == 'gat':
        e = rng.normal(size=(k, k, 3))
    else:
        e = rng.uniform(0.1, 1.0, size=(k, k, 3))
    e = e * mask[:, :, None]

    inp = CoarseGraphInput(h=rng.normal(size=(k, d_in)), e=e, mask=mask)
    params = cegat.init_params(variant, d_in, d_out, rng)
    params.a = rng.normal(size=params.a.shape)

    return inp, params


def _loss(inp, params, upstream):
    return float(np.sum(cegat.forward(inp, params) * upstream))


def _numeric_gradient(f, x, step=1e-5):

    grad = np.zeros_like(x)

    for idx in np.ndindex(*x.shape):
        original = x[idx]
        x[idx] = original + step
        plus = f()
        x[idx] = original - step
        minus = f()
        x[idx] = original
        grad[idx] = (plus - minus) / (2 * step)

    return grad


def _relative_error(analytic, numeric):
    # gradients that vanish analytically are compared in absolute terms
    return np.max(np.abs(analytic - numeric)) / max(np.max(np.abs(numeric)), np.max(np.abs(analytic)), 1e-6)


@pytest.mark.parametrize('variant', ['gat', 'egat'])
def test_gradients_match_finite_differences(variant):

    rng = np.random.default_rng(0 if variant == 'gat' else 1)

    for _ in range(20):

        inp, params = _random_instance(rng, variant, k=int(rng.integers(2, 6)))
        upstream = rng.normal(size=(inp.k, params.d_out))
        grads = cegat.backward(inp, params, upstream)

        h = inp.h.copy()
        e = inp.e.copy()

        def with_inputs():
            return _loss(CoarseGraphInput(h=h, e=e, mask=inp.mask), params, upstream)

        checks = [
            (grads.w, params.w),
            (grads.a, params.a),
            (grads.h, h),
            (grads.e, e),
        ]
        if variant == 'gat':
            checks.append((grads.w_e, params.w_e))
        else:
            assert grads.w_e is None

        for analytic, tensor in checks:
            numeric = _numeric_gradient(with_inputs, tensor)
            assert _relative_error(analytic, numeric) < 1e-4


@pytest.mark.parametrize('variant', ['gat', 'egat'])
def test_zero_upstream_gives_zero_gradients(variant):

    inp, params = _random_instance(np.random.default_rng(2), variant)
    grads = cegat.backward(inp, params, np.zeros((inp.k, params.d_out)))

    for g in [grads.w, grads.a, grads.h, grads.e] + ([grads.w_e] if variant == 'gat' else []):
        np.testing.assert_array_equal(g, 0)


@pytest.mark.parametrize('variant', ['gat', 'egat'])
def test_masked_off_edge_features_get_no_gradient(variant):

    rng = np.random.default_rng(3)

    for _ in range(10):
        inp, params = _random_instance(rng, variant, k=5)
        grads = cegat.backward(inp, params, rng.normal(size=(5, params.d_out)))
        assert np.all(grads.e[~inp.mask] == 0.0)


def test_gat_attention_rows_are_distributions():

    rng = np.random.default_rng(4)

    for _ in range(20):

        inp, params = _random_instance(rng, 'gat')
        alpha = cegat.gat_attention(inp, params)

        np.testing.assert_allclose(alpha.sum(axis=1), np.ones(inp.k), atol=1e-12)
        assert np.all(alpha >= 0)
        assert np.all(alpha[~inp.mask] == 0.0)


def test_gat_single_node():

    rng = np.random.default_rng(5)
    inp = CoarseGraphInput(h=rng.normal(size=(1, 3)), e=rng.normal(size=(1, 1, 3)), mask=np.ones((1, 1), dtype=bool))
    params = cegat.init_params('gat', 3, 2, rng)

    np.testing.assert_allclose(cegat.gat_forward(inp, params), inp.h @ params.w, atol=1e-12)


def test_gat_zero_attention_vector_averages_neighbours():

    inp, params = _random_instance(np.random.default_rng(6), 'gat', k=5)
    params.a = np.zeros_like(params.a)

    mask = inp.mask.astype(float)
    expected = (mask / mask.sum(axis=1, keepdims=True)) @ (inp.h @ params.w)

    np.testing.assert_allclose(cegat.gat_forward(inp, params), expected, atol=1e-12)


def test_doubly_stochastic_examples():

    np.testing.assert_allclose(cegat.doubly_stochastic(np.eye(3)), np.eye(3), atol=1e-12)
    np.testing.assert_allclose(cegat.doubly_stochastic(np.ones((2, 2))), np.full((2, 2), 0.5), atol=1e-12)


def test_doubly_stochastic_on_positive_matrices():

    rng = np.random.default_rng(7)

    for _ in range(100):

        k = int(rng.integers(1, 9))
        ds = cegat.doubly_stochastic(rng.uniform(0.01, 5.0, size=(k, k)))

        np.testing.assert_allclose(ds.sum(axis=0), np.ones(k), atol=1e-10)
        np.testing.assert_allclose(ds.sum(axis=1), np.ones(k), atol=1e-10)
        np.testing.assert_allclose(ds, ds.T, atol=1e-12)
        assert np.all(ds >= 0)


def test_doubly_stochastic_skips_empty_rows():

    t = np.array([[1.0, 2.0, 0.0], [3.0, 1.0, 0.0], [0.0, 0.0, 0.0]])
    ds = cegat.doubly_stochastic(t)

    np.testing.assert_array_equal(ds[2], 0)
    np.testing.assert_array_equal(ds[:, 2], 0)
    np.testing.assert_allclose(ds[:2, :2].sum(axis=1), np.ones(2), atol=1e-12)


def test_egat_channel_without_mass_contributes_zero():

    rng = np.random.default_rng(8)
    inp, params = _random_instance(rng, 'egat')
    e = inp.e.copy()
    e[:, :, 1] = 0.0

    alpha = cegat.egat_attention(CoarseGraphInput(h=inp.h, e=e, mask=inp.mask), params)

    np.testing.assert_array_equal(alpha[:, :, 1], 0)


@pytest.mark.parametrize('variant', ['gat', 'egat'])
def test_permutation_equivariance(variant):

    rng = np.random.default_rng(9)

    for _ in range(10):

        inp, params = _random_instance(rng, variant, k=5)
        perm = rng.permutation(5)
        permuted = CoarseGraphInput(h=inp.h[perm], e=inp.e[np.ix_(perm, perm)], mask=inp.mask[np.ix_(perm, perm)])

        np.testing.assert_allclose(cegat.forward(permuted, params), cegat.forward(inp, params)[perm], atol=1e-12)


def test_standardize_edge_features():

    rng = np.random.default_rng(10)
    inp, _ = _random_instance(rng, 'egat', k=6)

    centered = cegat.standardize_edge_features(inp.e, inp.mask)
    scaled = cegat.standardize_edge_features(inp.e, inp.mask, center=False)

    for p in range(3):
        values = centered[:, :, p][inp.mask]
        assert values.mean() == pytest.approx(0.0, abs=1e-12)
        assert values.std() == pytest.approx(1.0, abs=1e-12)
        assert scaled[:, :, p][inp.mask].std() == pytest.approx(1.0, abs=1e-12)

    assert np.all(centered[~inp.mask] == 0)
    assert np.all(scaled >= 0)


def test_coarse_graph_input_requires_self_edges():
    with pytest.raises(ValueError):
        CoarseGraphInput(h=np.ones((2, 1)), e=np.zeros((2, 2, 3)), mask=np.array([[True, True], [True, False]]))


def test_params_check_rejects_inconsistent_shapes():

    inp, params = _random_instance(np.random.default_rng(11), 'gat')
    broken = CegatParams(w=params.w, a=params.a[:-1], w_e=params.w_e)

    with pytest.raises(ConfigurationError):
        cegat.forward(inp, broken)
    with pytest.raises(ConfigurationError):
        cegat.init_params('gcn', 3, 2, np.random.default_rng(0))


def test_params_archive(tmp_path):

    _, params = _random_instance(np.random.default_rng(12), 'gat')
    path = str(tmp_path / 'params')

    written = cegat.save_params(path, cegat.params_to_tensors(params))
    loaded = cegat.params_from_tensors(cegat.load_params(path))

    assert written == [f'{path}.bin', f'{path}.json']
    np.testing.assert_array_equal(loaded.w, params.w)
    np.testing.assert_array_equal(loaded.a, params.a)
    np.testing.assert_array_equal(loaded.w_e, params.w_e)
    assert loaded.leaky_slope == params.leaky_slope
