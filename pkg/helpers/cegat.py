#!/bin/python
# -*- coding: utf-8 -*-

import os
import json
import logging
import numpy as np

from dataclasses import dataclass
from typing import Optional

from helpers.exceptions import ConfigurationError, FormatError

logger = logging.getLogger('icepool.cegat')

VARIANTS = ('gat', 'egat')
DEFAULT_LEAKY_SLOPE = 0.2


@dataclass
class CegatParams:
    """
        w:   d_in x d_out node projection
        a:   attention vector; [a_src ‖ a_dst ‖ a_edge] (length 2 d_out + d_e) for GAT,
             [a_src ‖ a_dst] (length 2 d_out) for EGAT
        w_e: d_e_in x d_e edge projection, GAT only
    """
    w: np.ndarray
    a: np.ndarray
    w_e: Optional[np.ndarray] = None
    leaky_slope: float = DEFAULT_LEAKY_SLOPE

    @property
    def variant(self):
        return 'gat' if self.w_e is not None else 'egat'

    @property
    def d_out(self):
        return self.w.shape[1]

    def check(self, inp):

        d_in, d_out = self.w.shape

        if inp.h.shape[1] != d_in:
            raise ConfigurationError(f"Node features have dim {inp.h.shape[1]}, w expects {d_in}")
        if not 0 < self.leaky_slope < 1:
            raise ConfigurationError(f"leaky_slope must lie in (0, 1), got {self.leaky_slope}")

        if self.variant == 'gat':
            if self.w_e.shape[0] != inp.e.shape[2]:
                raise ConfigurationError(f"Edge features have {inp.e.shape[2]} channels, w_e expects {self.w_e.shape[0]}")
            expected = 2 * d_out + self.w_e.shape[1]
        else:
            expected = 2 * d_out

        if self.a.shape != (expected,):
            raise ConfigurationError(f"Attention vector must have shape ({expected},), got {self.a.shape}")

    def copy(self):
        return CegatParams(
            w=self.w.copy(),
            a=self.a.copy(),
            w_e=None if self.w_e is None else self.w_e.copy(),
            leaky_slope=self.leaky_slope
        )


@dataclass(frozen=True)
class CoarseGraphInput:
    """
        h: K x d_in coarse node features; e: K x K x P edge features; mask: K x K attention support.
    """
    h: np.ndarray
    e: np.ndarray
    mask: np.ndarray

    def __post_init__(self):

        mask = np.asarray(self.mask, dtype=bool)

        if not np.array_equal(mask, mask.T):
            raise ValueError("Attention mask must be symmetric")
        if not np.all(np.diag(mask)):
            raise ValueError("Attention mask must include every self-edge")
        if self.e.shape[:2] != mask.shape or self.h.shape[0] != mask.shape[0]:
            raise ValueError(f"Inconsistent shapes: h {self.h.shape}, e {self.e.shape}, mask {mask.shape}")

        object.__setattr__(self, 'h', np.asarray(self.h, dtype=np.float64))
        object.__setattr__(self, 'e', np.asarray(self.e, dtype=np.float64))
        object.__setattr__(self, 'mask', mask)

    @property
    def k(self):
        return self.mask.shape[0]

    @classmethod
    def from_coarsening(cls, h, edge_features, a_coar):
        mask = (np.asarray(a_coar) > 0) | np.eye(len(a_coar), dtype=bool)
        return cls(h=h, e=edge_features, mask=mask)


@dataclass
class CegatGradients:
    w: np.ndarray
    a: np.ndarray
    w_e: Optional[np.ndarray]
    h: np.ndarray
    e: np.ndarray


def init_params(variant, d_in, d_out, rng, d_e=None, d_e_in=3, leaky_slope=DEFAULT_LEAKY_SLOPE):
    """
        Uniform in [-s, s] with s = 1/sqrt(fan_in) for every tensor.
    """

    if variant not in VARIANTS:
        raise ConfigurationError(f"Unknown CEGAT variant '{variant}', expected one of {VARIANTS}")

    def uniform(shape, fan_in):
        bound = 1.0 / np.sqrt(fan_in)
        return rng.uniform(-bound, bound, size=shape)

    w = uniform((d_in, d_out), d_in)

    if variant == 'gat':
        d_e = d_out if d_e is None else d_e
        w_e = uniform((d_e_in, d_e), d_e_in)
        a = uniform((2 * d_out + d_e,), 2 * d_out + d_e)
    else:
        w_e = None
        a = uniform((2 * d_out,), 2 * d_out)

    return CegatParams(w=w, a=a, w_e=w_e, leaky_slope=leaky_slope)


def leaky_relu(x, slope):
    return np.where(x > 0, x, slope * x)


def _leaky_relu_grad(x, slope):
    return np.where(x > 0, 1.0, slope)


def standardize_edge_features(e, mask, center=True):
    """
        Per channel, zero mean and unit variance over the masked entries (off-mask entries become 0).
        With center=False channels are only divided by their standard deviation, which keeps
        nonnegative features nonnegative.
    """

    e = np.asarray(e, dtype=np.float64)
    mask = np.asarray(mask, dtype=bool)
    out = np.zeros_like(e)

    for p in range(e.shape[2]):

        values = e[:, :, p][mask]
        mean = values.mean() if center and values.size > 0 else 0.0
        std = values.std() if values.size > 0 else 0.0

        out[:, :, p] = np.where(mask, (e[:, :, p] - mean) / (std if std > 0 else 1.0), 0.0)

    return out


def doubly_stochastic(t):
    """
        DS(t)_ij = Σ_k t~_ik t~_jk / Σ_v t~_vk with t~ = t / rowsum(t).
        Symmetric, and rows and columns sum to 1 wherever t has mass; rows and columns without
        mass contribute zero.
    """

    t = np.asarray(t, dtype=np.float64)

    row = t.sum(axis=1, keepdims=True)
    t_tilde = np.divide(t, row, out=np.zeros_like(t), where=row > 0)

    col = t_tilde.sum(axis=0)
    inv_col = np.divide(1.0, col, out=np.zeros_like(col), where=col > 0)

    return (t_tilde * inv_col) @ t_tilde.T


def _doubly_stochastic_backward(t, grad):

    row = t.sum(axis=1, keepdims=True)
    t_tilde = np.divide(t, row, out=np.zeros_like(t), where=row > 0)
    inv_row = np.divide(1.0, row, out=np.zeros_like(row), where=row > 0)

    col = t_tilde.sum(axis=0)
    inv_col = np.divide(1.0, col, out=np.zeros_like(col), where=col > 0)

    d_tilde = (grad + grad.T) @ (t_tilde * inv_col)
    d_inv_col = np.einsum('ik,ij,jk->k', t_tilde, grad, t_tilde)
    d_tilde += (-(inv_col ** 2) * d_inv_col)[None, :]

    return inv_row * (d_tilde - (d_tilde * t_tilde).sum(axis=1, keepdims=True))


def _split_attention(params):

    d_out = params.d_out

    return params.a[:d_out], params.a[d_out:2 * d_out], params.a[2 * d_out:]


def _gat_cache(inp, params):

    params.check(inp)

    z = inp.h @ params.w
    a_src, a_dst, a_edge = _split_attention(params)

    ez = inp.e @ params.w_e
    raw = (z @ a_src)[:, None] + (z @ a_dst)[None, :] + ez @ a_edge
    scores = leaky_relu(raw, params.leaky_slope)

    masked = np.where(inp.mask, scores, -np.inf)
    shifted = masked - masked.max(axis=1, keepdims=True)
    expd = np.where(inp.mask, np.exp(shifted), 0.0)
    alpha = expd / expd.sum(axis=1, keepdims=True)

    return {'z': z, 'ez': ez, 'raw': raw, 'alpha': alpha}


def gat_attention(inp, params):
    return _gat_cache(inp, params)['alpha']


def gat_forward(inp, params):
    """
        α_ij = softmax_j LeakyReLU(a^T [W h_i ‖ W h_j ‖ W_e E_ij·]) over the masked neighbourhood of i;
        output row i = Σ_j α_ij W h_j.
    """

    cache = _gat_cache(inp, params)

    return cache['alpha'] @ cache['z']


def _gat_backward(inp, params, upstream):

    cache = _gat_cache(inp, params)
    z, ez, raw, alpha = cache['z'], cache['ez'], cache['raw'], cache['alpha']
    a_src, a_dst, a_edge = _split_attention(params)

    d_alpha = upstream @ z.T
    d_z = alpha.T @ upstream

    # softmax rows; alpha is zero off the mask, so d_scores is too
    d_scores = alpha * (d_alpha - (alpha * d_alpha).sum(axis=1, keepdims=True))
    d_raw = d_scores * _leaky_relu_grad(raw, params.leaky_slope)

    d_src = d_raw.sum(axis=1)
    d_dst = d_raw.sum(axis=0)

    d_a = np.concatenate([z.T @ d_src, z.T @ d_dst, np.einsum('ij,ijq->q', d_raw, ez)])
    d_z += np.outer(d_src, a_src) + np.outer(d_dst, a_dst)

    d_w_e = np.einsum('ijp,ij,q->pq', inp.e, d_raw, a_edge)
    d_e = np.einsum('ij,pq,q->ijp', d_raw, params.w_e, a_edge)

    return CegatGradients(w=inp.h.T @ d_z, a=d_a, w_e=d_w_e, h=d_z @ params.w.T, e=d_e)


def _egat_cache(inp, params):

    params.check(inp)

    z = inp.h @ params.w
    a_src, a_dst, _ = _split_attention(params)

    raw = (z @ a_src)[:, None] + (z @ a_dst)[None, :]
    base = leaky_relu(raw, params.leaky_slope)

    # negative products are clamped before DSN, which needs nonnegative input
    scores = base[:, :, None] * inp.e * inp.mask[:, :, None]
    clamped = np.maximum(scores, 0.0)

    empty_rows = int(np.sum(~clamped.any(axis=(1, 2))))
    if empty_rows > 0:
        logger.debug(f"{empty_rows} of {inp.k} coarse nodes have no positive attention score in any channel")

    alpha = np.stack([doubly_stochastic(clamped[:, :, p]) for p in range(inp.e.shape[2])], axis=-1)

    return {'z': z, 'raw': raw, 'base': base, 'scores': scores, 'clamped': clamped, 'alpha': alpha}


def egat_attention(inp, params):
    return _egat_cache(inp, params)['alpha']


def egat_forward(inp, params):
    """
        Per channel p: α_p = DS(max(LeakyReLU(a^T [W h_i ‖ W h_j]) E_ijp, 0)) on the mask;
        output = mean over channels of α_p W h.
    """

    cache = _egat_cache(inp, params)
    n_channels = inp.e.shape[2]

    return np.einsum('ijp,jd->id', cache['alpha'], cache['z']) / n_channels


def _egat_backward(inp, params, upstream):

    cache = _egat_cache(inp, params)
    z, raw, base, scores, clamped, alpha = (cache[key] for key in ['z', 'raw', 'base', 'scores', 'clamped', 'alpha'])
    a_src, a_dst, _ = _split_attention(params)
    n_channels = inp.e.shape[2]

    d_alpha = upstream @ z.T / n_channels
    d_z = np.einsum('ijp,id->jd', alpha, upstream) / n_channels

    d_clamped = np.stack(
        [_doubly_stochastic_backward(clamped[:, :, p], d_alpha) for p in range(n_channels)], axis=-1
    )
    d_scores = d_clamped * (scores > 0)

    masked_e = inp.e * inp.mask[:, :, None]
    d_base = (d_scores * masked_e).sum(axis=2)
    d_e = d_scores * base[:, :, None] * inp.mask[:, :, None]

    d_raw = d_base * _leaky_relu_grad(raw, params.leaky_slope)
    d_src = d_raw.sum(axis=1)
    d_dst = d_raw.sum(axis=0)

    d_a = np.concatenate([z.T @ d_src, z.T @ d_dst])
    d_z += np.outer(d_src, a_src) + np.outer(d_dst, a_dst)

    return CegatGradients(w=inp.h.T @ d_z, a=d_a, w_e=None, h=d_z @ params.w.T, e=d_e)


def forward(inp, params):
    return gat_forward(inp, params) if params.variant == 'gat' else egat_forward(inp, params)


def backward(inp, params, upstream_gradient):
    """
        Reverse-mode gradients of forward(inp, params) contracted with upstream_gradient (K x d_out).
    """

    upstream_gradient = np.asarray(upstream_gradient, dtype=np.float64)

    if params.variant == 'gat':
        return _gat_backward(inp, params, upstream_gradient)

    return _egat_backward(inp, params, upstream_gradient)


def params_to_tensors(params, prefix='cegat'):

    tensors = {f'{prefix}.w': params.w, f'{prefix}.a': params.a, f'{prefix}.leaky_slope': np.array(params.leaky_slope)}

    if params.w_e is not None:
        tensors[f'{prefix}.w_e'] = params.w_e

    return tensors


def params_from_tensors(tensors, prefix='cegat'):

    return CegatParams(
        w=tensors[f'{prefix}.w'],
        a=tensors[f'{prefix}.a'],
        w_e=tensors.get(f'{prefix}.w_e'),
        leaky_slope=float(tensors[f'{prefix}.leaky_slope'])
    )


def save_params(path, tensors):
    """
        Writes <path>.bin (row-major little-endian float64, tensors back to back) and
        <path>.json (name, shape and element offset of every tensor). Returns both filenames.
    """

    manifest = {'dtype': 'float64', 'byte_order': 'little', 'tensors': []}
    offset = 0
    chunks = []

    for name, tensor in tensors.items():
        tensor = np.ascontiguousarray(tensor, dtype='<f8')
        manifest['tensors'].append({'name': name, 'shape': list(tensor.shape), 'offset': offset})
        offset += tensor.size
        chunks.append(tensor.reshape(-1))

    bin_file = f'{path}.bin'
    json_file = f'{path}.json'

    dirname = os.path.dirname(bin_file)
    if dirname and not os.path.exists(dirname):
        os.makedirs(dirname)

    np.concatenate(chunks if chunks else [np.zeros(0, dtype='<f8')]).tofile(bin_file)

    with open(json_file, 'w') as fp:
        json.dump(manifest, fp, indent=2)

    return [bin_file, json_file]


def load_params(path):

    with open(f'{path}.json', 'r') as fp:
        manifest = json.load(fp)

    flat = np.fromfile(f'{path}.bin', dtype='<f8')
    tensors = {}

    for entry in manifest['tensors']:
        size = int(np.prod(entry['shape'], dtype=np.int64))
        if entry['offset'] + size > flat.size:
            raise FormatError(f"Tensor '{entry['name']}' runs past the end of the archive", f'{path}.bin')
        tensors[entry['name']] = flat[entry['offset']:entry['offset'] + size].reshape(entry['shape']).astype(np.float64)

    return tensors
