#!/bin/python
# -*- coding: utf-8 -*-

import time
import logging
import numpy as np

from dataclasses import dataclass, field, fields, asdict, replace
from typing import Optional

from helpers import cegat as attention_layer
from helpers.exceptions import ConfigurationError
from helpers.preprocessing import preprocess_graph

logger = logging.getLogger('icepool.pipeline')

COMBINE_MODES = ('concat', 'sum')


@dataclass(frozen=True)
class IceConfig:
    target_k: int = 4
    rank: int = 3
    radius: int = 1
    variant: str = 'gat'
    use_svdpool: bool = True
    use_cegat: bool = True
    combine: str = 'concat'
    seed: int = 0
    epochs: int = 200
    learning_rate: float = 0.5
    d_hidden: int = 16
    weight_by_sqrt_sigma: bool = True
    standardize_edge_features: bool = True
    leaky_slope: float = attention_layer.DEFAULT_LEAKY_SLOPE
    validation_fraction: float = 0.2
    folds: int = 0
    n_jobs: int = 1

    def __post_init__(self):

        for name in ['target_k', 'rank', 'radius', 'd_hidden', 'n_jobs']:
            if int(getattr(self, name)) < 1:
                raise ConfigurationError(f"{name} must be >= 1, got {getattr(self, name)}")

        if self.epochs < 0:
            raise ConfigurationError(f"epochs must be >= 0, got {self.epochs}")
        if self.learning_rate < 0:
            raise ConfigurationError(f"learning_rate must be >= 0, got {self.learning_rate}")
        if self.variant not in attention_layer.VARIANTS:
            raise ConfigurationError(f"variant must be one of {attention_layer.VARIANTS}, got '{self.variant}'")
        if self.combine not in COMBINE_MODES:
            raise ConfigurationError(f"combine must be one of {COMBINE_MODES}, got '{self.combine}'")
        if not 0 < self.leaky_slope < 1:
            raise ConfigurationError(f"leaky_slope must lie in (0, 1), got {self.leaky_slope}")
        if not 0 <= self.validation_fraction < 1:
            raise ConfigurationError(f"validation_fraction must lie in [0, 1), got {self.validation_fraction}")
        if self.folds == 1 or self.folds < 0:
            raise ConfigurationError(f"folds must be 0 (single split) or >= 2, got {self.folds}")

    @classmethod
    def from_dict(cls, the_dict):

        known = {f.name for f in fields(cls)}
        unknown = set(the_dict.keys()) - known

        if len(unknown) > 0:
            raise ConfigurationError(f"Unknown configuration keys: {sorted(unknown)}")

        return cls(**the_dict)

    def to_dict(self):
        return asdict(self)

    def updated(self, **kwargs):
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})


@dataclass
class IceParams:
    w_out: np.ndarray
    b_out: np.ndarray
    cegat: Optional[attention_layer.CegatParams] = None

    def copy(self):
        return IceParams(
            w_out=self.w_out.copy(),
            b_out=self.b_out.copy(),
            cegat=None if self.cegat is None else self.cegat.copy()
        )

    def check(self, cfg, feature_dim, num_classes):

        d_in = combined_dim(cfg, feature_dim)
        d_embed = cfg.d_hidden if cfg.use_cegat else d_in

        if cfg.use_cegat != (self.cegat is not None):
            raise ConfigurationError(f"Parameters {'lack' if cfg.use_cegat else 'carry'} an attention layer")
        if cfg.use_cegat and (self.cegat.w.shape != (d_in, cfg.d_hidden) or self.cegat.variant != cfg.variant):
            raise ConfigurationError(
                f"Attention layer is {self.cegat.variant} {self.cegat.w.shape}, config expects {cfg.variant} {(d_in, cfg.d_hidden)}"
            )
        if self.w_out.shape != (d_embed, num_classes) or self.b_out.shape != (num_classes,):
            raise ConfigurationError(
                f"Classifier has shape {self.w_out.shape}, config expects {(d_embed, num_classes)}"
            )


@dataclass
class IceGradients:
    w_out: np.ndarray
    b_out: np.ndarray
    cegat: Optional[attention_layer.CegatGradients] = None


@dataclass(frozen=True)
class ModelInput:
    """
        x: K x d_comb coarse node features after combining with SVDPool signals;
        attention: input of the attention layer (None when it is disabled).
    """
    x: np.ndarray
    attention: Optional[attention_layer.CoarseGraphInput] = None


@dataclass(frozen=True)
class IceOutput:
    embedding: np.ndarray
    logits: np.ndarray
    diagnostics: dict = field(default_factory=dict)


def combined_dim(cfg, feature_dim):

    if cfg.use_svdpool and cfg.combine == 'concat':
        return feature_dim * (1 + cfg.rank)

    return feature_dim


def init_params(cfg, feature_dim, num_classes):
    """
        Every tensor uniform in [-s, s] with s = 1/sqrt(fan_in); classifier bias zero.
    """

    rng = np.random.default_rng(cfg.seed)
    d_in = combined_dim(cfg, feature_dim)

    attention = None
    d_embed = d_in

    if cfg.use_cegat:
        attention = attention_layer.init_params(cfg.variant, d_in, cfg.d_hidden, rng, leaky_slope=cfg.leaky_slope)
        d_embed = cfg.d_hidden

    bound = 1.0 / np.sqrt(d_embed)
    w_out = rng.uniform(-bound, bound, size=(d_embed, num_classes))

    return IceParams(w_out=w_out, b_out=np.zeros(num_classes), cegat=attention)


def model_input(g, prep, cfg):

    p, cr = prep.partition, prep.coarsening

    # features are divided by the mean cluster size N/K
    scale = p.k / g.n
    x = np.asarray(cr.x_coar) * scale

    if cfg.use_svdpool:

        pooled = np.asarray(prep.components.pooled) * scale

        if cfg.combine == 'concat':
            x = np.concatenate([x] + list(pooled), axis=1)
        else:
            if pooled.shape[2] != x.shape[1]:
                raise ConfigurationError(f"combine=sum needs equal dims, got {x.shape[1]} and {pooled.shape[2]}")
            x = x + pooled.sum(axis=0)

    if not cfg.use_cegat:
        return ModelInput(x=x)

    mask = (np.asarray(cr.a_coar) > 0) | np.eye(p.k, dtype=bool)
    e = np.asarray(prep.entropy.edge_features)

    if cfg.standardize_edge_features:
        e = attention_layer.standardize_edge_features(e, mask, center=cfg.variant == 'gat')

    return ModelInput(x=x, attention=attention_layer.CoarseGraphInput(h=x, e=e, mask=mask))


def forward(mi, params):
    """
        Returns the coarse node representations, the mean readout and the logits.
    """

    z = attention_layer.forward(mi.attention, params.cegat) if params.cegat is not None else mi.x
    embedding = z.mean(axis=0)
    logits = embedding @ params.w_out + params.b_out

    return z, embedding, logits


def backward(mi, params, d_logits):

    z, embedding, _ = forward(mi, params)

    d_w_out = np.outer(embedding, d_logits)
    d_b_out = np.asarray(d_logits, dtype=np.float64).copy()

    if params.cegat is None:
        return IceGradients(w_out=d_w_out, b_out=d_b_out)

    d_embedding = params.w_out @ d_logits
    d_z = np.tile(d_embedding / z.shape[0], (z.shape[0], 1))

    return IceGradients(w_out=d_w_out, b_out=d_b_out, cegat=attention_layer.backward(mi.attention, params.cegat, d_z))


def run_ice(g, cfg, params, prep=None):

    timings = {}

    if prep is None:
        prep = preprocess_graph(
            g, cfg.target_k, cfg.seed, cfg.rank, radius=cfg.radius, weight_by_sqrt_sigma=cfg.weight_by_sqrt_sigma
        )

    timings.update(prep.timings)

    tic = time.time()
    mi = model_input(g, prep, cfg)
    _, embedding, logits = forward(mi, params)
    timings['model'] = time.time() - tic

    logger.debug(f"{g.name or 'graph'}: N = {g.n}, K = {prep.partition.k}, model took {timings['model']:.4f} s")

    diagnostics = {
        'k': prep.partition.k,
        'entropy': prep.entropy.h,
        'reconstruction_residual': prep.reconstruction.residual if cfg.use_svdpool else None,
        'timings': timings,
    }

    return IceOutput(embedding=embedding, logits=logits, diagnostics=diagnostics)


def params_to_tensors(params):

    tensors = {'classifier.w': params.w_out, 'classifier.b': params.b_out}

    if params.cegat is not None:
        tensors.update(attention_layer.params_to_tensors(params.cegat))

    return tensors


def params_from_tensors(tensors):

    return IceParams(
        w_out=tensors['classifier.w'],
        b_out=tensors['classifier.b'],
        cegat=attention_layer.params_from_tensors(tensors) if 'cegat.w' in tensors else None
    )


def save_params(path, params):
    return attention_layer.save_params(path, params_to_tensors(params))


def load_params(path):
    return params_from_tensors(attention_layer.load_params(path))
