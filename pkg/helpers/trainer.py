#!/bin/python
# -*- coding: utf-8 -*-

import logging
import numpy as np
import pandas as pd

from dataclasses import dataclass

from tqdm import tqdm

from helpers import pipeline
from helpers.exceptions import TrainingError
from helpers.preprocessing import PreprocessingCache, preprocess_dataset

logger = logging.getLogger('icepool.trainer')

# (row name, use_cegat, use_svdpool, variant)
ABLATION_ROWS = [
    ('Base', False, False, None),
    ('+CEGAT (EGAT)', True, False, 'egat'),
    ('+CEGAT (GAT)', True, False, 'gat'),
    ('+SVDPool', False, True, None),
    ('+Both (EGAT)', True, True, 'egat'),
    ('+Both (GAT)', True, True, 'gat'),
]

METRICS_COLUMNS = ['epoch', 'loss', 'train_accuracy', 'validation_accuracy']


@dataclass
class TrainResult:
    params: pipeline.IceParams
    metrics: pd.DataFrame
    train_indices: np.ndarray
    validation_indices: np.ndarray


def split_indices(labels, validation_fraction, seed):
    """
        Stratified split: each class is shuffled with the given seed and its first
        round(size * validation_fraction) members go to validation.
    """

    df = pd.DataFrame({'idx': np.arange(len(labels)), 'label': np.asarray(labels)})
    shuffled = df.groupby('label', group_keys=False).sample(frac=1, random_state=seed)

    position = shuffled.groupby('label').cumcount()
    class_size = shuffled.groupby('label')['idx'].transform('size')
    is_validation = position < np.round(class_size * validation_fraction)

    return np.sort(shuffled.idx[~is_validation].values), np.sort(shuffled.idx[is_validation].values)


def stratified_folds(labels, folds, seed):
    """
        fold[idx] in 0..folds-1; every class is spread round-robin over the folds after a seeded shuffle.
    """

    if folds < 2:
        raise ValueError(f"folds must be >= 2, got {folds}")

    df = pd.DataFrame({'idx': np.arange(len(labels)), 'label': np.asarray(labels)})
    shuffled = df.groupby('label', group_keys=False).sample(frac=1, random_state=seed)

    fold = np.empty(len(labels), dtype=np.int64)
    fold[shuffled.idx.values] = shuffled.groupby('label').cumcount().values % folds

    return fold


def _softmax(logits):

    shifted = logits - logits.max()
    expd = np.exp(shifted)

    return expd / expd.sum()


def _model_inputs(ds, cfg, indices, cache):

    preps = preprocess_dataset(ds, cfg, cache=cache, indices=indices)

    return {idx: pipeline.model_input(ds[idx], prep, cfg) for idx, prep in zip(indices, preps)}


def _loss_and_gradients(inputs, labels, params):

    n = len(inputs)
    loss = 0.0
    total = None

    for mi, label in zip(inputs, labels):

        _, _, logits = pipeline.forward(mi, params)
        prob = _softmax(logits)
        loss -= np.log(max(prob[label], np.finfo(np.float64).tiny)) / n

        d_logits = prob.copy()
        d_logits[label] -= 1.0

        grads = pipeline.backward(mi, params, d_logits / n)
        total = grads if total is None else _add(total, grads)

    return loss, total


def _add(total, grads):

    total.w_out += grads.w_out
    total.b_out += grads.b_out

    if total.cegat is not None:
        total.cegat.w += grads.cegat.w
        total.cegat.a += grads.cegat.a
        if total.cegat.w_e is not None:
            total.cegat.w_e += grads.cegat.w_e

    return total


def _step(params, grads, learning_rate):

    params.w_out = params.w_out - learning_rate * grads.w_out
    params.b_out = params.b_out - learning_rate * grads.b_out

    if params.cegat is not None:
        params.cegat.w = params.cegat.w - learning_rate * grads.cegat.w
        params.cegat.a = params.cegat.a - learning_rate * grads.cegat.a
        if params.cegat.w_e is not None:
            params.cegat.w_e = params.cegat.w_e - learning_rate * grads.cegat.w_e


def _accuracy(inputs, labels, params):

    if len(inputs) == 0:
        return np.nan

    predicted = [int(np.argmax(pipeline.forward(mi, params)[2])) for mi in inputs]

    return float(np.mean(np.array(predicted) == np.asarray(labels)))


def train(ds, cfg, train_indices=None, validation_indices=None, cache=None, params=None):
    """
        Full-batch gradient descent on the mean softmax cross-entropy of the training graphs.
        Without explicit indices the dataset is split according to cfg.validation_fraction.
    """

    if len(ds) == 0:
        raise ValueError("Cannot train on an empty dataset")

    if train_indices is None:
        train_indices, validation_indices = split_indices(ds.labels, cfg.validation_fraction, cfg.seed)
    if validation_indices is None:
        validation_indices = np.array([], dtype=np.int64)

    train_indices = np.asarray(train_indices, dtype=np.int64)
    validation_indices = np.asarray(validation_indices, dtype=np.int64)

    cache = PreprocessingCache() if cache is None else cache
    inputs = _model_inputs(ds, cfg, list(train_indices) + list(validation_indices), cache)

    trn_inputs = [inputs[idx] for idx in train_indices]
    val_inputs = [inputs[idx] for idx in validation_indices]
    trn_labels = ds.labels[train_indices]
    val_labels = ds.labels[validation_indices]

    params = pipeline.init_params(cfg, ds.feature_dim, ds.num_classes) if params is None else params.copy()
    params.check(cfg, ds.feature_dim, ds.num_classes)

    records = []

    for epoch in tqdm(range(1, cfg.epochs + 1), disable=cfg.epochs < 10):

        loss, grads = _loss_and_gradients(trn_inputs, trn_labels, params)

        if not np.isfinite(loss):
            raise TrainingError(f"Non-finite loss ({loss}) at epoch {epoch}; try a smaller learning rate")

        _step(params, grads, cfg.learning_rate)

        records.append({
            'epoch': epoch,
            'loss': loss,
            'train_accuracy': _accuracy(trn_inputs, trn_labels, params),
            'validation_accuracy': _accuracy(val_inputs, val_labels, params)
        })

    metrics = pd.DataFrame.from_records(records, columns=METRICS_COLUMNS)

    if len(metrics) > 0:
        last = metrics.iloc[-1]
        logger.info(
            f"Trained for {cfg.epochs} epochs: loss = {last.loss:.4f}, "
            f"train accuracy = {last.train_accuracy:.3f}, validation accuracy = {last.validation_accuracy:.3f}"
        )

    return TrainResult(params=params, metrics=metrics, train_indices=train_indices, validation_indices=validation_indices)


def evaluate(ds, cfg, params, indices=None, cache=None):

    indices = list(range(len(ds))) if indices is None else [int(idx) for idx in indices]
    inputs = _model_inputs(ds, cfg, indices, cache)

    return _accuracy([inputs[idx] for idx in indices], ds.labels[indices], params)


def predict(ds, cfg, params, cache=None):

    params.check(cfg, ds.feature_dim, ds.num_classes)

    indices = list(range(len(ds)))
    preps = preprocess_dataset(ds, cfg, cache=cache, indices=indices)

    records = []

    for idx, prep in zip(indices, preps):

        out = pipeline.run_ice(ds[idx], cfg, params, prep=prep)

        record = {
            'graph': idx + 1,
            'name': ds[idx].name,
            'label': ds[idx].label,
            'predicted': int(np.argmax(out.logits)),
            'k': out.diagnostics['k'],
            'reconstruction_residual': out.diagnostics['reconstruction_residual'],
        }
        record.update({f'logit_{c}': float(v) for c, v in enumerate(out.logits)})
        records.append(record)

    return pd.DataFrame.from_records(records)


def cross_validate(ds, cfg, folds=None, cache=None):
    """
        Returns (per-fold DataFrame, mean test accuracy, std of test accuracies).
    """

    folds = (cfg.folds or 10) if folds is None else folds
    fold_of = stratified_folds(ds.labels, folds, cfg.seed)
    cache = PreprocessingCache() if cache is None else cache

    records = []

    for fold in range(folds):

        tst = np.flatnonzero(fold_of == fold)
        trn = np.flatnonzero(fold_of != fold)

        result = train(ds, cfg, train_indices=trn, validation_indices=tst, cache=cache)
        final = result.metrics.iloc[-1] if len(result.metrics) > 0 else None

        records.append({
            'fold': fold,
            'train_accuracy': final.train_accuracy if final is not None else evaluate(ds, cfg, result.params, trn, cache),
            'test_accuracy': final.validation_accuracy if final is not None else evaluate(ds, cfg, result.params, tst, cache),
        })

    folds_df = pd.DataFrame.from_records(records)

    return folds_df, float(folds_df.test_accuracy.mean()), float(folds_df.test_accuracy.std(ddof=0))


def ablate(ds, base_cfg, cache=None):
    """
        Trains and evaluates every stage combination of ABLATION_ROWS on the same split
        (or the same folds when base_cfg.folds > 0).
    """

    if len(ds) == 0:
        raise ValueError("Cannot ablate on an empty dataset")

    cache = PreprocessingCache() if cache is None else cache
    records = []

    for name, use_cegat, use_svdpool, variant in tqdm(ABLATION_ROWS):

        cfg = base_cfg.updated(use_cegat=use_cegat, use_svdpool=use_svdpool, variant=variant)

        logger.info(f"Ablation row '{name}'...")

        if cfg.folds > 0:
            folds_df, accuracy, accuracy_std = cross_validate(ds, cfg, cache=cache)
            train_accuracy = float(folds_df.train_accuracy.mean())
        else:
            result = train(ds, cfg, cache=cache)
            test_indices = result.validation_indices if len(result.validation_indices) > 0 else result.train_indices
            train_accuracy = evaluate(ds, cfg, result.params, result.train_indices, cache)
            accuracy = evaluate(ds, cfg, result.params, test_indices, cache)
            accuracy_std = np.nan

        if use_svdpool:
            preps = preprocess_dataset(ds, cfg, cache=cache)
            mean_residual = float(np.mean([prep.reconstruction.residual for prep in preps]))
        else:
            mean_residual = np.nan

        records.append({
            'model': name,
            'use_cegat': use_cegat,
            'use_svdpool': use_svdpool,
            'variant': variant if use_cegat else '',
            'train_accuracy': train_accuracy,
            'accuracy': accuracy,
            'accuracy_std': accuracy_std,
            'mean_residual': mean_residual,
        })

        logger.info(f"...done. Accuracy = {accuracy:.3f}.")

    return pd.DataFrame.from_records(records)
