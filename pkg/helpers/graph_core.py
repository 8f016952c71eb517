#!/bin/python
# -*- coding: utf-8 -*-

import os
import logging
import numpy as np
import pandas as pd

from dataclasses import dataclass, field
from typing import Optional, Tuple

from helpers.exceptions import IngestionError, FormatError
from helpers import TU

logger = logging.getLogger('icepool.graph_core')

DEFAULT_MAX_DEGREE_BUCKET = 64

SYNTHETIC_FAMILIES = ('two_community', 'ring_of_cliques')


def _read_only(array, dtype):

    out = np.array(array, dtype=dtype, copy=True)
    out.setflags(write=False)

    return out


@dataclass(frozen=True)
class Graph:
    """
        One graph instance: symmetric binary adjacency A (no self-loops), node features X and class label y.
        Arrays are copied and frozen at construction.
    """
    adjacency: np.ndarray
    features: np.ndarray
    label: int = 0
    name: Optional[str] = None

    def __post_init__(self):

        adjacency = _read_only(self.adjacency, np.int64)
        features = _read_only(self.features, np.float64)

        if adjacency.ndim != 2 or adjacency.shape[0] != adjacency.shape[1]:
            raise ValueError(f"Adjacency must be a square matrix, got shape {adjacency.shape}")
        if not np.isin(adjacency, (0, 1)).all():
            raise ValueError("Adjacency entries must be 0 or 1")
        if not np.array_equal(adjacency, adjacency.T):
            raise ValueError("Adjacency must be symmetric")
        if np.any(np.diag(adjacency) != 0):
            raise ValueError("Adjacency must not contain self-loops")
        if features.ndim != 2 or features.shape[0] != adjacency.shape[0]:
            raise ValueError(f"Features must have one row per node: got {features.shape} for {adjacency.shape[0]} nodes")

        object.__setattr__(self, 'adjacency', adjacency)
        object.__setattr__(self, 'features', features)
        object.__setattr__(self, 'label', int(self.label))

    @property
    def n(self):
        return self.adjacency.shape[0]

    @property
    def feature_dim(self):
        return self.features.shape[1]

    @property
    def degrees(self):
        return self.adjacency.sum(axis=1)

    @property
    def num_edges(self):
        return int(self.adjacency.sum()) // 2


@dataclass(frozen=True)
class Dataset:
    graphs: Tuple[Graph, ...]
    num_classes: int
    feature_dim: int
    name: str = 'dataset'
    # True when features are one-hot node labels, False when they are degree one-hots
    node_labelled: bool = field(default=False)

    def __post_init__(self):

        object.__setattr__(self, 'graphs', tuple(self.graphs))

        for g in self.graphs:
            if not 0 <= g.label < self.num_classes:
                raise ValueError(f"Graph {g.name} has label {g.label}, outside [0, {self.num_classes})")
            if g.feature_dim != self.feature_dim:
                raise ValueError(f"Graph {g.name} has feature dim {g.feature_dim}, expected {self.feature_dim}")

    def __len__(self):
        return len(self.graphs)

    def __getitem__(self, idx):
        return self.graphs[idx]

    def __iter__(self):
        return iter(self.graphs)

    @property
    def labels(self):
        return np.array([g.label for g in self.graphs], dtype=np.int64)


def degree_features(g, max_bucket):
    """
        Row i is one-hot at min(degree(i), max_bucket).
    """

    if max_bucket < 1:
        raise ValueError(f"max_bucket must be >= 1, got {max_bucket}")

    adjacency = g.adjacency if isinstance(g, Graph) else np.asarray(g)
    buckets = np.minimum(adjacency.sum(axis=1), max_bucket)

    out = np.zeros((adjacency.shape[0], max_bucket + 1))
    out[np.arange(adjacency.shape[0]), buckets] = 1.0

    return out


def _degree_cap(adjacencies, cap=DEFAULT_MAX_DEGREE_BUCKET):

    max_degree = max([int(a.sum(axis=1).max()) if a.shape[0] > 0 else 0 for a in adjacencies], default=0)

    return max(1, min(max_degree, cap))


def _read_table(path, n_columns):
    """
        Reads a comma-separated TU file into an integer array, together with the
        1-based file line of every row (blank lines are skipped but still counted).
    """

    try:
        df = pd.read_csv(path, header=None, sep=',', dtype=str, skip_blank_lines=False, skipinitialspace=True)
    except pd.errors.EmptyDataError:
        return np.zeros((0, n_columns), dtype=np.int64), np.zeros(0, dtype=np.int64)
    except pd.errors.ParserError as e:
        raise FormatError(f"Could not parse file: {e}", path)

    df = df.dropna(how='all')

    if len(df) == 0:
        return np.zeros((0, n_columns), dtype=np.int64), np.zeros(0, dtype=np.int64)

    if df.shape[1] < n_columns:
        raise FormatError(f"Expected {n_columns} comma-separated values per line", path, int(df.index[0]) + 1)

    values = df.iloc[:, :n_columns].apply(lambda col: pd.to_numeric(col.str.strip(), errors='coerce'))
    bad = (values.isna() | (values % 1 != 0)).any(axis=1).to_numpy()

    if bad.any():
        line = int(values.index[bad][0]) + 1
        raise FormatError("Expected integer values", path, line)

    return values.to_numpy(dtype=np.int64), df.index.to_numpy() + 1


def _locate_tu_files(root_dir, dataset_name):

    # TU archives unpack into <root>/<DS>/<DS>_*.txt; accept both layouts
    for folder in [os.path.join(root_dir, dataset_name), root_dir]:
        if os.path.isfile(os.path.join(folder, f'{dataset_name}_A.txt')):
            return folder

    return root_dir


def load_tu_dataset(root_dir, dataset_name, max_degree_bucket=DEFAULT_MAX_DEGREE_BUCKET):
    """
        Reads a dataset in the TU flat-file format (1-based node ids).
        cf. https://chrsmrrs.github.io/datasets/docs/format/
    """

    folder = _locate_tu_files(root_dir, dataset_name)

    files = {
        key: os.path.join(folder, f'{dataset_name}_{key}.txt')
        for key in ['A', 'graph_indicator', 'graph_labels', 'node_labels']
    }

    for key in ['A', 'graph_indicator', 'graph_labels']:
        if not os.path.isfile(files[key]):
            raise IngestionError(f"Missing mandatory file: {files[key]}")

    logger.info(f"Loading the {dataset_name} dataset from {folder}...")

    indicator = _read_table(files['graph_indicator'], 1)[0][:, 0]
    edges, edge_lines = _read_table(files['A'], 2)
    graph_labels = _read_table(files['graph_labels'], 1)[0][:, 0]

    n_total = len(indicator)

    out_of_range = ((edges < 1) | (edges > n_total)).any(axis=1)
    if out_of_range.any():
        line = int(edge_lines[out_of_range][0])
        raise FormatError(f"Node id out of range [1, {n_total}]", files['A'], line)

    # nodes of one graph, in ascending global order
    graph_ids, graph_of = np.unique(indicator, return_inverse=True)
    order = np.argsort(graph_of, kind='stable')
    node_groups = np.split(order, np.flatnonzero(np.diff(graph_of[order])) + 1)

    local = np.empty(n_total, dtype=np.int64)
    for nodes in node_groups:
        local[nodes] = np.arange(len(nodes))

    if len(graph_labels) != len(graph_ids):
        raise FormatError(f"Expected {len(graph_ids)} graph labels, found {len(graph_labels)}", files['graph_labels'])

    src = edges[:, 0] - 1
    dst = edges[:, 1] - 1

    crossing = graph_of[src] != graph_of[dst]
    if crossing.any():
        line = int(edge_lines[crossing][0])
        raise FormatError("Edge connects nodes of different graphs", files['A'], line)

    keep = src != dst
    src, dst = src[keep], dst[keep]

    adjacencies = [np.zeros((len(nodes), len(nodes)), dtype=np.int64) for nodes in node_groups]
    for g_idx in np.unique(graph_of[src]):
        sel = graph_of[src] == g_idx
        adjacencies[g_idx][local[src[sel]], local[dst[sel]]] = 1
        adjacencies[g_idx][local[dst[sel]], local[src[sel]]] = 1

    node_labelled = os.path.isfile(files['node_labels'])

    if node_labelled:
        node_labels = _read_table(files['node_labels'], 1)[0][:, 0]
        if len(node_labels) != n_total:
            raise FormatError(f"Expected {n_total} node labels, found {len(node_labels)}", files['node_labels'])
        _, node_codes = np.unique(node_labels, return_inverse=True)
        all_features = np.eye(node_codes.max() + 1)[node_codes] if n_total > 0 else np.zeros((0, 1))
        features = [all_features[nodes] for nodes in node_groups]
    else:
        cap = _degree_cap(adjacencies, max_degree_bucket)
        features = [degree_features(a, cap) for a in adjacencies]

    classes, label_codes = np.unique(graph_labels, return_inverse=True)

    graphs = [
        Graph(adjacency=a, features=x, label=int(y), name=f'{dataset_name}_{gid}')
        for a, x, y, gid in zip(adjacencies, features, label_codes, graph_ids)
    ]

    ds = Dataset(
        graphs=graphs,
        num_classes=len(classes),
        feature_dim=features[0].shape[1] if features else 0,
        name=dataset_name,
        node_labelled=node_labelled
    )

    logger.info(f"...done. {len(ds)} graphs, {ds.num_classes} classes, feature dim = {ds.feature_dim}.")

    return ds


def save_tu_dataset(ds, root_dir, name=None):
    """
        Writes ds in the TU layout under root_dir/<name>/; returns the written files.
    """

    name = name or ds.name

    tu = TU.TU(name)

    for g in ds:
        node_labels = np.argmax(g.features, axis=1) if ds.node_labelled else None
        tu.insert_graph(tu.graph(g.adjacency, g.label, the_node_labels=node_labels, the_name=g.name))

    return tu.write(os.path.join(root_dir, name))


def _two_community(rng, label):

    sizes = rng.integers(6, 11, size=2)
    p_in = 0.6
    p_out = 0.05 if label == 0 else 0.4

    block = np.repeat([0, 1], sizes)
    prob = np.where(block[:, None] == block[None, :], p_in, p_out)

    upper = np.triu(rng.random(prob.shape) < prob, k=1)
    adjacency = (upper | upper.T).astype(np.int64)

    # at least one bridge between the two communities
    if not adjacency[block == 0][:, block == 1].any():
        adjacency[0, sizes[0]] = adjacency[sizes[0], 0] = 1

    return adjacency


def _ring_of_cliques(rng, label):

    n_cliques = 3 if label == 0 else 5
    sizes = rng.integers(3, 6, size=n_cliques)
    offsets = np.concatenate([[0], np.cumsum(sizes)])

    adjacency = np.zeros((offsets[-1], offsets[-1]), dtype=np.int64)

    for c in range(n_cliques):
        adjacency[offsets[c]:offsets[c+1], offsets[c]:offsets[c+1]] = 1
        # last node of clique c to first node of clique c+1, closing the ring
        nxt = (c + 1) % n_cliques
        adjacency[offsets[c+1] - 1, offsets[nxt]] = adjacency[offsets[nxt], offsets[c+1] - 1] = 1

    np.fill_diagonal(adjacency, 0)

    return adjacency


def generate_synthetic(family, count, seed, max_degree_bucket=DEFAULT_MAX_DEGREE_BUCKET):
    """
        Two-class synthetic datasets. Graph i gets label i % 2.
          two_community:   classes differ by inter-community edge density
          ring_of_cliques: classes differ by clique count (3 vs 5)
    """

    if family not in SYNTHETIC_FAMILIES:
        raise ValueError(f"Unknown synthetic family '{family}', expected one of {SYNTHETIC_FAMILIES}")
    if count < 2:
        raise ValueError(f"count must be >= 2, got {count}")

    generator = _two_community if family == 'two_community' else _ring_of_cliques
    rng = np.random.default_rng(seed)

    labels = [idx % 2 for idx in range(count)]
    adjacencies = [generator(rng, label) for label in labels]

    cap = _degree_cap(adjacencies, max_degree_bucket)

    graphs = [
        Graph(adjacency=a, features=degree_features(a, cap), label=label, name=f'{family}_{idx+1}')
        for idx, (a, label) in enumerate(zip(adjacencies, labels))
    ]

    return Dataset(graphs=graphs, num_classes=2, feature_dim=cap + 1, name=family, node_labelled=False)


def dataset_statistics(ds):

    return pd.DataFrame.from_records([{
        'dataset': ds.name,
        '# Graphs': len(ds),
        '# Classes': ds.num_classes,
        'Avg. # Nodes': np.mean([g.n for g in ds]),
        'Avg. # Edges': np.mean([g.num_edges for g in ds]),
    }])


def random_graph(rng, n, edge_probability, label=0, name=None):
    """
        Erdős–Rényi graph G(n, edge_probability) with degree one-hot features.
    """

    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")

    upper = np.triu(rng.random((n, n)) < edge_probability, k=1)
    adjacency = (upper | upper.T).astype(np.int64)
    cap = _degree_cap([adjacency])

    return Graph(adjacency=adjacency, features=degree_features(adjacency, cap), label=label, name=name)
